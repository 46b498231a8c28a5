#include "pmc/core.hpp"

#include <algorithm>

namespace pmc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DomainDoesNotFit: return "domain-does-not-fit";
    case ErrorCode::DisconnectedRaster: return "disconnected-raster";
    case ErrorCode::EmptyDomain: return "empty-domain";
    case ErrorCode::ErosionEmpty: return "erosion-empty";
    case ErrorCode::ParameterConstraint: return "parameter-constraint";
    case ErrorCode::OverlappingHoles: return "overlapping-holes";
    case ErrorCode::PointNotOnBoundary: return "point-not-on-boundary";
    case ErrorCode::ResolutionViolation: return "resolution-violation";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::RefusedPair: return "refused-pair";
    case ErrorCode::PairViolated: return "pair-violated";
    case ErrorCode::ClassificationMismatch: return "classification-mismatch";
    case ErrorCode::ConfigParse: return "config-parse";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

Grid::Grid(int nx_, int ny_, double h_, Vec2 origin_) : nx(nx_), ny(ny_), h(h_), origin(origin_) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
  if (nx < 8 || ny < 8) throw Error(ErrorCode::InvalidArgument, "grid needs at least 8 cells per axis");
}

Grid Grid::covering(Vec2 lo, Vec2 hi, double h, int margin) {
  if (!(hi.x > lo.x) || !(hi.y > lo.y)) throw Error(ErrorCode::InvalidArgument, "empty bounding box");
  // Snap the origin to a multiple of h so that boxes with grid-aligned corners
  // rasterize onto whole cells.
  const double ox = (std::floor(lo.x / h + 1e-9) - margin) * h;
  const double oy = (std::floor(lo.y / h + 1e-9) - margin) * h;
  const int nx = static_cast<int>(std::ceil(hi.x / h - 1e-9)) + margin - static_cast<int>(std::round(ox / h));
  const int ny = static_cast<int>(std::ceil(hi.y / h - 1e-9)) + margin - static_cast<int>(std::round(oy / h));
  return Grid(std::max(nx, 8), std::max(ny, 8), h, {ox, oy});
}

namespace {

template <class T, class Get>
T bilinear(const Grid& g, Vec2 p, Get get) {
  const Vec2 c = g.to_cell_coords(p);
  const double fx = std::clamp(c.x, 0.0, static_cast<double>(g.nx - 1));
  const double fy = std::clamp(c.y, 0.0, static_cast<double>(g.ny - 1));
  const int i0 = std::min(static_cast<int>(fx), g.nx - 2);
  const int j0 = std::min(static_cast<int>(fy), g.ny - 2);
  const double tx = fx - i0;
  const double ty = fy - j0;
  return (1 - tx) * (1 - ty) * get(i0, j0) + tx * (1 - ty) * get(i0 + 1, j0) + (1 - tx) * ty * get(i0, j0 + 1) +
         tx * ty * get(i0 + 1, j0 + 1);
}

}  // namespace

double ScalarField::sample(Vec2 p) const {
  return bilinear<double>(grid_, p, [this](int i, int j) { return (*this)(i, j); });
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Vec2 VectorField::sample(Vec2 p) const {
  return bilinear<Vec2>(grid_, p, [this](int i, int j) { return (*this)(i, j); });
}

double VectorField::max_norm() const {
  double m = 0.0;
  for (const Vec2& v : values_) m = std::max(m, norm(v));
  return m;
}

}  // namespace pmc
