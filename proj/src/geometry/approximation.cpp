#include <cmath>
#include <algorithm>

#include <Eigen/Dense>

#include "geometry_internal.hpp"
#include "pmc/geometry.hpp"

namespace pmc {

namespace detail {

BandProjection band_projection(const DomainMask& mask, double band) {
  const Grid& g = mask.grid();
  BandProjection out;
  out.d = signed_distance(mask);
  out.in_band.assign(g.size(), 0);
  out.foot.assign(g.size(), ClosestPoint{});
  const ScalarField mol = mollified_indicator(g, mask.cells());
  out.curves = contour(mol, 0.5);

  struct Seg {
    Vec2 a, b;
    std::size_t curve, segment;
    double arc;
  };
  // Segment buckets of side `band` so each query scans its 3x3 neighbourhood.
  const int bx = std::max(1, static_cast<int>(std::ceil(g.nx * g.h / band)));
  const int by = std::max(1, static_cast<int>(std::ceil(g.ny * g.h / band)));
  std::vector<std::vector<Seg>> bucket(static_cast<std::size_t>(bx) * by);
  auto cell_of = [&](Vec2 p, int& i, int& j) {
    i = std::clamp(static_cast<int>((p.x - g.origin.x) / band), 0, bx - 1);
    j = std::clamp(static_cast<int>((p.y - g.origin.y) / band), 0, by - 1);
  };
  for (std::size_t c = 0; c < out.curves.size(); ++c) {
    const Polyline& poly = out.curves[c];
    double arc = 0.0;
    for (std::size_t s = 0; s < poly.segment_count(); ++s) {
      const Vec2 a = poly.segment_start(s), b = poly.segment_end(s);
      int i, j;
      cell_of((a + b) * 0.5, i, j);
      bucket[static_cast<std::size_t>(j) * bx + i].push_back({a, b, c, s, arc});
      arc += norm(b - a);
    }
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(g.size()); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    if (std::abs(out.d[k]) > band) continue;
    const Vec2 p = g.center(k);
    int ci, cj;
    cell_of(p, ci, cj);
    ClosestPoint best;
    best.distance = band;
    bool found = false;
    for (int j = std::max(0, cj - 1); j <= std::min(by - 1, cj + 1); ++j)
      for (int i = std::max(0, ci - 1); i <= std::min(bx - 1, ci + 1); ++i)
        for (const Seg& sg : bucket[static_cast<std::size_t>(j) * bx + i]) {
          const Vec2 ab = sg.b - sg.a;
          const double len2 = dot(ab, ab);
          const double t = len2 > 0.0 ? std::clamp(dot(p - sg.a, ab) / len2, 0.0, 1.0) : 0.0;
          const Vec2 q = sg.a + ab * t;
          const double dist = norm(p - q);
          if (dist < best.distance) {
            best = {q, dist, sg.curve, sg.segment, sg.arc + t * std::sqrt(len2)};
            found = true;
          }
        }
    out.d[k] = mol[k] > 0.5 ? -best.distance : best.distance;
    if (found) {
      out.in_band[k] = 1;
      out.foot[k] = best;
    }
  }
  return out;
}

}  // namespace detail

Erosion interior_approximation(const DomainMask& mask, double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "erosion depth must be positive");
  const Grid& g = mask.grid();
  const ScalarField d = signed_distance(mask);
  std::vector<std::uint8_t> deep(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) deep[k] = d[k] < -t ? 1 : 0;

  std::size_t n = 0;
  const auto label = detail::label_components(g, deep, n);
  if (n == 0) throw Error(ErrorCode::ErosionEmpty, "erosion at depth " + std::to_string(t) + " is empty");
  std::vector<std::size_t> size(n, 0);
  for (int l : label)
    if (l >= 0) ++size[l];
  // Largest component; ties go to the lowest label (first in scan order).
  const int keep = static_cast<int>(std::max_element(size.begin(), size.end()) - size.begin());
  for (std::size_t k = 0; k < g.size(); ++k) deep[k] = label[k] == keep ? 1 : 0;

  Erosion out{DomainMask(g, std::move(deep), mask.margin()), n};
  if (n > 1)
    out.mask.add_warning("erosion at depth " + std::to_string(t) + " split into " + std::to_string(n) +
                         " components; kept the largest");
  return out;
}

ApproxLadder build_ladder(const DomainMask& mask, const std::vector<double>& schedule, double rel_tol) {
  if (schedule.empty()) throw Error(ErrorCode::InvalidArgument, "empty erosion schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0)) throw Error(ErrorCode::InvalidArgument, "erosion depths must be positive");
    if (k > 0 && !(schedule[k] < schedule[k - 1]))
      throw Error(ErrorCode::InvalidArgument, "erosion schedule must be strictly decreasing");
  }
  ApproxLadder ladder;
  ladder.domain_perimeter = perimeter(mask);
  ladder.domain_area = area(mask);
  for (double t : schedule) {
    Erosion e = interior_approximation(mask, t);
    for (const auto& w : e.mask.warnings()) ladder.warnings.push_back(w);
    LadderLevel level{t, std::move(e.mask), 0.0, 0.0};
    level.perimeter = perimeter(level.mask);
    level.area = area(level.mask);
    ladder.levels.push_back(std::move(level));
  }
  const double last = ladder.levels.back().perimeter;
  ladder.perimeter_converges = std::abs(last - ladder.domain_perimeter) <= rel_tol * ladder.domain_perimeter;
  return ladder;
}

MinkowskiEstimate inner_minkowski_content(const DomainMask& mask, const std::vector<double>& schedule) {
  const Grid& g = mask.grid();
  if (schedule.size() < 2) throw Error(ErrorCode::InvalidArgument, "Minkowski fit needs at least two depths");
  for (double e : schedule)
    if (e < 2.0 * g.h) throw Error(ErrorCode::ResolutionViolation, "Minkowski depth below 2h");

  const double emax = *std::max_element(schedule.begin(), schedule.end());
  const ScalarField d = detail::band_projection(mask, emax + 2.0 * detail::mollifier_radius(g.h) + 2.0 * g.h).d;
  // Sub-cell volume of {d < -s}: each cell counts with a one-cell linear ramp in d.
  auto volume_below = [&](double s) {
    double v = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) v += std::clamp((-d[k] - s) / g.h + 0.5, 0.0, 1.0);
    return v * g.cell_area();
  };
  const double omega = volume_below(0.0);
  // shell(eps) = c0 + c1 eps (+ c2 eps^2 with three or more depths). The intercept absorbs the
  // raster offset between the staircase interface and the true boundary.
  const int terms = schedule.size() >= 3 ? 3 : 2;
  Eigen::MatrixXd A(schedule.size(), terms);
  Eigen::VectorXd b(schedule.size());
  for (std::size_t r = 0; r < schedule.size(); ++r) {
    const double e = schedule[r];
    b(r) = omega - volume_below(e);
    A(r, 0) = 1.0;
    A(r, 1) = e;
    if (terms == 3) A(r, 2) = e * e;
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  MinkowskiEstimate est;
  est.content = c(1);
  est.quadratic = terms == 3 ? c(2) : 0.0;
  est.residual = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(schedule.size()));
  return est;
}

}  // namespace pmc
