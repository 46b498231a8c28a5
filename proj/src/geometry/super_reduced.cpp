#include <algorithm>

#include "pmc/geometry.hpp"

namespace pmc {

const char* to_string(SuperReduced s) {
  switch (s) {
    case SuperReduced::Yes: return "super-reduced";
    case SuperReduced::No: return "not-super-reduced";
    case SuperReduced::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

SuperReducedReport super_reduced_test(const DomainMask& mask, Vec2 z, const std::vector<double>& scales, double eps) {
  const Grid& g = mask.grid();
  if (scales.empty()) throw Error(ErrorCode::InvalidArgument, "no blow-up scales given");
  for (std::size_t k = 1; k < scales.size(); ++k)
    if (!(scales[k] < scales[k - 1])) throw Error(ErrorCode::InvalidArgument, "blow-up scales must decrease");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "cone aperture must be positive");

  const BoundaryNormals bn = boundary_normals(mask);
  const ClosestPoint foot = closest_boundary_point(bn.curves, z);
  if (foot.distance > g.h)
    throw Error(ErrorCode::PointNotOnBoundary, "probe point is farther than h from the boundary polyline");

  // Normal at the foot point: interpolate the two vertex normals of the containing segment.
  const Polyline& curve = bn.curves[foot.curve];
  std::size_t first_point = 0;
  for (std::size_t c = 0; c < foot.curve; ++c) first_point += bn.curves[c].points.size();
  const std::size_t va = foot.segment, vb = (foot.segment + 1) % curve.points.size();
  const Vec2 a = curve.points[va], b = curve.points[vb];
  const double seg = norm(b - a);
  const double w = seg > 0 ? norm(foot.point - a) / seg : 0.0;
  Vec2 nu = (1 - w) * bn.points[first_point + va].normal + w * bn.points[first_point + vb].normal;
  nu = nu / norm(nu);

  SuperReducedReport rep;
  rep.base_point = foot.point;
  rep.normal = nu;
  rep.scales = scales;
  bool resolved = true;
  for (double r : scales) {
    if (r < 4.0 * g.h) resolved = false;
    double worst = 0.0;
    for (const BoundaryPoint& bp : bn.points) {
      const Vec2 off = bp.position - foot.point;
      const double dist = norm(off);
      // Samples within 2h of the base point only carry raster noise.
      if (dist > r || dist < 2.0 * g.h) continue;
      const Vec2 y = off / r;
      const double depth = -dot(y, nu);  // -d_H(y), positive inside the tangent half-space
      if (depth <= 0.0) continue;
      worst = std::max(worst, depth / norm(y));
    }
    rep.worst_ratio.push_back(worst);
    rep.violated.push_back(worst > eps);
  }

  const std::size_t n = scales.size();
  const bool all_ok = std::none_of(rep.violated.begin(), rep.violated.end(), [](bool v) { return v; });
  const bool persistent = n >= 2 ? (rep.violated[n - 1] && rep.violated[n - 2]) : rep.violated[0];
  if (!resolved)
    rep.verdict = SuperReduced::Inconclusive;
  else if (persistent)
    rep.verdict = SuperReduced::No;
  else if (all_ok)
    rep.verdict = SuperReduced::Yes;
  else
    rep.verdict = SuperReduced::Inconclusive;
  return rep;
}

}  // namespace pmc
