#pragma once

#include <vector>

#include "pmc/core.hpp"
#include "pmc/geometry.hpp"

namespace pmc::detail {

/// 4-connected component labels (-1 for "off" cells).
std::vector<int> label_components(const Grid& g, const std::vector<std::uint8_t>& on, std::size_t& count);

/// Spacing at which the contour mollifier radius equals 2h. Below it the radius grows like
/// sqrt(h) so that staircase bias vanishes under refinement while the interface moves O(h).
inline constexpr double kReferenceSpacing = 1.0 / 64.0;

double mollifier_radius(double h);
/// Width of the Gaussian used to regularize the distance field before differentiating it.
double normal_smoothing_width(double h);

/// Indicator convolved with the normalized radial kernel (1 - r^2/R^2)^2, R = mollifier_radius(h).
ScalarField mollified_indicator(const Grid& g, const std::vector<std::uint8_t>& on);

/// Separable Gaussian blur (sigma in length units), renormalized at the grid edge.
ScalarField gaussian_smooth(const ScalarField& in, double sigma);

/// Central differences of the Gaussian-regularized signed distance of `mask` (not normalized).
VectorField outward_normal_field(const DomainMask& mask);

/// Marching-squares contour of `f` at `level`, chained into polylines with {f > level} on the left.
std::vector<Polyline> contour(const ScalarField& f, double level);

/// Squared distances (in cell units) from every cell centre to the union of closed cell squares
/// marked in `target`. Infinity when `target` is empty.
std::vector<double> squared_distance_to_cells(const Grid& g, const std::vector<std::uint8_t>& target);

/// Contour perimeter of an arbitrary cell set (no connectivity requirement); matches
/// perimeter(DomainMask) when the set is a valid mask.
double set_perimeter(const Grid& g, const std::vector<std::uint8_t>& on);

/// Signed distance to the mollified boundary contour, exact within `band` of the staircase interface
/// and equal to the staircase distance elsewhere; the sign follows the mollified indicator. Cells
/// whose nearest contour point lies within `band` carry that point in `foot`.
struct BandProjection {
  ScalarField d;
  std::vector<std::uint8_t> in_band;
  std::vector<ClosestPoint> foot;
  std::vector<Polyline> curves;
};
BandProjection band_projection(const DomainMask& mask, double band);

/// Length of the part of segment [a,b] inside an axis-aligned region.
double clipped_length(Vec2 a, Vec2 b, const Region& r);

}  // namespace pmc::detail
