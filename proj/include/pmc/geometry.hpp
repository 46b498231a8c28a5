#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pmc/core.hpp"

namespace pmc {

/// Binary indicator of a bounded open domain on a grid. Construction validates:
/// at least one interior cell, a single 4-connected interior component, an
/// exterior frame of `margin` cells, and no single-cell exterior cavities
/// (those are filled and reported in `warnings()`).
class DomainMask {
 public:
  DomainMask() = default;

  /// Validating constructor. Throws Error{DisconnectedRaster | EmptyDomain | DomainDoesNotFit}.
  DomainMask(const Grid& grid, std::vector<std::uint8_t> inside, int margin = 2);

  static DomainMask from_predicate(const Grid& grid, const std::function<bool(Vec2)>& inside, int margin = 2);

  const Grid& grid() const { return grid_; }
  int margin() const { return margin_; }
  bool inside(std::size_t k) const { return inside_[k] != 0; }
  bool inside(int i, int j) const { return grid_.contains(i, j) && inside_[grid_.index(i, j)] != 0; }
  const std::vector<std::uint8_t>& cells() const { return inside_; }
  std::size_t count() const;

  /// True when every interior cell of *this is also interior in `other` (same grid).
  bool subset_of(const DomainMask& other) const;

  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  Grid grid_;
  std::vector<std::uint8_t> inside_;
  int margin_ = 2;
  std::vector<std::string> warnings_;
};

/// [0,1]-valued field supported in a domain; the variable of the relaxed set problems.
class RelaxedIndicator {
 public:
  RelaxedIndicator() = default;
  /// Values are clamped to [0,1] and zeroed outside the mask.
  RelaxedIndicator(const DomainMask& support, ScalarField values);
  static RelaxedIndicator constant(const DomainMask& support, double value);

  const ScalarField& field() const { return values_; }
  const Grid& grid() const { return values_.grid(); }
  double operator[](std::size_t k) const { return values_[k]; }

  /// {u > level} as a cell set (ties excluded).
  std::vector<std::uint8_t> threshold(double level = 0.5) const;

 private:
  ScalarField values_;
};

// ---------------------------------------------------------------------------
// Analytic domains

struct Disk {
  Vec2 center;
  double radius = 1.0;
};

struct Box {
  Vec2 corner;
  double side = 1.0;
};

struct Hole {
  Vec2 center;
  double radius = 0.0;
};

/// Unit-centred disk of radius `radius` with closed balls removed.
struct DiskMinusBalls {
  double radius = 1.0;
  std::vector<Hole> holes;
};

class AnalyticDomain {
 public:
  using Variant = std::variant<Disk, Box, DiskMinusBalls>;

  explicit AnalyticDomain(Variant v);

  const Variant& shape() const { return shape_; }
  std::string tag() const;
  bool contains(Vec2 p) const;
  double exact_area() const;
  double exact_perimeter() const;
  /// Axis-aligned bounding box (lower, upper).
  std::pair<Vec2, Vec2> bounds() const;

 private:
  Variant shape_;
};


/// Cell is interior iff its centre lies in the domain. Holes with radius below h/2
/// are dropped with a warning on the returned mask.
DomainMask rasterize(const AnalyticDomain& dom, const Grid& grid);

/// Holes accumulating at the boundary of the unit disk, per the porous disk construction:
/// rho_ij = 1 - eps / a^(i^2+j), r_ij = delta / a^(2i^2+2j), theta_ij = (pi/2) j / (i+1), 1 <= j <= i <= i_max.
AnalyticDomain swiss_cheese(double a, double delta, double eps, int i_max);

struct SwissCheeseHole {
  int i = 0;
  int j = 0;
  double rho = 0.0;
  double radius = 0.0;
  double theta = 0.0;
};
std::vector<SwissCheeseHole> swiss_cheese_holes(double a, double delta, double eps, int i_max);

// ---------------------------------------------------------------------------
// Distance and measures

/// Signed Euclidean distance from cell centres to the inside/outside cell interface,
/// negative inside.
ScalarField signed_distance(const DomainMask& mask);

double area(const DomainMask& mask);
double area(const RelaxedIndicator& u);

/// Axis-aligned window for relative perimeters P(E; A).
struct Region {
  Vec2 lo;
  Vec2 hi;
  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
};

/// Binary masks: length of the 0.5 contour of the indicator mollified at radius 2h.
double perimeter(const DomainMask& mask, std::optional<Region> region = std::nullopt);
/// Relaxed fields: isotropic forward-difference total variation.
double perimeter(const RelaxedIndicator& u, std::optional<Region> region = std::nullopt);
/// Isotropic forward-difference total variation of an arbitrary field (zero-flux at the grid edge).
double total_variation(const ScalarField& u);

// ---------------------------------------------------------------------------
// Boundary polylines

struct Polyline {
  std::vector<Vec2> points;
  bool closed = true;

  double length() const;
  std::size_t segment_count() const { return closed ? points.size() : (points.empty() ? 0 : points.size() - 1); }
  Vec2 segment_start(std::size_t s) const { return points[s]; }
  Vec2 segment_end(std::size_t s) const { return points[(s + 1) % points.size()]; }
};

/// The 0.5 contour of the mollified indicator, chained into polylines.
/// Interior lies to the left of each polyline (counter-clockwise outer boundaries).
std::vector<Polyline> boundary_polylines(const DomainMask& mask);

struct BoundaryPoint {
  Vec2 position;
  Vec2 normal;  ///< outward unit normal
  std::size_t curve = 0;
  std::size_t vertex = 0;
};

struct BoundaryNormals {
  std::vector<Polyline> curves;
  std::vector<BoundaryPoint> points;
  double total_length = 0.0;
};

/// Polyline vertices with outward normals from central differences of the signed distance.
BoundaryNormals boundary_normals(const DomainMask& mask);

/// Nearest point on a set of polylines.
struct ClosestPoint {
  Vec2 point;
  double distance = 0.0;
  std::size_t curve = 0;
  std::size_t segment = 0;
  double arclength = 0.0;  ///< arclength position along `curve`
};
ClosestPoint closest_boundary_point(const std::vector<Polyline>& curves, Vec2 p);

// ---------------------------------------------------------------------------
// Interior approximation

struct Erosion {
  DomainMask mask;
  std::size_t components = 0;  ///< components of {d < -t}; >1 means pieces were dropped
};

/// Largest 4-connected component of {d < -t}. Throws ErosionEmpty.
Erosion interior_approximation(const DomainMask& mask, double t);

struct LadderLevel {
  double t = 0.0;
  DomainMask mask;
  double perimeter = 0.0;
  double area = 0.0;
};

struct ApproxLadder {
  std::vector<LadderLevel> levels;
  double domain_perimeter = 0.0;
  double domain_area = 0.0;
  /// |P(Omega_t) - P(Omega)| at the finest level is within the relative tolerance.
  bool perimeter_converges = false;
  std::vector<std::string> warnings;
};

/// `schedule` must be strictly decreasing and positive.
ApproxLadder build_ladder(const DomainMask& mask, const std::vector<double>& schedule, double rel_tol = 0.03);

struct MinkowskiEstimate {
  double content = 0.0;   ///< fitted linear coefficient of |Omega \ Omega_eps|
  double quadratic = 0.0;
  double residual = 0.0;  ///< RMS residual of the fit
};

/// Least-squares fit |Omega \ Omega_eps| ~ c0 + c1 eps + c2 eps^2 over the schedule (quadratic term
/// only with three or more depths); c1 estimates the inner Minkowski content. Depths below 2h are rejected.
MinkowskiEstimate inner_minkowski_content(const DomainMask& mask, const std::vector<double>& schedule);

// ---------------------------------------------------------------------------
// Super-reduced boundary probe

enum class SuperReduced { Yes, No, Inconclusive };
const char* to_string(SuperReduced s);

struct SuperReducedReport {
  SuperReduced verdict = SuperReduced::Inconclusive;
  Vec2 base_point;
  Vec2 normal;
  std::vector<double> scales;
  std::vector<double> worst_ratio;  ///< max over samples of -d_H(y)/|y| at each scale
  std::vector<bool> violated;
};

/// Blow-up cone test at boundary point z: at each scale r, boundary samples y = (p - z)/r in the unit
/// ball lying in the tangent half-space must satisfy -d_H(y) <= eps |y|.
SuperReducedReport super_reduced_test(const DomainMask& mask, Vec2 z, const std::vector<double>& scales, double eps);

}  // namespace pmc
