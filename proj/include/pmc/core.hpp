#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmc {

/// Machine-readable failure categories. Every exception thrown by the library
/// carries one of these so that the CLI can write a structured error record.
enum class ErrorCode {
  InvalidArgument,
  DomainDoesNotFit,
  DisconnectedRaster,
  EmptyDomain,
  ErosionEmpty,
  ParameterConstraint,
  OverlappingHoles,
  PointNotOnBoundary,
  ResolutionViolation,
  NonConvergence,
  RefusedPair,
  PairViolated,
  ClassificationMismatch,
  ConfigParse,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  Vec2& operator+=(Vec2 b) {
    x += b.x;
    y += b.y;
    return *this;
  }
  Vec2& operator-=(Vec2 b) {
    x -= b.x;
    y -= b.y;
    return *this;
  }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Uniform cell-centred grid. Cell (i, j) covers
/// [origin.x + i h, origin.x + (i+1) h] x [origin.y + j h, origin.y + (j+1) h].
struct Grid {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  Vec2 origin;

  Grid() = default;
  Grid(int nx, int ny, double h, Vec2 origin);

  /// Smallest grid with spacing h covering [lo, hi] plus `margin` extra cells on every side.
  static Grid covering(Vec2 lo, Vec2 hi, double h, int margin);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx)); }
  int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx)); }
  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  Vec2 center(int i, int j) const { return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h}; }
  Vec2 center(std::size_t k) const { return center(col(k), row(k)); }
  Vec2 upper() const { return {origin.x + nx * h, origin.y + ny * h}; }
  double cell_area() const { return h * h; }

  /// Continuous cell coordinates of a point: cell centres sit at integer values.
  Vec2 to_cell_coords(Vec2 p) const { return {(p.x - origin.x) / h - 0.5, (p.y - origin.y) / h - 0.5}; }

  friend bool operator==(const Grid& a, const Grid& b) = default;
};

/// Real-valued cell samples. Extended-real fields may hold +-infinity
/// (generalized solutions); ordinary fields are expected to be finite.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& grid, double fill = 0.0, bool extended_real = false)
      : grid_(grid), values_(grid.size(), fill), extended_real_(extended_real) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  bool extended_real() const { return extended_real_; }
  void set_extended_real(bool flag) { extended_real_ = flag; }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Bilinear interpolation between cell centres, clamped at the grid edge.
  double sample(Vec2 p) const;

  bool all_finite() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  bool extended_real_ = false;
};

class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& grid, Vec2 fill = {}) : grid_(grid), values_(grid.size(), fill) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  Vec2& operator[](std::size_t k) { return values_[k]; }
  Vec2 operator[](std::size_t k) const { return values_[k]; }
  Vec2& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  Vec2 operator()(int i, int j) const { return values_[grid_.index(i, j)]; }

  std::vector<Vec2>& values() { return values_; }
  const std::vector<Vec2>& values() const { return values_; }

  /// Optional a-priori bound M with max |values| <= M.
  std::optional<double> sup_bound() const { return sup_bound_; }
  void set_sup_bound(std::optional<double> bound) { sup_bound_ = bound; }

  Vec2 sample(Vec2 p) const;
  double max_norm() const;

 private:
  Grid grid_;
  std::vector<Vec2> values_;
  std::optional<double> sup_bound_;
};

}  // namespace pmc
