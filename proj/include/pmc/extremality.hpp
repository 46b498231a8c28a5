#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pmc/core.hpp"
#include "pmc/geometry.hpp"

namespace pmc {

/// Prescribed curvature: a constant or a cell field (only its values on the domain matter).
class CurvatureSpec {
 public:
  CurvatureSpec() = default;
  static CurvatureSpec constant(double value);
  static CurvatureSpec field(ScalarField values, bool continuous = true);

  bool is_constant() const { return std::holds_alternative<double>(value_); }
  double constant_value() const;
  bool continuous() const { return continuous_; }
  CurvatureSpec negated() const;

  /// H on the cells of the mask and 0 elsewhere. Throws InvalidArgument on a grid mismatch or
  /// non-finite values inside the domain.
  ScalarField on(const DomainMask& mask) const;

 private:
  std::variant<double, ScalarField> value_ = 0.0;
  bool continuous_ = true;
};

/// Area-weighted sum of H over the domain cells.
double total_curvature(const DomainMask& mask, const CurvatureSpec& H);

struct DeficitOptions {
  int max_iterations = 20000;
  /// Duality-gap target relative to P(domain).
  double relative_gap = 1e-6;
  /// Stop early once the minimum is certified below this level or certified not below it.
  std::optional<double> decide_at;
};

/// Result of min over u in [0,1], u = 0 off the domain, of (1 - eps) TV(u) - sign * int H u.
struct DeficitReport {
  double epsilon = 0.0;
  int sign = 1;
  double value = 0.0;        // objective of the best point found (<= 0)
  double lower_bound = 0.0;  // certified by the dual iterate
  double gap = 0.0;
  RelaxedIndicator minimizer;
  std::vector<std::uint8_t> threshold_set;  // {u > 1/2}
  double threshold_perimeter = 0.0;         // contour perimeter of the threshold set
  double threshold_area = 0.0;
  double threshold_curvature = 0.0;  // int over the threshold set of H (unsigned)
  int iterations = 0;
  bool converged = false;

  /// Set objective sign * int_A H - (1 - eps) P(A) of the threshold set.
  double threshold_excess() const;
};

DeficitReport subset_deficit(const DomainMask& mask, const CurvatureSpec& H, double epsilon, int sign,
                             const DeficitOptions& options = {});

/// sup{eps : D(eps) >= -tol for both signs}, tol = 1e-3 P. Returns 0 for extremal pairs and 1
/// when H vanishes on the domain. Throws PairViolated.
double epsilon0(const DomainMask& mask, const CurvatureSpec& H);

struct CheegerResult {
  double value = 0.0;  // estimate of h(domain)
  double lower = 0.0;  // relaxed bracket
  double upper = 0.0;
  std::vector<std::uint8_t> set;  // extracted set at the final multiplier
  double set_perimeter = 0.0;
  double set_area = 0.0;
  double set_quotient = 0.0;
  int solves = 0;
  int iterations = 0;
};

CheegerResult cheeger(const DomainMask& mask, double relative_tolerance = 2.5e-3);

enum class PairClass { Strict, Extremal, Violated };
const char* to_string(PairClass c);

struct Classification {
  PairClass kind = PairClass::Strict;
  double epsilon0 = 0.0;
  double total_curvature = 0.0;
  double perimeter = 0.0;
  double tolerance = 0.0;
  /// Sign whose deficit exhibited a violating proper subset (0 when none did).
  int violating_sign = 0;
  std::optional<DeficitReport> witness;
  std::string reason;
};

/// Tolerance used by classify: max(1e-3 P, 3 |P_h - P_2h|) with P_2h measured on the 2x2-coarsened mask.
double classification_tolerance(const DomainMask& mask);

/// With compute_epsilon0 = false a strict pair reports epsilon0 = 0 (not computed).
Classification classify(const DomainMask& mask, const CurvatureSpec& H, bool compute_epsilon0 = true);

struct NormalizedCurvature {
  CurvatureSpec H;
  Classification classification;
  /// True when the normalized pair came out extremal, i.e. the domain behaves as its own Cheeger set.
  bool self_cheeger = false;
};

/// H = P(domain) / |domain| together with the classification of the resulting pair.
NormalizedCurvature normalized_extremal_curvature(const DomainMask& mask);

}  // namespace pmc
