#include "pmc/extremality.hpp"

#include <algorithm>
#include <cmath>

#include "../geometry/geometry_internal.hpp"
#include "relaxed_tv.hpp"

namespace pmc {

// ---------------------------------------------------------------------------
// CurvatureSpec

CurvatureSpec CurvatureSpec::constant(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "curvature must be finite");
  CurvatureSpec s;
  s.value_ = value;
  return s;
}

CurvatureSpec CurvatureSpec::field(ScalarField values, bool continuous) {
  CurvatureSpec s;
  s.value_ = std::move(values);
  s.continuous_ = continuous;
  return s;
}

double CurvatureSpec::constant_value() const {
  if (!is_constant()) throw Error(ErrorCode::InvalidArgument, "curvature is not constant");
  return std::get<double>(value_);
}

CurvatureSpec CurvatureSpec::negated() const {
  CurvatureSpec s = *this;
  if (is_constant()) {
    s.value_ = -std::get<double>(value_);
  } else {
    for (double& v : std::get<ScalarField>(s.value_).values()) v = -v;
  }
  return s;
}

ScalarField CurvatureSpec::on(const DomainMask& mask) const {
  const Grid& g = mask.grid();
  ScalarField out(g, 0.0);
  if (is_constant()) {
    const double c = std::get<double>(value_);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (mask.inside(k)) out[k] = c;
    return out;
  }
  const ScalarField& f = std::get<ScalarField>(value_);
  if (!(f.grid() == g)) throw Error(ErrorCode::InvalidArgument, "curvature field grid does not match the mask");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!mask.inside(k)) continue;
    if (!std::isfinite(f[k])) throw Error(ErrorCode::InvalidArgument, "curvature is not finite on the domain");
    out[k] = f[k];
  }
  return out;
}

double total_curvature(const DomainMask& mask, const CurvatureSpec& H) {
  const ScalarField f = H.on(mask);
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (mask.inside(k)) s += f[k];
  return s * mask.grid().cell_area();
}

// ---------------------------------------------------------------------------
// Subset deficit

double DeficitReport::threshold_excess() const {
  return sign * threshold_curvature - (1.0 - epsilon) * threshold_perimeter;
}

namespace {

struct DeficitRun {
  DeficitReport report;
  detail::TvState state;
};

DeficitRun deficit_impl(const DomainMask& mask, const ScalarField& h_on, double perimeter, double epsilon, int sign,
                        const DeficitOptions& opt, const detail::TvState* warm) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0, 1)");
  if (sign != 1 && sign != -1) throw Error(ErrorCode::InvalidArgument, "sign must be +1 or -1");
  const Grid& g = mask.grid();
  detail::TvProblem p{g, mask.cells(), std::vector<double>(g.size(), 0.0), 1.0 - epsilon};
  for (std::size_t k = 0; k < g.size(); ++k) p.c[k] = sign * h_on[k];
  detail::TvStop stop;
  stop.max_iter = opt.max_iterations;
  stop.gap_tol = opt.relative_gap * perimeter;
  stop.decide_at = opt.decide_at;
  detail::TvSolution sol = warm ? detail::solve_relaxed_tv(p, stop, warm) : detail::solve_relaxed_tv_multilevel(p, stop);

  DeficitRun run;
  DeficitReport& r = run.report;
  r.epsilon = epsilon;
  r.sign = sign;
  // u = 0 is feasible, so the minimum never exceeds 0.
  r.value = std::min(0.0, sol.primal);
  r.lower_bound = std::min(sol.dual, r.value);
  r.gap = r.value - r.lower_bound;
  r.iterations = sol.iterations;
  r.converged = sol.converged;
  ScalarField u(g, 0.0);
  if (sol.primal <= 0.0) u.values() = sol.state.u;
  r.minimizer = RelaxedIndicator(mask, u);
  r.threshold_set = r.minimizer.threshold(0.5);
  double a = 0.0, hc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!r.threshold_set[k]) continue;
    a += 1.0;
    hc += h_on[k];
  }
  r.threshold_area = a * g.cell_area();
  r.threshold_curvature = hc * g.cell_area();
  r.threshold_perimeter = a > 0.0 ? detail::set_perimeter(g, r.threshold_set) : 0.0;
  run.state = std::move(sol.state);
  return run;
}

bool proper_subset(const DomainMask& mask, const std::vector<std::uint8_t>& set) {
  std::size_t in = 0, diff = 0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (set[k]) ++in;
    if ((set[k] != 0) != mask.inside(k)) ++diff;
  }
  return in > 0 && static_cast<double>(diff) > 0.01 * static_cast<double>(mask.count());
}

// Outcome of testing "D(eps) >= -tol for both signs".
struct Certification {
  bool holds = false;
  bool undecided = false;
  /// 1 - |int_A H| / P(A) for a threshold set A that failed the test (an upper bound on eps0).
  std::optional<double> set_bound;
};

Certification certify(const DomainMask& mask, const ScalarField& h_on, double perimeter, double eps, double tol,
                      std::vector<std::optional<detail::TvState>>& warm) {
  Certification c;
  c.holds = true;
  for (int s = 0; s < 2; ++s) {
    const int sign = s == 0 ? 1 : -1;
    DeficitOptions opt;
    opt.decide_at = -tol;
    DeficitRun run = deficit_impl(mask, h_on, perimeter, eps, sign, opt, warm[s] ? &*warm[s] : nullptr);
    warm[s] = std::move(run.state);
    const DeficitReport& r = run.report;
    if (r.lower_bound >= -tol) continue;
    c.holds = false;
    if (r.value >= -tol) {
      c.undecided = true;
      continue;
    }
    if (r.threshold_perimeter > 0.0) {
      const double b = 1.0 - std::abs(r.threshold_curvature) / r.threshold_perimeter;
      c.set_bound = c.set_bound ? std::min(*c.set_bound, b) : b;
    }
  }
  return c;
}

double epsilon0_impl(const DomainMask& mask, const ScalarField& h_on, double perimeter, double total) {
  bool vanishing = true;
  for (std::size_t k = 0; k < h_on.size(); ++k)
    if (mask.inside(k) && h_on[k] != 0.0) vanishing = false;
  if (vanishing) return 1.0;

  const double tol = 1e-3 * perimeter;
  // The domain itself is a competitor: eps0 <= 1 - |int H| / P.
  double hi = std::min(1.0 - std::abs(total) / perimeter, 0.999);
  if (hi <= 0.0) return 0.0;
  std::vector<std::optional<detail::TvState>> warm(2);
  Certification top = certify(mask, h_on, perimeter, hi, tol, warm);
  if (top.holds) return hi;
  if (top.set_bound) hi = std::min(hi, std::max(0.0, *top.set_bound));
  double lo = 0.0;
  while (hi - lo > 2e-3) {
    const double mid = 0.5 * (lo + hi);
    const Certification c = certify(mask, h_on, perimeter, mid, tol, warm);
    if (c.holds) {
      lo = mid;
    } else {
      hi = mid;
      if (c.set_bound && *c.set_bound > lo) hi = std::min(hi, *c.set_bound);
    }
  }
  return lo;
}

}  // namespace

DeficitReport subset_deficit(const DomainMask& mask, const CurvatureSpec& H, double epsilon, int sign,
                             const DeficitOptions& options) {
  return deficit_impl(mask, H.on(mask), perimeter(mask), epsilon, sign, options, nullptr).report;
}

// ---------------------------------------------------------------------------
// Classification

const char* to_string(PairClass c) {
  switch (c) {
    case PairClass::Strict:
      return "strict";
    case PairClass::Extremal:
      return "extremal";
    case PairClass::Violated:
      return "violated";
  }
  return "?";
}

double classification_tolerance(const DomainMask& mask) {
  const Grid& g = mask.grid();
  const double p = perimeter(mask);
  double err = 0.0;
  if (g.nx / 2 >= 8 && g.ny / 2 >= 8) {
    const Grid cg(g.nx / 2, g.ny / 2, 2.0 * g.h, g.origin);
    std::vector<std::uint8_t> coarse(cg.size(), 0);
    for (int J = 0; J < cg.ny; ++J)
      for (int I = 0; I < cg.nx; ++I) {
        int n = 0;
        for (int b = 0; b < 4; ++b) n += mask.inside(2 * I + (b & 1), 2 * J + (b >> 1)) ? 1 : 0;
        coarse[cg.index(I, J)] = n >= 2 ? 1 : 0;
      }
    err = std::abs(p - detail::set_perimeter(cg, coarse));
  }
  return std::max(1e-3 * p, 3.0 * err);
}

Classification classify(const DomainMask& mask, const CurvatureSpec& H, bool compute_epsilon0) {
  const ScalarField h_on = H.on(mask);
  Classification out;
  out.perimeter = perimeter(mask);
  out.total_curvature = total_curvature(mask, H);
  out.tolerance = classification_tolerance(mask);
  const double P = out.perimeter, I = std::abs(out.total_curvature), tol = out.tolerance;

  if (I > P + tol) {
    out.kind = PairClass::Violated;
    out.reason = "|int H| exceeds the perimeter of the domain";
    return out;
  }
  for (int sign : {1, -1}) {
    DeficitOptions opt;
    opt.decide_at = -tol;
    DeficitReport r = deficit_impl(mask, h_on, P, 0.0, sign, opt, nullptr).report;
    if (r.lower_bound >= -tol) continue;
    if (r.value >= -tol)
      throw Error(ErrorCode::NonConvergence, "subset deficit undecided after " + std::to_string(r.iterations) +
                                                 " iterations (gap " + std::to_string(r.gap) + ")");
    if (proper_subset(mask, r.threshold_set)) {
      out.kind = PairClass::Violated;
      out.violating_sign = sign;
      out.reason = "a proper subset violates the isoperimetric condition";
      out.witness = std::move(r);
      return out;
    }
  }
  if (std::abs(I - P) <= tol) {
    out.kind = PairClass::Extremal;
    out.epsilon0 = 0.0;
    out.reason = "|int H| matches the perimeter and no proper subset violates";
    return out;
  }
  out.kind = PairClass::Strict;
  out.epsilon0 = compute_epsilon0 ? epsilon0_impl(mask, h_on, P, out.total_curvature) : 0.0;
  out.reason = "every subset satisfies the strict inequality";
  return out;
}

double epsilon0(const DomainMask& mask, const CurvatureSpec& H) {
  const Classification c = classify(mask, H);
  if (c.kind == PairClass::Violated) throw Error(ErrorCode::PairViolated, c.reason);
  return c.epsilon0;
}

NormalizedCurvature normalized_extremal_curvature(const DomainMask& mask) {
  NormalizedCurvature out;
  out.H = CurvatureSpec::constant(perimeter(mask) / area(mask));
  out.classification = classify(mask, out.H);
  out.self_cheeger = out.classification.kind == PairClass::Extremal;
  return out;
}

// ---------------------------------------------------------------------------
// Cheeger constant

CheegerResult cheeger(const DomainMask& mask, double relative_tolerance) {
  if (!(relative_tolerance > 0.0 && relative_tolerance < 0.5))
    throw Error(ErrorCode::InvalidArgument, "relative tolerance must lie in (0, 0.5)");
  const Grid& g = mask.grid();
  const double P = perimeter(mask);
  const double slack = 1e-4 * P;
  std::vector<double> chi(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) chi[k] = mask.inside(k) ? 1.0 : 0.0;

  CheegerResult out;
  // The domain's own relaxed quotient bounds the relaxed constant from above.
  out.upper = detail::upwind_tv(g, chi) / area(mask);
  out.set = mask.cells();
  std::optional<detail::TvState> warm;
  for (int round = 0; round < 40; ++round) {
    const double lambda = out.upper * (1.0 - relative_tolerance);
    detail::TvProblem p{g, mask.cells(), std::vector<double>(g.size(), lambda), 1.0};
    detail::TvStop stop;
    stop.gap_tol = 1e-6 * P;
    stop.decide_at = -slack;
    detail::TvSolution sol = warm ? detail::solve_relaxed_tv(p, stop, &*warm) : detail::solve_relaxed_tv_multilevel(p, stop);
    ++out.solves;
    out.iterations += sol.iterations;
    if (sol.dual >= -slack) {
      // Nothing beats lambda by more than the slack: lambda is a (slack-)certified lower bound.
      out.lower = lambda;
      break;
    }
    if (sol.primal >= -slack)
      throw Error(ErrorCode::NonConvergence, "Cheeger subproblem undecided at lambda = " + std::to_string(lambda));
    // Dinkelbach step: the improving point has a smaller quotient. Near the critical multiplier
    // the relaxed minimizer can sit below 1/2 everywhere; the quotient is scale invariant, so
    // rescale to unit peak before thresholding.
    const double peak = *std::max_element(sol.state.u.begin(), sol.state.u.end());
    for (double& v : sol.state.u) v /= peak;
    double mass = 0.0;
    for (double v : sol.state.u) mass += v;
    mass *= g.cell_area();
    out.upper = std::min(lambda, detail::upwind_tv(g, sol.state.u) / mass);
    out.set = RelaxedIndicator(mask, [&] {
                ScalarField f(g);
                f.values() = sol.state.u;
                return f;
              }()).threshold(0.5);
    warm = std::move(sol.state);
  }
  if (out.lower == 0.0) throw Error(ErrorCode::NonConvergence, "Cheeger bisection did not close");
  out.value = 0.5 * (out.lower + out.upper);
  std::size_t n = 0;
  for (auto v : out.set) n += v;
  out.set_area = static_cast<double>(n) * g.cell_area();
  out.set_perimeter = n > 0 ? detail::set_perimeter(g, out.set) : 0.0;
  out.set_quotient = n > 0 ? out.set_perimeter / out.set_area : 0.0;
  return out;
}

}  // namespace pmc
