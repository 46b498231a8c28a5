#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "solver_internal.hpp"

namespace pmc {
namespace {

// Values on `to` cells missing from `from` are copied from the nearest `from` cell (4-neighbour BFS).
void extend_nearest(ScalarField& u, const std::vector<std::uint8_t>& from, const DomainMask& to) {
  const Grid& g = to.grid();
  std::vector<std::uint8_t> known(from);
  std::deque<std::size_t> queue;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (known[k]) queue.push_back(k);
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    const int i = g.col(k), j = g.row(k);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int a = i + di[d], b = j + dj[d];
      if (!to.inside(a, b)) continue;
      const std::size_t m = g.index(a, b);
      if (known[m]) continue;
      known[m] = 1;
      u[m] = u[k];
      queue.push_back(m);
    }
  }
}

// Shifts u on the domain by the energy-minimizing constant (golden section; F(u + c) is convex in c).
void best_translate(ScalarField& u, const DomainMask& level, const ScalarField& h_on) {
  const CurvatureSpec Hs = CurvatureSpec::field(h_on);
  ScalarField trial = u;
  auto energy = [&](double c) {
    for (std::size_t k = 0; k < u.size(); ++k)
      if (level.inside(k)) trial[k] = u[k] + c;
    return functional_value(trial, level, Hs);
  };
  double lo = -1.0, hi = 1.0;
  while (energy(lo) < energy(0.5 * (lo + hi))) lo -= (hi - lo);
  while (energy(hi) < energy(0.5 * (lo + hi))) hi += (hi - lo);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = energy(a), fb = energy(b);
  while (hi - lo > 1e-4) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = energy(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = energy(b);
    }
  }
  const double c = 0.5 * (lo + hi);
  for (std::size_t k = 0; k < u.size(); ++k)
    if (level.inside(k)) u[k] += c;
}

}  // namespace

ExtremalResult solve_extremal(const DomainMask& mask, const CurvatureSpec& H, const SolveConfig& cfg) {
  if (cfg.ladder_levels < 1 || !(cfg.t0_cells > 0.0))
    throw Error(ErrorCode::InvalidArgument, "ladder needs at least one level and a positive t0");
  const ScalarField h_full = H.on(mask);
  if (cfg.check_pair) {
    const Classification c = classify(mask, H, false);
    if (c.kind != PairClass::Extremal)
      throw Error(ErrorCode::ClassificationMismatch,
                  std::string("solve_extremal needs an extremal pair; got ") + to_string(c.kind) + ": " + c.reason);
  }
  const Grid& g = mask.grid();
  const double diam = domain_diameter(mask);
  ExtremalResult out;
  out.m_cap = cfg.m_cap > 0.0 ? cfg.m_cap : 50.0 * diam;
  if (out.m_cap < 10.0 * diam) throw Error(ErrorCode::InvalidArgument, "M_cap must be at least 10 diameters");
  out.n_plus.assign(g.size(), 0);
  out.n_minus.assign(g.size(), 0);
  out.notes.push_back("extension datum phi = 0 on every ladder level");

  SolveConfig level_cfg = cfg;
  level_cfg.phi.reset();
  const ScalarField zero(g);

  std::optional<detail::PdState> prev;
  std::vector<std::uint8_t> prev_cells;
  for (int j = 0; j < cfg.ladder_levels; ++j) {
    const double t = cfg.t0_cells * g.h * std::ldexp(1.0, -j);
    const Erosion er = interior_approximation(mask, t);
    const DomainMask& level = er.mask;
    if (er.components > 1) out.notes.push_back("level t=" + std::to_string(t) + " dropped erosion components");
    ScalarField h_on = h_full;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (!level.inside(k)) h_on[k] = 0.0;

    detail::PdResult r;
    if (prev) {
      detail::PdState warm = *prev;
      extend_nearest(warm.u, prev_cells, level);
      best_translate(warm.u, level, h_on);
      r = detail::minimize_functional(level, h_on, zero, level_cfg, &warm);
    } else {
      r = detail::minimize_multilevel(level, h_on, zero, level_cfg, nullptr);
    }
    if (!r.converged)
      throw Error(ErrorCode::NonConvergence, "ladder level t=" + std::to_string(t) + " did not converge after " +
                                                 std::to_string(r.iterations) + " iterations");

    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!level.inside(k)) continue;
      if (r.state.u[k] > out.m_cap) out.n_plus[k] = 1;
      if (r.state.u[k] < -out.m_cap) out.n_minus[k] = 1;
    }

    LadderStep step;
    step.t = t;
    step.energy = r.energy;
    step.iterations = r.iterations;
    step.median_shift = area_median(r.state.u, level);
    step.u = median_normalize(HeightField{r.state.u, level});
    step.residual = pmc_residual(step.u.u, level, H);
    step.minimum = lower_bound_probe(step.u);
    if (j == 0) {
      out.compact = level.cells();
    } else {
      step.epigraph_distance = epigraph_distance(step.u.u, out.ladder.back().u.u, out.compact, out.m_cap);
      if (j >= 2 && step.epigraph_distance > 1.2 * out.ladder.back().epigraph_distance) out.epigraph_monotone = false;
    }
    out.ladder.push_back(std::move(step));
    prev = std::move(r.state);
    prev_cells = level.cells();
  }
  out.limit = out.ladder.back().u;
  out.n_empty = std::none_of(out.n_plus.begin(), out.n_plus.end(), [](auto v) { return v != 0; }) &&
                std::none_of(out.n_minus.begin(), out.n_minus.end(), [](auto v) { return v != 0; });
  if (!out.n_empty) out.notes.push_back("cells exceed the blow-up cap: N+ or N- is nonempty");
  if (!out.epigraph_monotone) out.notes.push_back("epigraph distances are not nonincreasing within 20% slack");
  return out;
}

double uniqueness_probe(const DomainMask& mask, const CurvatureSpec& H, const SolveConfig& cfg,
                        const std::vector<double>& seeds, ProbeMode mode, std::uint64_t rng_seed) {
  if (seeds.size() < 2) return 0.0;
  const Grid& g = mask.grid();
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<HeightField> sols;
  std::vector<std::uint8_t> K;
  for (double seed : seeds) {
    SolveConfig c = cfg;
    ScalarField init(g);
    for (std::size_t k = 0; k < g.size(); ++k) init[k] = std::isnan(seed) ? unit(rng) : seed;
    c.initial = std::move(init);
    if (mode == ProbeMode::Extremal) {
      ExtremalResult r = solve_extremal(mask, H, c);
      K = r.compact;
      sols.push_back(std::move(r.limit));
    } else {
      SolverReport r = solve_dirichlet(mask, H, c);
      K = mask.cells();
      sols.push_back(median_normalize(r.solution));
    }
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < sols.size(); ++a)
    for (std::size_t b = a + 1; b < sols.size(); ++b)
      for (std::size_t k = 0; k < g.size(); ++k)
        if (K[k]) worst = std::max(worst, std::abs(sols[a].u[k] - sols[b].u[k]));
  return worst;
}

}  // namespace pmc
