#include <algorithm>
#include <cmath>

#include "pmc/cli.hpp"

namespace pmc {

StabilityReport stability_experiment(const StabilityConfig& cfg) {
  if (!(cfg.k_radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "k_radius must be positive");
  std::vector<SwissCheeseHole> order = swiss_cheese_holes(cfg.a, cfg.delta, cfg.eps, cfg.i_max);
  if (cfg.order == FillOrder::SmallestFirst)
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.radius < y.radius; });
  else if (cfg.order == FillOrder::LargestFirst)
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.radius > y.radius; });

  StabilityReport rep;
  SolveConfig scfg = cfg.solve;
  scfg.check_pair = false;  // each pair is classified here first
  for (std::size_t s = 0; s <= order.size(); ++s) {
    StabilityStep step;
    step.holes_remaining = order.size() - s;
    if (s > 0) step.filled = order[s - 1];
    DiskMinusBalls shape{1.0, {}};
    for (std::size_t q = s; q < order.size(); ++q)
      shape.holes.push_back({{order[q].rho * std::cos(order[q].theta), order[q].rho * std::sin(order[q].theta)},
                             order[q].radius});
    const AnalyticDomain dom(shape);
    const auto [lo, hi] = dom.bounds();
    const DomainMask mask = rasterize(dom, Grid::covering(lo, hi, cfg.h, cfg.margin));
    for (const auto& w : mask.warnings()) rep.notes.push_back("step " + std::to_string(s) + ": " + w);

    const NormalizedCurvature nc = normalized_extremal_curvature(mask);
    step.curvature = nc.H.constant_value();
    step.classification = to_string(nc.classification.kind);
    step.extremal = nc.classification.kind == PairClass::Extremal;
    if (!step.extremal) {
      step.error = "not extremal under H = P/|Omega|: " + nc.classification.reason;
      rep.notes.push_back("step " + std::to_string(s) + " failed the extremality check; sequence stopped");
      rep.steps.push_back(std::move(step));
      break;
    }
    try {
      const ExtremalResult er = solve_extremal(mask, nc.H, scfg);
      for (const auto& l : er.ladder) step.iterations += l.iterations;
      step.solution = er.limit;
      step.solved = true;
      rep.m_cap = er.m_cap;
      if (!er.n_empty) rep.notes.push_back("step " + std::to_string(s) + ": blow-up sets are nonempty");
    } catch (const Error& e) {
      step.error = std::string(to_string(e.code())) + ": " + e.what();
      rep.notes.push_back("step " + std::to_string(s) + " solver failure; gap in the sequence");
    }
    rep.steps.push_back(std::move(step));
  }

  rep.completed = rep.steps.size() == order.size() + 1 &&
                  std::all_of(rep.steps.begin(), rep.steps.end(), [](const auto& s) { return s.extremal && s.solved; });

  const StabilityStep* last = nullptr;
  for (const auto& s : rep.steps)
    if (s.solved) last = &s;
  if (!last) return rep;

  const Grid& g = last->solution->u.grid();
  std::vector<std::uint8_t> K(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (norm(g.center(k)) > cfg.k_radius) continue;
    bool all = true;
    for (const auto& s : rep.steps)
      if (s.solved && !s.solution->mask.inside(k)) all = false;
    K[k] = all;
  }
  rep.k_cells = static_cast<std::size_t>(std::count(K.begin(), K.end(), 1));

  const bool final_is_disk = rep.completed;
  const StabilityStep* prev = nullptr;
  for (auto& s : rep.steps) {
    if (!s.solved) continue;
    if (prev) s.distance_previous = epigraph_distance(s.solution->u, prev->solution->u, K, rep.m_cap);
    if (final_is_disk) s.distance_final = epigraph_distance(s.solution->u, last->solution->u, K, rep.m_cap);
    prev = &s;
  }
  if (final_is_disk) {
    ScalarField hemi(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double r2 = dot(g.center(k), g.center(k));
      hemi[k] = r2 < 1.0 ? -std::sqrt(1.0 - r2) : 0.0;
    }
    const HeightField ref = median_normalize(HeightField{hemi, last->solution->mask});
    rep.final_vs_hemisphere = epigraph_distance(last->solution->u, ref.u, K, rep.m_cap);
    rep.monotone = true;
    double before = -1.0;
    for (const auto& s : rep.steps) {
      if (!s.solved) continue;
      if (before >= 0.0 && s.distance_final > 1.2 * before + 1e-12) rep.monotone = false;
      before = s.distance_final;
    }
  } else {
    rep.notes.push_back("sequence did not reach the disk; distances to the final solution not reported");
  }
  return rep;
}

}  // namespace pmc
