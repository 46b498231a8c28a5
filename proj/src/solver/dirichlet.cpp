#include <algorithm>
#include <cmath>

#include "solver_internal.hpp"

namespace pmc {
namespace detail {
namespace {

// argmin_q -sqrt(1 - |q|^2) + |q - y|^2 / (2 tau): q = s y/|y| with tau s / sqrt(1 - s^2) + s = |y|.
inline void prox_ball(double& qx, double& qy, double yx, double yy, double tau) {
  const double r = std::sqrt(yx * yx + yy * yy);
  if (r == 0.0) {
    qx = qy = 0.0;
    return;
  }
  // f(s) = tau s / sqrt(1 - s^2) + s - r is convex and increasing on [0, 1): Newton from the right of
  // the root decreases monotonically onto it.
  double s = r < 1.0 ? r : std::sqrt(qx * qx + qy * qy);
  for (int it = 0; it < 100; ++it) {
    const double w2 = 1.0 - s * s;
    const double iw = 1.0 / std::sqrt(w2);
    const double f = tau * s * iw + s - r;
    double next = s - f / (tau * iw / w2 + 1.0);
    if (next >= 1.0) next = 0.5 * (s + 1.0);
    if (next < 0.0) next = 0.0;
    const bool done = std::abs(next - s) <= 1e-14 * (1.0 + s) || (f <= 0.0 && it > 0 && f > -1e-15);
    s = next;
    if (done) break;
  }
  const double c = s / r;
  qx = c * yx;
  qy = c * yy;
}

struct Window {
  int i0, i1, j0, j1;
};

}  // namespace

ScalarField extension_datum(const DomainMask& mask, const SolveConfig& cfg) {
  if (!cfg.phi) return ScalarField(mask.grid());
  if (!(cfg.phi->grid() == mask.grid())) throw Error(ErrorCode::InvalidArgument, "extension datum grid mismatch");
  if (!cfg.phi->all_finite()) throw Error(ErrorCode::InvalidArgument, "extension datum is not finite");
  return *cfg.phi;
}

PdResult minimize_functional(const DomainMask& mask, const ScalarField& h_on, const ScalarField& phi,
                             const SolveConfig& cfg, const PdState* warm) {
  if (cfg.max_iterations <= 0 || cfg.check_every <= 0 || cfg.stall_window <= 0 || !(cfg.energy_tolerance > 0.0) ||
      !(cfg.balance_tolerance > 0.0) || !(cfg.step_ratio > 0.0))
    throw Error(ErrorCode::InvalidArgument, "solver parameters must be positive");
  const Grid& g = mask.grid();
  const int nx = g.nx;
  const double h = g.h;
  const std::size_t n = g.size();

  PdResult res;
  PdState& st = res.state;
  st.u = phi;
  for (std::size_t k = 0; k < n; ++k) {
    if (!mask.inside(k)) continue;
    if (warm)
      st.u[k] = warm->u[k];
    else
      st.u[k] = cfg.initial ? (*cfg.initial)[k] : 0.0;
    if (!std::isfinite(st.u[k])) throw Error(ErrorCode::InvalidArgument, "initial height field is not finite");
  }
  if (warm) {
    st.qx = warm->qx;
    st.qy = warm->qy;
  } else {
    st.qx.assign(n, 0.0);
    st.qy.assign(n, 0.0);
  }

  // Dual cells coupled to a free cell.
  std::vector<std::uint8_t> active(n, 0);
  Window w{nx, -1, g.ny, -1};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const bool a = mask.inside(i, j) || mask.inside(i + 1, j) || mask.inside(i, j + 1);
      if (!a) continue;
      active[g.index(i, j)] = 1;
      w = {std::min(w.i0, i), std::max(w.i1, i), std::min(w.j0, j), std::max(w.j1, j)};
    }
  auto grad = [&](const ScalarField& u, int i, int j, double& gx, double& gy) {
    const std::size_t k = g.index(i, j);
    gx = i + 1 < nx ? (u[k + 1] - u[k]) / h : 0.0;
    gy = j + 1 < g.ny ? (u[k + nx] - u[k]) / h : 0.0;
  };
  if (!warm) {
    for (int j = w.j0; j <= w.j1; ++j)
      for (int i = w.i0; i <= w.i1; ++i) {
        const std::size_t k = g.index(i, j);
        if (!active[k]) continue;
        double gx, gy;
        grad(st.u, i, j, gx, gy);
        const double s = 1.0 / std::sqrt(1.0 + gx * gx + gy * gy);
        st.qx[k] = gx * s;
        st.qy[k] = gy * s;
      }
  }
  std::vector<double> bx = st.qx, by = st.qy;

  const std::optional<ScalarField> phi_opt = phi;
  const CurvatureSpec Hs = CurvatureSpec::field(h_on);
  const double scale = area(mask) + perimeter(mask);
  auto energy_of = [&](const ScalarField& u) { return functional_value(u, mask, Hs, phi_opt); };

  const double L = std::sqrt(8.0) / h;
  const double tau = cfg.step_ratio / L, sigma = 1.0 / (cfg.step_ratio * L);

  ScalarField best_u = st.u;
  double best = energy_of(st.u);
  std::vector<double> best_at_check{best};
  res.trajectory.push_back(best);

  auto balance_of = [&]() {
    double s = 0.0;
    for (int j = w.j0; j <= w.j1; ++j)
      for (int i = w.i0; i <= w.i1; ++i) {
        const std::size_t k = g.index(i, j);
        if (!mask.inside(k)) continue;
        const double div = (st.qx[k] - st.qx[k - 1] + st.qy[k] - st.qy[k - nx]) / h;
        s += std::abs(div - h_on[k]);
      }
    return s * g.cell_area() / scale;
  };

  int it = 0;
  const int window_checks = std::max(1, cfg.stall_window / cfg.check_every);
  while (it < cfg.max_iterations) {
    // Primal step on the free cells with the extrapolated dual.
#pragma omp parallel for schedule(static)
    for (int j = w.j0; j <= w.j1; ++j)
      for (int i = w.i0; i <= w.i1; ++i) {
        const std::size_t k = g.index(i, j);
        if (!mask.inside(k)) continue;
        const double div = (bx[k] - bx[k - 1] + by[k] - by[k - nx]) / h;
        st.u[k] += sigma * (div - h_on[k]);
      }
    // Dual step.
#pragma omp parallel for schedule(static)
    for (int j = w.j0; j <= w.j1; ++j)
      for (int i = w.i0; i <= w.i1; ++i) {
        const std::size_t k = g.index(i, j);
        if (!active[k]) continue;
        double gx, gy;
        grad(st.u, i, j, gx, gy);
        const double ox = st.qx[k], oy = st.qy[k];
        prox_ball(st.qx[k], st.qy[k], ox + tau * gx, oy + tau * gy, tau);
        bx[k] = ox;  // stash the previous dual for extrapolation
        by[k] = oy;
      }
#pragma omp parallel for schedule(static)
    for (int j = w.j0; j <= w.j1; ++j)
      for (int i = w.i0; i <= w.i1; ++i) {
        const std::size_t k = g.index(i, j);
        if (!active[k]) continue;
        bx[k] = 2.0 * st.qx[k] - bx[k];
        by[k] = 2.0 * st.qy[k] - by[k];
      }
    ++it;

    if (it % cfg.check_every == 0 || it == cfg.max_iterations) {
      const double e = energy_of(st.u);
      if (e < best) {
        best = e;
        best_u = st.u;
      }
      res.trajectory.push_back(best);
      best_at_check.push_back(best);
      const std::size_t c = best_at_check.size() - 1;
      if (static_cast<int>(c) >= window_checks) {
        const double drop = best_at_check[c - window_checks] - best;
        if (drop <= cfg.energy_tolerance * scale) {
          res.balance = balance_of();
          if (res.balance <= cfg.balance_tolerance) {
            res.converged = true;
            break;
          }
        }
      }
    }
  }
  if (!res.converged) res.balance = balance_of();
  res.iterations = it;
  res.energy = best;
  st.u = best_u;
  return res;
}

PdResult minimize_multilevel(const DomainMask& mask, const ScalarField& h_on, const ScalarField& phi,
                             const SolveConfig& cfg, const PdState* warm) {
  constexpr std::size_t kCoarsestCells = 3000;
  const Grid& g = mask.grid();
  if (warm || cfg.initial || mask.count() <= kCoarsestCells) return minimize_functional(mask, h_on, phi, cfg, warm);

  // 2x2 coarsening with a two-cell pad: a coarse cell is inside when at least two children are.
  constexpr int pad = 2;
  const Grid cg((g.nx + 1) / 2 + 2 * pad, (g.ny + 1) / 2 + 2 * pad, 2.0 * g.h,
                g.origin - Vec2{2.0 * pad * g.h, 2.0 * pad * g.h});
  std::vector<std::uint8_t> in(cg.size(), 0);
  ScalarField ch(cg), cphi(cg);
  for (int J = 0; J < cg.ny; ++J)
    for (int I = 0; I < cg.nx; ++I) {
      int count = 0;
      double hs = 0.0;
      for (int b = 0; b < 4; ++b) {
        const int i = 2 * (I - pad) + (b & 1), j = 2 * (J - pad) + (b >> 1);
        if (!mask.inside(i, j)) continue;
        ++count;
        hs += h_on(i, j);
      }
      const std::size_t K = cg.index(I, J);
      in[K] = count >= 2;
      ch[K] = in[K] ? hs / count : 0.0;
      cphi[K] = phi.sample(cg.center(I, J));
    }
  std::optional<DomainMask> cmask;
  try {
    cmask.emplace(cg, in);
  } catch (const Error&) {
    return minimize_functional(mask, h_on, phi, cfg, nullptr);
  }
  const PdResult coarse = minimize_multilevel(*cmask, ch, cphi, cfg, nullptr);

  PdState start;
  start.u = ScalarField(g);
  start.qx.assign(g.size(), 0.0);
  start.qy.assign(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j), K = cg.index(i / 2 + pad, j / 2 + pad);
      start.u[k] = coarse.state.u.sample(g.center(i, j));
      start.qx[k] = coarse.state.qx[K];
      start.qy[k] = coarse.state.qy[K];
    }
  PdResult fine = minimize_functional(mask, h_on, phi, cfg, &start);
  fine.iterations += coarse.iterations / 4;
  return fine;
}

}  // namespace detail

SolverReport solve_dirichlet(const DomainMask& mask, const CurvatureSpec& H, const SolveConfig& cfg) {
  const ScalarField h_on = H.on(mask);
  if (cfg.check_pair) {
    const Classification c = classify(mask, H, false);
    if (c.kind != PairClass::Strict)
      throw Error(ErrorCode::RefusedPair, std::string("pair is ") + to_string(c.kind) + ": " + c.reason);
  }
  const ScalarField phi = detail::extension_datum(mask, cfg);
  detail::PdResult r = detail::minimize_multilevel(mask, h_on, phi, cfg, nullptr);
  if (!r.converged)
    throw Error(ErrorCode::NonConvergence, "energy tolerance not met after " + std::to_string(r.iterations) +
                                               " iterations (flux balance " + std::to_string(r.balance) + ")");
  SolverReport out;
  out.solution = {std::move(r.state.u), mask};
  out.energy_trajectory = std::move(r.trajectory);
  out.energy = r.energy;
  out.iterations = r.iterations;
  out.converged = true;
  out.residual = pmc_residual(out.solution.u, mask, H);
  return out;
}

}  // namespace pmc
