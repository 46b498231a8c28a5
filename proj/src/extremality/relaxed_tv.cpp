#include "relaxed_tv.hpp"

#include <algorithm>
#include <cmath>

namespace pmc::detail {

namespace {

// Work window: bounding box of the support grown by two cells. The outer ring is a frozen guard
// so the update loops need no edge tests; it may extend past the grid (support is never there).
struct Window {
  int i0 = 0, j0 = 0, w = 0, hgt = 0;
  std::size_t size() const { return static_cast<std::size_t>(w) * static_cast<std::size_t>(hgt); }
};

Window window_of(const Grid& g, const std::vector<std::uint8_t>& support) {
  int i0 = g.nx, i1 = -1, j0 = g.ny, j1 = -1;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!support[k]) continue;
    i0 = std::min(i0, g.col(k));
    i1 = std::max(i1, g.col(k));
    j0 = std::min(j0, g.row(k));
    j1 = std::max(j1, g.row(k));
  }
  if (i1 < 0) return {};
  return {i0 - 2, j0 - 2, i1 - i0 + 5, j1 - j0 + 5};
}

// Sum of per-row partials in row order, so threaded runs reduce deterministically.
double ordered_sum(const std::vector<double>& rows) {
  double s = 0.0;
  for (double r : rows) s += r;
  return s;
}

inline double pos2(double x) { return x > 0.0 ? x * x : 0.0; }

// Upwind magnitude at cell (i,j) of a w x ht row-major array; outside neighbours are ignored.
inline double upwind_mag(const double* u, int i, int j, int w, int ht) {
  const std::size_t l = static_cast<std::size_t>(j) * w + i;
  double s = 0.0;
  if (i + 1 < w) s += pos2(u[l] - u[l + 1]);
  if (i > 0) s += pos2(u[l] - u[l - 1]);
  if (j + 1 < ht) s += pos2(u[l] - u[l + w]);
  if (j > 0) s += pos2(u[l] - u[l - w]);
  return std::sqrt(s);
}

}  // namespace

double upwind_tv(const Grid& g, const std::vector<double>& u) {
  std::vector<double> rows(g.ny, 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.ny; ++j) {
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i) s += upwind_mag(u.data(), i, j, g.nx, g.ny);
    rows[j] = s;
  }
  return g.h * ordered_sum(rows);
}

double relaxed_objective(const TvProblem& p, const std::vector<double>& u_in) {
  const Grid& g = p.grid;
  std::vector<double> u(g.size(), 0.0);
  double lin = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!p.support[k]) continue;
    u[k] = std::clamp(u_in[k], 0.0, 1.0);
    lin += p.c[k] * u[k];
  }
  return p.kappa * upwind_tv(g, u) - g.cell_area() * lin;
}

TvSolution solve_relaxed_tv(const TvProblem& p, const TvStop& stop, const TvState* warm) {
  const Grid& g = p.grid;
  const double h = g.h;
  const Window win = window_of(g, p.support);
  TvSolution out;
  out.state.u.assign(g.size(), 0.0);
  for (auto& c : out.state.p) c.assign(g.size(), 0.0);
  if (win.size() == 0) {
    out.converged = true;
    return out;
  }

  const int w = win.w, ht = win.hgt;
  const std::size_t n = win.size();
  // Grid index of window cell (li, lj), or -1 past the grid edge.
  auto global = [&](int li, int lj) -> std::ptrdiff_t {
    const int i = win.i0 + li, j = win.j0 + lj;
    return g.contains(i, j) ? static_cast<std::ptrdiff_t>(g.index(i, j)) : -1;
  };
  std::vector<double> u(n, 0.0), ub, hc(n, 0.0);
  std::array<std::vector<double>, 4> q;
  for (auto& c : q) c.assign(n, 0.0);
  std::vector<std::uint8_t> sup(n, 0);
  for (int lj = 1; lj + 1 < ht; ++lj)
    for (int li = 1; li + 1 < w; ++li) {
      const std::size_t l = static_cast<std::size_t>(lj) * w + li;
      const std::ptrdiff_t k = global(li, lj);
      if (k < 0) continue;
      sup[l] = p.support[k];
      hc[l] = sup[l] ? h * p.c[k] : 0.0;
      if (warm) {
        u[l] = sup[l] ? std::clamp(warm->u[k], 0.0, 1.0) : 0.0;
        for (int d = 0; d < 4; ++d) q[d][l] = warm->p[d][k];
      }
    }
  ub = u;

  // Diagonally preconditioned steps: each dual row holds two unit entries (sigma = 1/2), each
  // primal column eight (tau = 1/8).
  const double tau = 0.125, sigma = 0.5, kappa = p.kappa;
  double* q0 = q[0].data();
  double* q1 = q[1].data();
  double* q2 = q[2].data();
  double* q3 = q[3].data();
  // (D^T q)_l: own components minus the neighbours' components that point back at l.
  auto adjoint = [&](std::size_t l) {
    return q0[l] + q1[l] + q2[l] + q3[l] - q1[l + 1] - q0[l - 1] - q3[l + w] - q2[l - w];
  };

  std::vector<double> rows_a(ht, 0.0), rows_b(ht, 0.0);
  auto evaluate = [&](double& primal, double& dual) {
#pragma omp parallel for schedule(static)
    for (int lj = 1; lj < ht - 1; ++lj) {
      double tv = 0.0, lin = 0.0, dv = 0.0;
      for (int li = 1; li < w - 1; ++li) {
        const std::size_t l = static_cast<std::size_t>(lj) * w + li;
        tv += upwind_mag(u.data(), li, lj, w, ht);
        if (sup[l]) {
          lin += hc[l] * u[l];
          dv += std::min(0.0, adjoint(l) - hc[l]);
        }
      }
      rows_a[lj] = kappa * tv - lin;
      rows_b[lj] = dv;
    }
    primal = h * ordered_sum(rows_a);
    dual = h * ordered_sum(rows_b);
  };

  // Objective of the 0.5-superlevel set of the current iterate: often a far better upper bound
  // than the fractional iterate itself.
  std::vector<double> cut(n, 0.0);
  auto threshold_value = [&]() {
    for (std::size_t l = 0; l < n; ++l) cut[l] = u[l] > 0.5 ? 1.0 : 0.0;
#pragma omp parallel for schedule(static)
    for (int lj = 1; lj < ht - 1; ++lj) {
      double tv = 0.0, lin = 0.0;
      for (int li = 1; li < w - 1; ++li) {
        const std::size_t l = static_cast<std::size_t>(lj) * w + li;
        tv += upwind_mag(cut.data(), li, lj, w, ht);
        lin += hc[l] * cut[l];
      }
      rows_a[lj] = kappa * tv - lin;
    }
    return h * ordered_sum(rows_a);
  };

  int it = 0;
  double primal = 0.0, dual = 0.0;
  evaluate(primal, dual);
  double best_dual = dual;
  std::vector<double> best_u = u;
  auto track_primal = [&](double value_of_iterate) {
    const double tv = threshold_value();
    const double cand = std::min(value_of_iterate, tv);
    if (it == 0 || cand < primal) {
      primal = cand;
      best_u = tv < value_of_iterate ? cut : u;
    }
  };
  track_primal(primal);
  while (true) {
    const bool gap_ok = primal - best_dual <= stop.gap_tol;
    const bool decided = stop.decide_at && (primal < *stop.decide_at || best_dual >= *stop.decide_at);
    if (gap_ok || decided) {
      out.converged = true;
      break;
    }
    if (it >= stop.max_iter) break;
    for (int inner = 0; inner < stop.check_every; ++inner, ++it) {
#pragma omp parallel for schedule(static)
      for (int lj = 1; lj < ht - 1; ++lj)
        for (int li = 1; li < w - 1; ++li) {
          const std::size_t l = static_cast<std::size_t>(lj) * w + li;
          const double c = ub[l];
          double a0 = std::max(0.0, q0[l] + sigma * (c - ub[l + 1]));
          double a1 = std::max(0.0, q1[l] + sigma * (c - ub[l - 1]));
          double a2 = std::max(0.0, q2[l] + sigma * (c - ub[l + w]));
          double a3 = std::max(0.0, q3[l] + sigma * (c - ub[l - w]));
          const double m2 = a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3;
          if (m2 > kappa * kappa) {
            const double s = kappa / std::sqrt(m2);
            a0 *= s;
            a1 *= s;
            a2 *= s;
            a3 *= s;
          }
          q0[l] = a0;
          q1[l] = a1;
          q2[l] = a2;
          q3[l] = a3;
        }
#pragma omp parallel for schedule(static)
      for (int lj = 1; lj < ht - 1; ++lj)
        for (int li = 1; li < w - 1; ++li) {
          const std::size_t l = static_cast<std::size_t>(lj) * w + li;
          if (!sup[l]) continue;
          const double old = u[l];
          const double nu = std::clamp(old - tau * (adjoint(l) - hc[l]), 0.0, 1.0);
          u[l] = nu;
          ub[l] = 2.0 * nu - old;
        }
    }
    double current = 0.0;
    evaluate(current, dual);
    best_dual = std::max(best_dual, dual);
    track_primal(current);
  }

  for (int lj = 0; lj < ht; ++lj)
    for (int li = 0; li < w; ++li) {
      const std::size_t l = static_cast<std::size_t>(lj) * w + li;
      const std::ptrdiff_t k = global(li, lj);
      if (k < 0) continue;
      out.state.u[k] = best_u[l];
      for (int d = 0; d < 4; ++d) out.state.p[d][k] = q[d][l];
    }
  out.primal = primal;
  out.dual = best_dual;
  out.iterations = it;
  return out;
}

namespace {

std::size_t support_count(const std::vector<std::uint8_t>& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), std::uint8_t{1}));
}

}  // namespace

TvSolution solve_relaxed_tv_multilevel(const TvProblem& p, const TvStop& stop, int coarse_iterations) {
  const Grid& g = p.grid;
  constexpr std::size_t kCoarsestCells = 2000;
  if (support_count(p.support) <= kCoarsestCells || g.nx < 32 || g.ny < 32) return solve_relaxed_tv(p, stop);

  const Grid cg((g.nx + 1) / 2, (g.ny + 1) / 2, 2.0 * g.h, g.origin);
  TvProblem coarse{cg, std::vector<std::uint8_t>(cg.size(), 0), std::vector<double>(cg.size(), 0.0), p.kappa};
  for (int J = 0; J < cg.ny; ++J)
    for (int I = 0; I < cg.nx; ++I) {
      bool all = true;
      double c = 0.0;
      for (int b = 0; b < 4; ++b) {
        const int i = 2 * I + (b & 1), j = 2 * J + (b >> 1);
        if (!g.contains(i, j) || !p.support[g.index(i, j)]) {
          all = false;
          break;
        }
        c += p.c[g.index(i, j)];
      }
      if (!all) continue;
      coarse.support[cg.index(I, J)] = 1;
      coarse.c[cg.index(I, J)] = 0.25 * c;
    }
  if (support_count(coarse.support) == 0) return solve_relaxed_tv(p, stop);

  TvStop cstop = stop;
  cstop.max_iter = coarse_iterations;
  cstop.decide_at.reset();
  cstop.gap_tol = stop.gap_tol;
  const TvSolution cs = solve_relaxed_tv_multilevel(coarse, cstop, coarse_iterations);

  TvState warm;
  warm.u.assign(g.size(), 0.0);
  for (auto& c : warm.p) c.assign(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j), K = cg.index(i / 2, j / 2);
      warm.u[k] = p.support[k] ? cs.state.u[K] : 0.0;
      for (int d = 0; d < 4; ++d) warm.p[d][k] = cs.state.p[d][K];
    }
  TvSolution fine = solve_relaxed_tv(p, stop, &warm);
  fine.iterations += cs.iterations;
  return fine;
}

}  // namespace pmc::detail
