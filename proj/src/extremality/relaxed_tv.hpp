#pragma once

#include <array>
#include <optional>
#include <vector>

#include "pmc/core.hpp"

namespace pmc::detail {

/// min over u in [0,1] with u = 0 off `support` of  kappa * TV(u) - sum_k h^2 c_k u_k,
/// with the upwind total variation
///   TV(u) = h * sum_k sqrt( sum over the 4 neighbours n of (u_k - u_n)_+^2 ),
/// which is far less anisotropic than forward differences on sharp interfaces.
struct TvProblem {
  Grid grid;
  std::vector<std::uint8_t> support;
  std::vector<double> c;
  double kappa = 1.0;
};

struct TvStop {
  int max_iter = 20000;
  /// Converged once primal - dual <= gap_tol.
  double gap_tol = 1e-6;
  /// When set, also stop as soon as the sign of the minimum relative to this level is certified:
  /// primal < level (a point below it) or dual >= level (nothing below it).
  std::optional<double> decide_at;
  int check_every = 20;
};

/// Iterate state, reusable as a warm start for a nearby problem on the same grid and support.
struct TvState {
  std::vector<double> u;                 // full grid
  std::array<std::vector<double>, 4> p;  // dual per neighbour (east, west, north, south), full grid
};

struct TvSolution {
  /// state.u is the best feasible point seen (an iterate or its 0.5-superlevel set); the duals
  /// are the last iterate.
  TvState state;
  double primal = 0.0;  // objective of state.u (an upper bound of the minimum)
  double dual = 0.0;    // certified lower bound of the minimum
  int iterations = 0;
  bool converged = false;
};

TvSolution solve_relaxed_tv(const TvProblem& p, const TvStop& stop, const TvState* warm = nullptr);

/// Coarse-to-fine driver: the problem is restricted to 2x2 blocks fully inside the support,
/// solved there with a capped budget, and the result (primal and duals copied to the children)
/// warm-starts the next finer level. Falls back to a plain solve on small windows.
TvSolution solve_relaxed_tv_multilevel(const TvProblem& p, const TvStop& stop, int coarse_iterations = 1500);

/// Objective of an arbitrary field u (clamped to the feasible set first).
double relaxed_objective(const TvProblem& p, const std::vector<double>& u);

/// Upwind total variation over the whole grid (neighbours off the grid are ignored).
double upwind_tv(const Grid& g, const std::vector<double>& u);

}  // namespace pmc::detail
