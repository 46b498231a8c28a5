#pragma once

#include <vector>

#include "pmc/solver.hpp"

namespace pmc::detail {

struct PdState {
  ScalarField u;
  std::vector<double> qx, qy;
};

struct PdResult {
  PdState state;
  std::vector<double> trajectory;
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
  double balance = 0.0;
};

/// Primal-dual minimization of the frozen-exterior functional. `warm` supplies u on the
/// domain and the dual field; otherwise u starts from cfg.initial (or 0) and q from Tu.
PdResult minimize_functional(const DomainMask& mask, const ScalarField& h_on, const ScalarField& phi,
                             const SolveConfig& cfg, const PdState* warm);

/// Coarse-to-fine warm start through 2x2 coarsenings; `iterations` counts fine-grid equivalents.
PdResult minimize_multilevel(const DomainMask& mask, const ScalarField& h_on, const ScalarField& phi,
                             const SolveConfig& cfg, const PdState* warm);

ScalarField extension_datum(const DomainMask& mask, const SolveConfig& cfg);

}  // namespace pmc::detail
