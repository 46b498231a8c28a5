#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmc/core.hpp"
#include "pmc/extremality.hpp"
#include "pmc/geometry.hpp"

namespace pmc {

/// Height field over the whole bounding box; values off the domain hold the extension datum.
struct HeightField {
  ScalarField u;
  DomainMask mask;
};

struct SolveConfig {
  int max_iterations = 20000;
  /// Converged when the incumbent energy drops by less than this (relative to |Omega| + P) over
  /// `stall_window` iterations and the flux balance residual is below `balance_tolerance`.
  double energy_tolerance = 1e-6;
  int stall_window = 200;
  double balance_tolerance = 1e-3;
  int check_every = 50;
  /// Dual/primal step ratio (tau * sigma = h^2/8 always).
  double step_ratio = 1.0;
  /// Extension datum outside the domain (zero when unset).
  std::optional<ScalarField> phi;
  /// Blow-up cap for N+-; 0 selects 50 * diameter of the domain.
  double m_cap = 0.0;
  /// Starting field on the domain (zero when unset).
  std::optional<ScalarField> initial;
  /// Refuse pairs that do not classify as strict.
  bool check_pair = true;
  /// Extremal ladder: t_j = t0_cells * h * 2^-j for j < levels.
  int ladder_levels = 4;
  double t0_cells = 8.0;
};

struct SolverReport {
  HeightField solution;
  /// Incumbent (best so far) energy at each check.
  std::vector<double> energy_trajectory;
  double energy = 0.0;
  /// max |div Tu - H| over cells at least four cells inside the domain.
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct LadderStep {
  double t = 0.0;
  double median_shift = 0.0;
  HeightField u;  // median-normalized
  double energy = 0.0;
  double residual = 0.0;
  double minimum = 0.0;  // lower_bound_probe of the normalized field
  double epigraph_distance = 0.0;  // to the previous level on K (0 for the first level)
  int iterations = 0;
};

struct ExtremalResult {
  std::vector<LadderStep> ladder;
  HeightField limit;
  std::vector<std::uint8_t> n_plus;
  std::vector<std::uint8_t> n_minus;
  bool n_empty = true;
  /// Epigraph distances are nonincreasing within 20% slack.
  bool epigraph_monotone = true;
  std::vector<std::uint8_t> compact;  // K = Omega_{t0}
  double m_cap = 0.0;
  std::vector<std::string> notes;
};

/// h^2 sum over the box of sqrt(1 + |grad+ u|^2) minus the flat exterior area, plus h^2 sum_Omega H u,
/// with u frozen to phi off the domain.
double functional_value(const ScalarField& u, const DomainMask& mask, const CurvatureSpec& H,
                        const std::optional<ScalarField>& phi = std::nullopt);

/// Gradient of functional_value with respect to the values on the domain cells (zero elsewhere).
ScalarField functional_gradient(const ScalarField& u, const DomainMask& mask, const CurvatureSpec& H,
                                const std::optional<ScalarField>& phi = std::nullopt);

/// Height-field resolution implied by the energy tolerance: sqrt(energy_tolerance) * diameter.
double height_tolerance(const SolveConfig& cfg, const DomainMask& mask);

/// grad u / sqrt(1 + |grad u|^2) with centred differences (one-sided at the grid edge).
VectorField tu_field(const ScalarField& u);

/// Centred divergence, the negative adjoint of the centred gradient.
ScalarField divergence(const VectorField& xi);

/// div(Tu).
ScalarField mean_curvature(const ScalarField& u);

/// max |div Tu - H| over cells with d_Omega < -depth_cells * h (and inside an optional region).
double pmc_residual(const ScalarField& u, const DomainMask& mask, const CurvatureSpec& H, double depth_cells = 4.0,
                    const std::vector<std::uint8_t>* region = nullptr);

SolverReport solve_dirichlet(const DomainMask& mask, const CurvatureSpec& H, const SolveConfig& cfg = {});

/// Subtract the lower area-median of u over the domain (values off the domain shift too).
HeightField median_normalize(const HeightField& u);
double area_median(const ScalarField& u, const DomainMask& mask);

ExtremalResult solve_extremal(const DomainMask& mask, const CurvatureSpec& H, const SolveConfig& cfg = {});

/// L1 distance of the epigraphs over the cells of K, heights truncated to [-cap, cap].
double epigraph_distance(const ScalarField& a, const ScalarField& b, const std::vector<std::uint8_t>& K, double cap);

enum class ProbeMode { Extremal, Dirichlet };

/// Starts from each seed (constant value, or NaN for a seeded random field) and returns the largest
/// sup-norm difference between median-normalized solutions over K.
double uniqueness_probe(const DomainMask& mask, const CurvatureSpec& H, const SolveConfig& cfg,
                        const std::vector<double>& seeds, ProbeMode mode = ProbeMode::Extremal,
                        std::uint64_t rng_seed = 1);

/// Minimum of u over the domain cells.
double lower_bound_probe(const HeightField& u);

/// Largest distance between two domain cells (cell centres).
double domain_diameter(const DomainMask& mask);

}  // namespace pmc
