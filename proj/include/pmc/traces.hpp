#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmc/core.hpp"
#include "pmc/geometry.hpp"
#include "pmc/solver.hpp"

namespace pmc {

/// Bounded vector field with bounded divergence.
struct DivField {
  VectorField xi;
  /// Analytic divergence when supplied, otherwise the discrete one.
  ScalarField div;
  /// Centred divergence of xi (the stencil every pairing uses).
  ScalarField discrete_div;
  bool analytic_div = false;
  /// sup |xi|: the field's a-priori bound when it has one, else the sampled maximum.
  double sup_norm = 0.0;
};

DivField make_div_field(VectorField xi, std::optional<ScalarField> analytic_div = std::nullopt);

/// Unit square (0,1)^2 rasterized at spacing h with the bounding margin used by the trace tools.
DomainMask unit_square(double h);

/// Rotational bumps xi = phi_i(s) (p - p_ij)^perp in the balls B(p_ij, r_i), p_ij = (j/2^i, 1/2^i),
/// r_i = 2^-(i+2), 1 <= j < 2^i, 1 <= i <= i_max, with phi_i(s) = c_i s (r_i - s)^2 scaled to peak speed 1;
/// analytic div = 0.
/// Requires 1 <= i_max <= log2(1/(4h)); throws ResolutionViolation otherwise.
DivField twisting_field(int i_max, const Grid& grid);

struct TwistingBall {
  int i = 0;
  int j = 0;
  Vec2 center;
  double radius = 0.0;
};
std::vector<TwistingBall> twisting_balls(int i_max);

/// h^2 sum_Omega (phi div xi + xi . grad phi) with the centred stencils of the solver.
double pairing(const DivField& xi, const ScalarField& phi, const DomainMask& mask);

struct TraceConfig {
  /// Distinct band widths in cells, each >= 4.
  std::vector<double> eps_cells{16.0, 8.0, 4.0};
  /// Target number of arcs over the whole boundary (distributed by curve length).
  int arcs = 32;
};

struct TraceArc {
  std::size_t curve = 0;
  double s0 = 0.0;  // arclength interval on the curve
  double s1 = 0.0;
  Vec2 midpoint;
  Vec2 normal;  // outward, at the midpoint
  double length = 0.0;
  std::vector<double> values;  // per eps level
  double value = 0.0;          // extrapolated to eps = 0
};

struct TraceEstimate {
  std::vector<Polyline> curves;
  std::vector<double> eps;
  std::vector<TraceArc> arcs;
  double sup_norm = 0.0;
  /// Every arc value satisfies |value| <= sup_norm + 0.05.
  bool sup_bound_ok = true;
  std::vector<std::string> warnings;

  double max_abs() const;
};

TraceEstimate weak_normal_trace(const DivField& xi, const DomainMask& mask, const TraceConfig& cfg = {});

/// |pairing(xi, phi) - sum_arcs length * (arc mean of phi) * trace|.
double gauss_green_residual(const DivField& xi, const ScalarField& phi, const DomainMask& mask,
                            const TraceEstimate& trace);

/// Line integral of Tu . nu over the boundary polyline of each ladder level.
std::vector<double> verticality_flux(const HeightField& u, const ApproxLadder& ladder);

/// (1/eps) h^2 sum over {-eps < d < 0} of xi . grad d, cells weighted by their overlap with the band.
double boundary_layer_flux(const DivField& xi, const DomainMask& mask, double eps);

struct DensityProfile {
  Vec2 center;
  std::vector<double> radii;
  std::vector<double> bad_ratio;    // |N_t cap B_r(z)| / r^2
  std::vector<double> cone_ratio;   // |M_tau cap B_r(z)| / r^2 (empty without tau)
  double t = 0.0;
  std::optional<double> tau;
};

/// N_t = {x in Omega : xi . grad d < |xi|_inf - t}, M_tau = {x in Omega : |grad d(x) - nu(z)| > tau},
/// evaluated at cell centres. Radii must be >= 4h.
DensityProfile bad_set_density(const DivField& xi, const DomainMask& mask, double t, Vec2 z,
                               const std::vector<double>& radii, std::optional<double> tau = std::nullopt);

struct ApproxLimit {
  Vec2 estimate;
  std::vector<double> radii;
  std::vector<double> residual_mass;  // fraction of B_r cap Omega cells with |field - w| >= alpha
  bool exists = false;                // residual masses decay below 0.1
};

/// Candidate w = componentwise median over the smallest ball; radii must be >= 2h.
ApproxLimit approx_limit(const VectorField& field, const DomainMask& mask, Vec2 z, double alpha,
                         const std::vector<double>& radii);

/// Tu of a height field as a DivField on the whole grid: cells whose centred stencil stays inside
/// u.mask keep their value, every other cell copies the nearest such cell (continuous up to the boundary).
DivField flux_field(const HeightField& u);

/// Unit outward normal field grad d_Omega (regularized signed distance, normalized).
VectorField distance_gradient(const DomainMask& mask);

}  // namespace pmc
