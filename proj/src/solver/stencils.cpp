#include <algorithm>
#include <cmath>

#include "pmc/solver.hpp"

namespace pmc {

double functional_value(const ScalarField& u_in, const DomainMask& mask, const CurvatureSpec& H,
                        const std::optional<ScalarField>& phi) {
  const Grid& g = mask.grid();
  if (!(u_in.grid() == g)) throw Error(ErrorCode::InvalidArgument, "height field grid does not match the mask");
  ScalarField u = u_in;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (mask.inside(k)) {
      if (!std::isfinite(u[k])) throw Error(ErrorCode::InvalidArgument, "height field is not finite");
    } else {
      u[k] = phi ? (*phi)[k] : 0.0;
    }
  }
  const ScalarField hf = H.on(mask);
  double area_sum = 0.0, lin = 0.0;
  std::size_t exterior = 0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double gx = i + 1 < g.nx ? (u[k + 1] - u[k]) / g.h : 0.0;
      const double gy = j + 1 < g.ny ? (u[k + g.nx] - u[k]) / g.h : 0.0;
      area_sum += std::sqrt(1.0 + gx * gx + gy * gy);
      if (mask.inside(k))
        lin += hf[k] * u[k];
      else
        ++exterior;
    }
  }
  return g.cell_area() * (area_sum - static_cast<double>(exterior) + lin);
}

ScalarField functional_gradient(const ScalarField& u_in, const DomainMask& mask, const CurvatureSpec& H,
                                const std::optional<ScalarField>& phi) {
  const Grid& g = mask.grid();
  if (!(u_in.grid() == g)) throw Error(ErrorCode::InvalidArgument, "height field grid does not match the mask");
  ScalarField u = u_in;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!mask.inside(k)) u[k] = phi ? (*phi)[k] : 0.0;
  // Forward-difference flux T+u at every cell.
  std::vector<double> tx(g.size(), 0.0), ty(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double gx = i + 1 < g.nx ? (u[k + 1] - u[k]) / g.h : 0.0;
      const double gy = j + 1 < g.ny ? (u[k + g.nx] - u[k]) / g.h : 0.0;
      const double s = 1.0 / std::sqrt(1.0 + gx * gx + gy * gy);
      tx[k] = gx * s;
      ty[k] = gy * s;
    }
  const ScalarField hf = H.on(mask);
  ScalarField grad(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!mask.inside(k)) continue;
      const double div = (tx[k] - tx[k - 1] + ty[k] - ty[k - g.nx]) / g.h;
      grad[k] = g.cell_area() * (hf[k] - div);
    }
  return grad;
}

double height_tolerance(const SolveConfig& cfg, const DomainMask& mask) {
  return std::sqrt(cfg.energy_tolerance) * domain_diameter(mask);
}

VectorField tu_field(const ScalarField& u) {
  const Grid& g = u.grid();
  VectorField t(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int ip = std::min(i + 1, g.nx - 1), im = std::max(i - 1, 0);
      const int jp = std::min(j + 1, g.ny - 1), jm = std::max(j - 1, 0);
      const double gx = (u(ip, j) - u(im, j)) / ((ip - im) * g.h);
      const double gy = (u(i, jp) - u(i, jm)) / ((jp - jm) * g.h);
      const double s = 1.0 / std::sqrt(1.0 + gx * gx + gy * gy);
      t(i, j) = {gx * s, gy * s};
    }
  }
  t.set_sup_bound(1.0);
  return t;
}

ScalarField divergence(const VectorField& xi) {
  const Grid& g = xi.grid();
  ScalarField d(g);
  // -grad^T with zero values beyond the grid edge: exact adjoint for fields vanishing near the edge.
  auto x = [&](int i, int j) { return g.contains(i, j) ? xi(i, j).x : 0.0; };
  auto y = [&](int i, int j) { return g.contains(i, j) ? xi(i, j).y : 0.0; };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      d(i, j) = (x(i + 1, j) - x(i - 1, j) + y(i, j + 1) - y(i, j - 1)) / (2.0 * g.h);
  return d;
}

ScalarField mean_curvature(const ScalarField& u) { return divergence(tu_field(u)); }

double pmc_residual(const ScalarField& u, const DomainMask& mask, const CurvatureSpec& H, double depth_cells,
                    const std::vector<std::uint8_t>* region) {
  const ScalarField d = signed_distance(mask);
  const ScalarField hf = H.on(mask);
  const ScalarField mc = mean_curvature(u);
  const double depth = depth_cells * mask.grid().h;
  double worst = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!mask.inside(k) || d[k] >= -depth) continue;
    if (region && !(*region)[k]) continue;
    worst = std::max(worst, std::abs(mc[k] - hf[k]));
  }
  return worst;
}

double domain_diameter(const DomainMask& mask) {
  const Grid& g = mask.grid();
  // Extreme points of the cell set lie on its boundary; check boundary cells pairwise.
  std::vector<Vec2> rim;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (mask.inside(i, j) &&
          (!mask.inside(i + 1, j) || !mask.inside(i - 1, j) || !mask.inside(i, j + 1) || !mask.inside(i, j - 1)))
        rim.push_back(g.center(i, j));
  double best = 0.0;
  for (std::size_t a = 0; a < rim.size(); ++a)
    for (std::size_t b = a + 1; b < rim.size(); ++b) best = std::max(best, norm(rim[a] - rim[b]));
  return best;
}

double lower_bound_probe(const HeightField& u) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < u.u.size(); ++k)
    if (u.mask.inside(k)) m = std::min(m, u.u[k]);
  return m;
}

double area_median(const ScalarField& u, const DomainMask& mask) {
  std::vector<double> v;
  v.reserve(mask.count());
  for (std::size_t k = 0; k < u.size(); ++k)
    if (mask.inside(k)) v.push_back(u[k]);
  if (v.empty()) throw Error(ErrorCode::EmptyDomain, "median of an empty domain");
  // Lower median: t = inf{t : |{u > t}| <= |Omega|/2}.
  const std::size_t m = (v.size() + 1) / 2 - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  return v[m];
}

HeightField median_normalize(const HeightField& u) {
  const double t = area_median(u.u, u.mask);
  HeightField out = u;
  for (double& x : out.u.values()) x -= t;
  return out;
}

double epigraph_distance(const ScalarField& a, const ScalarField& b, const std::vector<std::uint8_t>& K, double cap) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!K[k]) continue;
    s += std::abs(std::clamp(a[k], -cap, cap) - std::clamp(b[k], -cap, cap));
  }
  return s * a.grid().cell_area();
}

}  // namespace pmc
