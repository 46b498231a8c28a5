#include "pmc/traces.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <Eigen/Dense>

#include "../geometry/geometry_internal.hpp"

namespace pmc {
namespace {

Vec2 centred_gradient(const ScalarField& f, int i, int j) {
  const Grid& g = f.grid();
  const int ip = std::min(i + 1, g.nx - 1), im = std::max(i - 1, 0);
  const int jp = std::min(j + 1, g.ny - 1), jm = std::max(j - 1, 0);
  return {(f(ip, j) - f(im, j)) / ((ip - im) * g.h), (f(i, jp) - f(i, jm)) / ((jp - jm) * g.h)};
}

void require_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " grid does not match the mask");
}

// Arc layout of one closed curve: n arcs of equal length with hat functions centred at arc midpoints.
struct CurveArcs {
  std::size_t first = 0;
  int n = 1;
  double length = 0.0;
  double delta = 0.0;
};

// Hat-function weights (arc index, weight) at arclength s along a curve.
std::array<std::pair<std::size_t, double>, 2> hat_weights(const CurveArcs& c, double s) {
  if (c.n == 1) return {{{c.first, 1.0}, {c.first, 0.0}}};
  double u = s / c.delta - 0.5;
  u -= c.n * std::floor(u / c.n);
  int k0 = static_cast<int>(std::floor(u));
  const double frac = u - k0;
  k0 %= c.n;
  const int k1 = (k0 + 1) % c.n;
  return {{{c.first + static_cast<std::size_t>(k0), 1.0 - frac}, {c.first + static_cast<std::size_t>(k1), frac}}};
}

std::vector<CurveArcs> layout_from(const TraceEstimate& t) {
  std::vector<CurveArcs> out(t.curves.size());
  for (std::size_t c = 0; c < t.curves.size(); ++c) out[c].length = t.curves[c].length();
  for (std::size_t a = 0; a < t.arcs.size(); ++a) {
    CurveArcs& c = out[t.arcs[a].curve];
    if (c.delta == 0.0) {
      c.first = a;
      c.n = 0;
    }
    ++c.n;
    c.delta = t.arcs[a].length;
  }
  return out;
}

// Point at arclength s along a closed polyline.
Vec2 point_at(const Polyline& poly, double s) {
  double acc = 0.0;
  for (std::size_t k = 0; k < poly.segment_count(); ++k) {
    const Vec2 a = poly.segment_start(k), b = poly.segment_end(k);
    const double len = norm(b - a);
    if (acc + len >= s && len > 0.0) return a + (b - a) * ((s - acc) / len);
    acc += len;
  }
  return poly.points.empty() ? Vec2{} : poly.points.front();
}

Vec2 unit(Vec2 v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec2{};
}

}  // namespace

DivField make_div_field(VectorField xi, std::optional<ScalarField> analytic_div) {
  DivField f;
  f.discrete_div = divergence(xi);
  if (analytic_div) {
    require_grid(analytic_div->grid(), xi.grid(), "divergence");
    f.div = std::move(*analytic_div);
    f.analytic_div = true;
  } else {
    f.div = f.discrete_div;
  }
  f.sup_norm = xi.sup_bound() ? *xi.sup_bound() : xi.max_norm();
  f.xi = std::move(xi);
  return f;
}

DomainMask unit_square(double h) {
  const AnalyticDomain dom(Box{{0.0, 0.0}, 1.0});
  const auto [lo, hi] = dom.bounds();
  return rasterize(dom, Grid::covering(lo, hi, h, 3));
}

std::vector<TwistingBall> twisting_balls(int i_max) {
  std::vector<TwistingBall> balls;
  for (int i = 1; i <= i_max; ++i) {
    const double step = std::ldexp(1.0, -i);
    for (int j = 1; j < (1 << i); ++j) balls.push_back({i, j, {j * step, step}, std::ldexp(1.0, -(i + 2))});
  }
  return balls;
}

DivField twisting_field(int i_max, const Grid& grid) {
  if (i_max < 1) throw Error(ErrorCode::InvalidArgument, "i_max must be at least 1");
  if (std::ldexp(4.0 * grid.h, i_max) > 1.0 + 1e-9)
    throw Error(ErrorCode::ResolutionViolation,
                "i_max = " + std::to_string(i_max) + " exceeds log2(1/(4h)) at h = " + std::to_string(grid.h));
  VectorField xi(grid);
  for (const TwistingBall& b : twisting_balls(i_max)) {
    const double r = b.radius;
    // phi(s) = c s (r - s)^2: xi is C^1 across the rim and the speed c s^2 (r - s)^2 peaks at 1 for s = r/2.
    const double c = 16.0 / (r * r * r * r);
    const int i0 = std::max(0, static_cast<int>(std::floor((b.center.x - r - grid.origin.x) / grid.h)));
    const int i1 = std::min(grid.nx - 1, static_cast<int>(std::ceil((b.center.x + r - grid.origin.x) / grid.h)));
    const int j0 = std::max(0, static_cast<int>(std::floor((b.center.y - r - grid.origin.y) / grid.h)));
    const int j1 = std::min(grid.ny - 1, static_cast<int>(std::ceil((b.center.y + r - grid.origin.y) / grid.h)));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const Vec2 d = grid.center(i, j) - b.center;
        const double s = norm(d);
        if (s >= r) continue;
        xi(i, j) = c * s * (r - s) * (r - s) * perp(d);
      }
  }
  xi.set_sup_bound(1.0);
  return make_div_field(std::move(xi), ScalarField(grid));
}

double pairing(const DivField& xi, const ScalarField& phi, const DomainMask& mask) {
  const Grid& g = mask.grid();
  require_grid(xi.xi.grid(), g, "vector field");
  require_grid(phi.grid(), g, "test function");
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (!mask.inside(k)) continue;
      if (!std::isfinite(phi[k])) throw Error(ErrorCode::InvalidArgument, "test function is not finite on the domain");
      s += phi[k] * xi.discrete_div[k] + dot(xi.xi[k], centred_gradient(phi, i, j));
    }
  return s * g.cell_area();
}

double TraceEstimate::max_abs() const {
  double m = 0.0;
  for (const TraceArc& a : arcs) m = std::max(m, std::abs(a.value));
  return m;
}

TraceEstimate weak_normal_trace(const DivField& xi, const DomainMask& mask, const TraceConfig& cfg) {
  const Grid& g = mask.grid();
  require_grid(xi.xi.grid(), g, "vector field");
  if (cfg.eps_cells.empty() || cfg.arcs < 1) throw Error(ErrorCode::InvalidArgument, "trace needs eps levels and arcs");
  for (double e : cfg.eps_cells)
    if (!(e >= 4.0)) throw Error(ErrorCode::ResolutionViolation, "trace band widths must be at least 4h");
  for (std::size_t a = 0; a < cfg.eps_cells.size(); ++a)
    for (std::size_t b = a + 1; b < cfg.eps_cells.size(); ++b)
      if (cfg.eps_cells[a] == cfg.eps_cells[b]) throw Error(ErrorCode::InvalidArgument, "trace band widths must be distinct");

  TraceEstimate out;
  out.sup_norm = xi.sup_norm;
  for (double e : cfg.eps_cells) out.eps.push_back(e * g.h);
  const double eps_max = *std::max_element(out.eps.begin(), out.eps.end());
  const detail::BandProjection bp = detail::band_projection(mask, eps_max + 3.0 * g.h);
  out.curves = bp.curves;

  // Arcs: counts proportional to curve length, each at least 4h long.
  double total = 0.0;
  for (const Polyline& c : out.curves) total += c.length();
  std::vector<CurveArcs> layout(out.curves.size());
  const VectorField nfield = detail::outward_normal_field(mask);
  for (std::size_t c = 0; c < out.curves.size(); ++c) {
    CurveArcs& L = layout[c];
    L.length = out.curves[c].length();
    L.first = out.arcs.size();
    L.n = std::max(1, static_cast<int>(std::lround(cfg.arcs * L.length / total)));
    if (L.length / L.n < 4.0 * g.h) {
      const int merged = std::max(1, static_cast<int>(std::floor(L.length / (4.0 * g.h))));
      out.warnings.push_back("curve " + std::to_string(c) + ": arcs shorter than 4h merged (" + std::to_string(L.n) +
                             " -> " + std::to_string(merged) + ")");
      L.n = merged;
    }
    L.delta = L.length / L.n;
    for (int k = 0; k < L.n; ++k) {
      TraceArc a;
      a.curve = c;
      a.s0 = k * L.delta;
      a.s1 = (k + 1) * L.delta;
      a.length = L.delta;
      a.midpoint = point_at(out.curves[c], (k + 0.5) * L.delta);
      a.normal = unit(nfield.sample(a.midpoint));
      out.arcs.push_back(a);
    }
  }

  // Partition-of-unity weights per cell (at most two arcs).
  std::vector<std::array<std::pair<std::size_t, double>, 2>> weights(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    if (bp.in_band[k]) weights[k] = hat_weights(layout[bp.foot[k].curve], bp.foot[k].arclength);

  for (const double eps : out.eps) {
    std::vector<double> acc(out.arcs.size(), 0.0);
    // phi_a(m) = psi_a(foot(m)) * (1 + d/eps)_+; the ramp continues past the boundary so the
    // centred difference across the mask edge sees the boundary value at the face.
    auto phi = [&](std::size_t m, std::size_t arc) {
      if (!bp.in_band[m]) return 0.0;
      const double w = std::max(0.0, 1.0 + bp.d[m] / eps);
      if (w == 0.0) return 0.0;
      double psi = 0.0;
      for (const auto& [a, wt] : weights[m])
        if (a == arc) psi += wt;
      return psi * w;
    };
    for (int j = 1; j < g.ny - 1; ++j)
      for (int i = 1; i < g.nx - 1; ++i) {
        const std::size_t k = g.index(i, j);
        if (!mask.inside(k) || bp.d[k] <= -eps - 2.0 * g.h) continue;
        const std::size_t nb[5] = {k, k + 1, k - 1, k + g.nx, k - g.nx};
        std::array<std::size_t, 10> arcs{};
        std::size_t count = 0;
        for (std::size_t m : nb) {
          if (!bp.in_band[m]) continue;
          for (const auto& [a, wt] : weights[m])
            if (wt > 0.0 && std::find(arcs.begin(), arcs.begin() + count, a) == arcs.begin() + count) arcs[count++] = a;
        }
        for (std::size_t q = 0; q < count; ++q) {
          const std::size_t a = arcs[q];
          const double gx = (phi(k + 1, a) - phi(k - 1, a)) / (2.0 * g.h);
          const double gy = (phi(k + g.nx, a) - phi(k - g.nx, a)) / (2.0 * g.h);
          acc[a] += phi(k, a) * xi.discrete_div[k] + xi.xi[k].x * gx + xi.xi[k].y * gy;
        }
      }
    for (std::size_t a = 0; a < out.arcs.size(); ++a)
      out.arcs[a].values.push_back(acc[a] * g.cell_area() / out.arcs[a].length);
  }

  // Extrapolation to eps = 0. The staircase boundary sits a fraction of a cell off the contour, which
  // adds a term proportional to h/eps; with three or more levels fit v = T + a eps + b/eps by least
  // squares, otherwise extrapolate linearly from the two narrowest bands.
  std::vector<std::size_t> order(out.eps.size());
  for (std::size_t l = 0; l < order.size(); ++l) order[l] = l;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.eps[a] < out.eps[b]; });
  Eigen::MatrixXd A(static_cast<Eigen::Index>(out.eps.size()), 3);
  for (std::size_t l = 0; l < out.eps.size(); ++l) {
    const auto r = static_cast<Eigen::Index>(l);
    A(r, 0) = 1.0;
    A(r, 1) = out.eps[l] / g.h;
    A(r, 2) = g.h / out.eps[l];
  }
  const auto qr = A.colPivHouseholderQr();
  for (TraceArc& a : out.arcs) {
    if (order.size() == 1) {
      a.value = a.values[order[0]];
    } else if (order.size() >= 3) {
      const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(a.values.data(), static_cast<Eigen::Index>(a.values.size()));
      a.value = qr.solve(v)(0);
    } else {
      const double e1 = out.eps[order[0]], e2 = out.eps[order[1]];
      const double v1 = a.values[order[0]], v2 = a.values[order[1]];
      a.value = v1 - e1 * (v2 - v1) / (e2 - e1);
    }
    if (std::abs(a.value) > out.sup_norm + 0.05) out.sup_bound_ok = false;
  }
  return out;
}

double gauss_green_residual(const DivField& xi, const ScalarField& phi, const DomainMask& mask,
                            const TraceEstimate& trace) {
  const double lhs = pairing(xi, phi, mask);
  const std::vector<CurveArcs> layout = layout_from(trace);
  // Hat-weighted arc means of phi along the polyline (segment midpoint rule).
  std::vector<double> num(trace.arcs.size(), 0.0), den(trace.arcs.size(), 0.0);
  for (std::size_t c = 0; c < trace.curves.size(); ++c) {
    const Polyline& poly = trace.curves[c];
    double s = 0.0;
    for (std::size_t k = 0; k < poly.segment_count(); ++k) {
      const Vec2 a = poly.segment_start(k), b = poly.segment_end(k);
      const double len = norm(b - a);
      const double v = phi.sample((a + b) * 0.5);
      for (const auto& [arc, w] : hat_weights(layout[c], s + 0.5 * len)) {
        num[arc] += w * len * v;
        den[arc] += w * len;
      }
      s += len;
    }
  }
  double rhs = 0.0;
  for (std::size_t a = 0; a < trace.arcs.size(); ++a)
    if (den[a] > 0.0) rhs += trace.arcs[a].length * (num[a] / den[a]) * trace.arcs[a].value;
  return std::abs(lhs - rhs);
}

std::vector<double> verticality_flux(const HeightField& u, const ApproxLadder& ladder) {
  const VectorField tu = tu_field(u.u);
  std::vector<double> out;
  for (const LadderLevel& level : ladder.levels) {
    require_grid(level.mask.grid(), u.u.grid(), "ladder");
    const BoundaryNormals bn = boundary_normals(level.mask);
    double flux = 0.0;
    std::size_t base = 0;
    for (const Polyline& poly : bn.curves) {
      const std::size_t nv = poly.points.size();
      for (std::size_t s = 0; s < poly.segment_count(); ++s) {
        const Vec2 a = poly.segment_start(s), b = poly.segment_end(s);
        const Vec2 n = unit(bn.points[base + s].normal + bn.points[base + (s + 1) % nv].normal);
        flux += dot(tu.sample((a + b) * 0.5), n) * norm(b - a);
      }
      base += nv;
    }
    out.push_back(flux);
  }
  return out;
}

DivField flux_field(const HeightField& u) {
  const Grid& g = u.u.grid();
  require_grid(u.mask.grid(), g, "height field");
  VectorField tu = tu_field(u.u);
  std::vector<std::uint8_t> known(g.size(), 0);
  std::deque<std::size_t> queue;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i)
      if (u.mask.inside(i, j) && u.mask.inside(i + 1, j) && u.mask.inside(i - 1, j) && u.mask.inside(i, j + 1) &&
          u.mask.inside(i, j - 1)) {
        known[g.index(i, j)] = 1;
        queue.push_back(g.index(i, j));
      }
  if (queue.empty()) throw Error(ErrorCode::EmptyDomain, "height field has no cell with an interior stencil");
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    const int i = g.col(k), j = g.row(k);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int a = i + di[d], b = j + dj[d];
      if (!g.contains(a, b)) continue;
      const std::size_t m = g.index(a, b);
      if (known[m]) continue;
      known[m] = 1;
      tu[m] = tu[k];
      queue.push_back(m);
    }
  }
  return make_div_field(std::move(tu));
}

VectorField distance_gradient(const DomainMask& mask) {
  VectorField n = detail::outward_normal_field(mask);
  for (Vec2& v : n.values()) v = unit(v);
  n.set_sup_bound(1.0);
  return n;
}

double boundary_layer_flux(const DivField& xi, const DomainMask& mask, double eps) {
  const Grid& g = mask.grid();
  require_grid(xi.xi.grid(), g, "vector field");
  if (!(eps >= 2.0 * g.h)) throw Error(ErrorCode::ResolutionViolation, "boundary layer must be at least 2h wide");
  const detail::BandProjection bp = detail::band_projection(mask, eps + 3.0 * g.h);
  const VectorField grad = distance_gradient(mask);
  // Each cell contributes the fraction of [d - h/2, d + h/2] lying in (-eps, 0).
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!bp.in_band[k]) continue;
    const double lo = std::max(bp.d[k] - 0.5 * g.h, -eps), hi = std::min(bp.d[k] + 0.5 * g.h, 0.0);
    if (hi > lo) s += (hi - lo) / g.h * dot(xi.xi[k], grad[k]);
  }
  return s * g.cell_area() / eps;
}

DensityProfile bad_set_density(const DivField& xi, const DomainMask& mask, double t, Vec2 z,
                               const std::vector<double>& radii, std::optional<double> tau) {
  const Grid& g = mask.grid();
  require_grid(xi.xi.grid(), g, "vector field");
  if (radii.empty()) throw Error(ErrorCode::InvalidArgument, "empty radius ladder");
  for (double r : radii)
    if (!(r >= 4.0 * g.h * (1.0 - 1e-9))) throw Error(ErrorCode::ResolutionViolation, "density radii must be at least 4h");
  const VectorField grad = distance_gradient(mask);
  const Vec2 nu = unit(grad.sample(z));
  DensityProfile out;
  out.center = z;
  out.radii = radii;
  out.t = t;
  out.tau = tau;
  for (double r : radii) {
    const int i0 = std::max(0, static_cast<int>(std::floor((z.x - r - g.origin.x) / g.h)));
    const int i1 = std::min(g.nx - 1, static_cast<int>(std::ceil((z.x + r - g.origin.x) / g.h)));
    const int j0 = std::max(0, static_cast<int>(std::floor((z.y - r - g.origin.y) / g.h)));
    const int j1 = std::min(g.ny - 1, static_cast<int>(std::ceil((z.y + r - g.origin.y) / g.h)));
    std::size_t bad = 0, cone = 0;
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const std::size_t k = g.index(i, j);
        if (!mask.inside(k) || norm(g.center(k) - z) >= r) continue;
        if (dot(xi.xi[k], grad[k]) < xi.sup_norm - t) ++bad;
        if (tau && norm(grad[k] - nu) > *tau) ++cone;
      }
    out.bad_ratio.push_back(static_cast<double>(bad) * g.cell_area() / (r * r));
    if (tau) out.cone_ratio.push_back(static_cast<double>(cone) * g.cell_area() / (r * r));
  }
  return out;
}

ApproxLimit approx_limit(const VectorField& field, const DomainMask& mask, Vec2 z, double alpha,
                         const std::vector<double>& radii) {
  const Grid& g = mask.grid();
  require_grid(field.grid(), g, "vector field");
  if (radii.empty()) throw Error(ErrorCode::InvalidArgument, "empty radius ladder");
  for (double r : radii)
    if (!(r >= 2.0 * g.h * (1.0 - 1e-9))) throw Error(ErrorCode::ResolutionViolation, "approximate-limit radii must be at least 2h");
  auto cells_in = [&](double r) {
    std::vector<std::size_t> ks;
    const int i0 = std::max(0, static_cast<int>(std::floor((z.x - r - g.origin.x) / g.h)));
    const int i1 = std::min(g.nx - 1, static_cast<int>(std::ceil((z.x + r - g.origin.x) / g.h)));
    const int j0 = std::max(0, static_cast<int>(std::floor((z.y - r - g.origin.y) / g.h)));
    const int j1 = std::min(g.ny - 1, static_cast<int>(std::ceil((z.y + r - g.origin.y) / g.h)));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        const std::size_t k = g.index(i, j);
        if (mask.inside(k) && norm(g.center(k) - z) < r) ks.push_back(k);
      }
    return ks;
  };
  const double rmin = *std::min_element(radii.begin(), radii.end());
  const std::vector<std::size_t> core = cells_in(rmin);
  if (core.empty()) throw Error(ErrorCode::ResolutionViolation, "smallest ball holds no domain cell");
  std::vector<double> xs, ys;
  for (std::size_t k : core) {
    xs.push_back(field[k].x);
    ys.push_back(field[k].y);
  }
  auto median = [](std::vector<double>& v) {
    const std::size_t m = (v.size() - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    return v[m];
  };
  ApproxLimit out;
  out.estimate = {median(xs), median(ys)};
  out.radii = radii;
  for (double r : radii) {
    const auto ks = cells_in(r);
    std::size_t far = 0;
    for (std::size_t k : ks) far += norm(field[k] - out.estimate) >= alpha;
    out.residual_mass.push_back(ks.empty() ? 0.0 : static_cast<double>(far) / static_cast<double>(ks.size()));
  }
  // The residual at the smallest radius decides; it must not exceed the one at the largest.
  const std::size_t small = static_cast<std::size_t>(std::min_element(radii.begin(), radii.end()) - radii.begin());
  const std::size_t large = static_cast<std::size_t>(std::max_element(radii.begin(), radii.end()) - radii.begin());
  out.exists = out.residual_mass[small] < 0.1 && out.residual_mass[small] <= out.residual_mass[large];
  return out;
}

}  // namespace pmc
