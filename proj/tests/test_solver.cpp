#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmc/solver.hpp"

using namespace pmc;

namespace {

constexpr double kPi = std::numbers::pi;

DomainMask disk(double h) {
  const AnalyticDomain dom(Disk{{0, 0}, 1.0});
  const auto [lo, hi] = dom.bounds();
  return rasterize(dom, Grid::covering(lo, hi, h, 3));
}

DomainMask unit_box(double h) {
  const AnalyticDomain dom(Box{{0, 0}, 1.0});
  const auto [lo, hi] = dom.bounds();
  return rasterize(dom, Grid::covering(lo, hi, h, 3));
}

template <class F>
ScalarField sampled(const Grid& g, F f) {
  ScalarField u(g);
  for (std::size_t k = 0; k < g.size(); ++k) u[k] = f(g.center(k));
  return u;
}

// Lower unit hemisphere inside the disk, zero outside.
ScalarField hemisphere(const Grid& g, double sign = 1.0) {
  return sampled(g, [sign](Vec2 p) {
    const double r2 = dot(p, p);
    return r2 < 1.0 ? -sign * std::sqrt(1.0 - r2) : 0.0;
  });
}

std::vector<std::uint8_t> ball_cells(const Grid& g, double radius) {
  std::vector<std::uint8_t> m(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) m[k] = norm(g.center(k)) <= radius;
  return m;
}

double max_diff_on(const ScalarField& a, const ScalarField& b, const std::vector<std::uint8_t>& region) {
  double w = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (region[k]) w = std::max(w, std::abs(a[k] - b[k]));
  return w;
}

SolveConfig quiet() {
  SolveConfig c;
  c.check_pair = false;
  return c;
}

}  // namespace

TEST_CASE("functional value") {
  SUBCASE("flat graph over the unit box has the area of the box") {
    const DomainMask b = unit_box(1.0 / 64);
    CHECK(functional_value(ScalarField(b.grid()), b, CurvatureSpec::constant(0.0)) == doctest::Approx(1.0));
  }
  SUBCASE("the jump cost of a constant lift is linear in the lift") {
    const DomainMask d = disk(1.0 / 128);
    const CurvatureSpec zero = CurvatureSpec::constant(0.0);
    const double j1 = functional_value(ScalarField(d.grid(), 0.3), d, zero) - area(d);
    const double j2 = functional_value(ScalarField(d.grid(), 0.6), d, zero) - area(d);
    CHECK(j2 == doctest::Approx(2 * j1).epsilon(0.01));
    CHECK(j1 > 2 * kPi * 0.3);
  }
  SUBCASE("hemisphere: cap area plus int H u") {
    const DomainMask d = disk(1.0 / 128);
    const double f = functional_value(hemisphere(d.grid()), d, CurvatureSpec::constant(2.0));
    CHECK(f == doctest::Approx(2 * kPi / 3).epsilon(0.03));
  }
  SUBCASE("non-finite heights are rejected") {
    const DomainMask d = disk(1.0 / 16);
    ScalarField u(d.grid());
    u[d.grid().index(d.grid().nx / 2, d.grid().ny / 2)] = NAN;
    CHECK_THROWS_AS(functional_value(u, d, CurvatureSpec::constant(0.0)), Error);
  }
  SUBCASE("shifting u and the datum together changes F by c int H") {
    const DomainMask d = disk(1.0 / 32);
    const ScalarField u = sampled(d.grid(), [](Vec2 p) { return std::sin(2 * p.x) * p.y; });
    const double c = 0.7;
    ScalarField v = u, phi(d.grid(), c);
    for (double& x : v.values()) x += c;
    const CurvatureSpec H = CurvatureSpec::constant(1.3);
    CHECK(functional_value(v, d, H, phi) - functional_value(u, d, H) ==
          doctest::Approx(c * total_curvature(d, H)).epsilon(1e-10));
  }
}

// The forward-difference jump of a staircase boundary overestimates the trace penalty by a
// resolution-independent factor near 1.16 on the disk.
TEST_CASE("constant lift pays 2 pi |c| within 10%" * doctest::should_fail()) {
  const DomainMask d = disk(1.0 / 128);
  const double c = 0.3;
  const double f = functional_value(ScalarField(d.grid(), c), d, CurvatureSpec::constant(0.0));
  CHECK(std::abs(f - (area(d) + 2 * kPi * c)) <= 0.1 * 2 * kPi * c);
}

TEST_CASE("functional gradient matches directional finite differences") {
  const DomainMask d = disk(1.0 / 32);
  const Grid& g = d.grid();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double a = coef(rng), b = coef(rng), c = coef(rng);
  const ScalarField u = sampled(g, [&](Vec2 p) { return a * std::sin(3 * p.x) + b * p.x * p.y + c * std::cos(2 * p.y); });
  const ScalarField dir = sampled(g, [](Vec2 p) { return std::cos(p.x + 2 * p.y); });
  const ScalarField hx = sampled(g, [](Vec2 p) { return 1.0 + 0.5 * p.x; });
  const CurvatureSpec H = CurvatureSpec::field(hx);
  const ScalarField grad = functional_gradient(u, d, H);
  double model = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (d.inside(k)) model += grad[k] * dir[k];
  const double eps = 1e-5;
  ScalarField up = u, um = u;
  for (std::size_t k = 0; k < g.size(); ++k) {
    up[k] += eps * dir[k];
    um[k] -= eps * dir[k];
  }
  const double fd = (functional_value(up, d, H) - functional_value(um, d, H)) / (2 * eps);
  CHECK(std::abs(fd - model) <= 1e-4 * std::abs(model));
}

TEST_CASE("Tu field") {
  const DomainMask d = disk(1.0 / 128);
  const Grid& g = d.grid();
  SUBCASE("constant and linear heights") {
    const VectorField t0 = tu_field(ScalarField(g, 4.0));
    CHECK(t0.max_norm() == 0.0);
    const double a = 1.5;
    const VectorField t1 = tu_field(sampled(g, [a](Vec2 p) { return a * p.x; }));
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, norm(t1[k] - Vec2{a / std::sqrt(1 + a * a), 0}));
    CHECK(worst <= 1e-12);
    CHECK(t1.sup_bound() == 1.0);
  }
  SUBCASE("hemisphere: |Tu| = r") {
    const VectorField t = tu_field(hemisphere(g));
    double worst = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      sup = std::max(sup, norm(t[k]));
      const double r = norm(g.center(k));
      if (r <= 0.9) worst = std::max(worst, std::abs(norm(t[k]) - r));
    }
    CHECK(worst <= 2 * g.h);
    CHECK(sup < 1.0);
  }
  SUBCASE("|Tu| < 1 even for very steep data") {
    const VectorField t = tu_field(sampled(g, [](Vec2 p) { return 1e6 * p.x * p.x; }));
    for (std::size_t k = 0; k < g.size(); ++k) REQUIRE(norm(t[k]) < 1.0);
  }
}

TEST_CASE("mean curvature") {
  const DomainMask d = disk(1.0 / 128);
  const Grid& g = d.grid();
  SUBCASE("flat and linear graphs are minimal") {
    const ScalarField m0 = mean_curvature(ScalarField(g));
    const ScalarField m1 = mean_curvature(sampled(g, [](Vec2 p) { return 0.7 * p.x - 0.2 * p.y; }));
    double w = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const int i = g.col(k), j = g.row(k);
      if (i < 2 || j < 2 || i >= g.nx - 2 || j >= g.ny - 2) continue;
      w = std::max({w, std::abs(m0[k]), std::abs(m1[k])});
    }
    CHECK(w <= 1e-12);
  }
  SUBCASE("hemisphere oracle") {
    const ScalarField mc = mean_curvature(hemisphere(g));
    const ScalarField two(g, 2.0);
    CHECK(max_diff_on(mc, two, ball_cells(g, 0.9)) <= 0.02);
    CHECK(max_diff_on(mc, two, ball_cells(g, 0.8)) <= 0.01);
  }
  SUBCASE("discrete integration by parts") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    VectorField xi(g);
    ScalarField v(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      xi[k] = {n01(rng), n01(rng)};
      const int i = g.col(k), j = g.row(k);
      v[k] = (i < 2 || j < 2 || i >= g.nx - 2 || j >= g.ny - 2) ? 0.0 : n01(rng);
    }
    const ScalarField div = divergence(xi);
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (int j = 1; j < g.ny - 1; ++j)
      for (int i = 1; i < g.nx - 1; ++i) {
        const double gx = (v(i + 1, j) - v(i - 1, j)) / (2 * g.h);
        const double gy = (v(i, j + 1) - v(i, j - 1)) / (2 * g.h);
        rhs -= xi(i, j).x * gx + xi(i, j).y * gy;
        scale += std::abs(xi(i, j).x * gx) + std::abs(xi(i, j).y * gy);
      }
    for (std::size_t k = 0; k < g.size(); ++k) lhs += div[k] * v[k];
    CHECK(std::abs(lhs - rhs) <= 1e-13 * scale);
  }
}

TEST_CASE("median normalization") {
  const DomainMask d = disk(1.0 / 128);
  const Grid& g = d.grid();
  SUBCASE("constants go to zero") {
    const HeightField n = median_normalize({ScalarField(g, 5.0), d});
    CHECK(lower_bound_probe(n) == 0.0);
    CHECK(max_diff_on(n.u, ScalarField(g), d.cells()) == 0.0);
  }
  SUBCASE("an odd field is unchanged") {
    const ScalarField x = sampled(g, [](Vec2 p) { return p.x; });
    CHECK(max_diff_on(median_normalize({x, d}).u, x, d.cells()) <= g.h * g.h + g.h / 2);
  }
  SUBCASE("hemisphere median sits at r = 1/sqrt 2") {
    const HeightField n = median_normalize({hemisphere(g), d});
    CHECK(area_median(hemisphere(g), d) == doctest::Approx(-std::sqrt(0.5)).epsilon(0.01));
    CHECK(lower_bound_probe(n) == doctest::Approx(-1.0 + std::sqrt(0.5)).epsilon(0.02));
    // Both level sets at 0 carry at least half the area.
    std::size_t above = 0, below = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!d.inside(k)) continue;
      above += n.u[k] >= 0.0;
      below += n.u[k] <= 0.0;
    }
    CHECK(2 * above + 2 >= d.count());
    CHECK(2 * below + 2 >= d.count());
  }
}

TEST_CASE("Dirichlet solver") {
  const DomainMask d = disk(1.0 / 64);
  const Grid& g = d.grid();
  SUBCASE("zero curvature gives the flat graph") {
    const SolverReport r = solve_dirichlet(d, CurvatureSpec::constant(0.0));
    CHECK(r.converged);
    CHECK(max_diff_on(r.solution.u, ScalarField(g), d.cells()) <= 1e-4);
  }
  SUBCASE("H = 1.9 matches the spherical cap") {
    const SolverReport r = solve_dirichlet(d, CurvatureSpec::constant(1.9));
    const double R = 2.0 / 1.9;
    const ScalarField cap =
        sampled(g, [R](Vec2 p) { return -std::sqrt(R * R - dot(p, p)) + std::sqrt(R * R - 1.0); });
    const auto inner = ball_cells(g, 0.8);
    CHECK(max_diff_on(r.solution.u, cap, inner) <= 0.03);
    CHECK(pmc_residual(r.solution.u, d, CurvatureSpec::constant(1.9), 4, &inner) <= 0.05);
    for (std::size_t i = 1; i < r.energy_trajectory.size(); ++i)
      REQUIRE(r.energy_trajectory[i] <= r.energy_trajectory[i - 1] + 1e-10);
    CHECK(r.energy == doctest::Approx(functional_value(r.solution.u, d, CurvatureSpec::constant(1.9))));
  }
  SUBCASE("the datum is honoured outside the domain") {
    SolveConfig c = quiet();
    c.phi = ScalarField(g, 0.25);
    const SolverReport r = solve_dirichlet(d, CurvatureSpec::constant(0.0), c);
    CHECK(max_diff_on(r.solution.u, ScalarField(g, 0.25), std::vector<std::uint8_t>(g.size(), 1)) <= 1e-4);
  }
  SUBCASE("violated and extremal pairs are refused") {
    try {
      solve_dirichlet(d, CurvatureSpec::constant(2.2));
      FAIL("expected a refusal");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RefusedPair);
    }
    CHECK_THROWS_AS(solve_dirichlet(d, CurvatureSpec::constant(2.0)), Error);
  }
  SUBCASE("iteration cap is an error") {
    SolveConfig c = quiet();
    c.max_iterations = 20;
    CHECK_THROWS_AS(solve_dirichlet(d, CurvatureSpec::constant(1.5), c), Error);
  }
  SUBCASE("seeds agree for a strict pair") {
    CHECK(uniqueness_probe(d, CurvatureSpec::constant(1.9), quiet(), {0.0, 2.0}, ProbeMode::Dirichlet) <=
          2 * height_tolerance(quiet(), d));
  }
}

TEST_CASE("extremal ladder on the unit disk") {
  const DomainMask d = disk(1.0 / 64);
  const Grid& g = d.grid();
  const ExtremalResult r = solve_extremal(d, CurvatureSpec::constant(2.0));
  REQUIRE(r.ladder.size() == 4);
  CHECK(r.ladder.front().t == doctest::Approx(8.0 / 64));
  CHECK(r.n_empty);
  CHECK(r.epigraph_monotone);
  CHECK(r.m_cap == doctest::Approx(50 * domain_diameter(d)));

  const ScalarField hs = hemisphere(g);
  ScalarField ref = hs;
  const double med = area_median(hs, d);
  for (double& x : ref.values()) x -= med;
  CHECK(max_diff_on(r.limit.u, ref, ball_cells(g, 0.9)) <= 0.04);

  const auto n = r.ladder.size();
  CHECK(std::abs(r.ladder[n - 1].minimum - r.ladder[n - 2].minimum) <= 0.05);
  for (const LadderStep& s : r.ladder) CHECK(std::abs(area_median(s.u.u, s.u.mask)) <= 1e-12);

  SUBCASE("H -> -H reflects the limit") {
    const ExtremalResult m = solve_extremal(d, CurvatureSpec::constant(-2.0));
    ScalarField neg = m.limit.u;
    for (double& x : neg.values()) x = -x;
    CHECK(max_diff_on(neg, r.limit.u, r.compact) <= 2 * height_tolerance({}, d));
  }
  SUBCASE("a strict pair is a classification mismatch") {
    try {
      solve_extremal(d, CurvatureSpec::constant(1.9));
      FAIL("expected a mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ClassificationMismatch);
    }
  }
  SUBCASE("a single seed probes to zero") {
    CHECK(uniqueness_probe(d, CurvatureSpec::constant(2.0), quiet(), {0.0}) == 0.0);
  }
}
