#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pmc/traces.hpp"

using namespace pmc;

namespace {

constexpr double kPi = std::numbers::pi;

DomainMask disk(double h, double radius = 1.0) {
  const AnalyticDomain dom(Disk{{0, 0}, radius});
  const auto [lo, hi] = dom.bounds();
  return rasterize(dom, Grid::covering(lo, hi, h, 3));
}

template <class F>
ScalarField sampled(const Grid& g, F f) {
  ScalarField u(g);
  for (std::size_t k = 0; k < g.size(); ++k) u[k] = f(g.center(k));
  return u;
}

template <class F>
VectorField sampled_vec(const Grid& g, F f) {
  VectorField v(g);
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = f(g.center(k));
  return v;
}

// Lower unit hemisphere on the disk mask, median shift irrelevant for Tu.
HeightField hemisphere(const DomainMask& m) {
  return {sampled(m.grid(),
                  [](Vec2 p) {
                    const double r2 = dot(p, p);
                    return r2 < 1.0 ? -std::sqrt(1.0 - r2) : 0.0;
                  }),
          m};
}

double angle_of(Vec2 p) { return std::atan2(p.y, p.x); }

// Mean of f(theta) against a hat of half-width w centred at theta0 (trapezoid rule).
template <class F>
double hat_mean(F f, double theta0, double w) {
  const int n = 2000;
  double num = 0.0, den = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double s = -w + 2.0 * w * k / n;
    const double wt = (1.0 - std::abs(s) / w) * ((k == 0 || k == n) ? 0.5 : 1.0);
    num += wt * f(theta0 + s);
    den += wt;
  }
  return num / den;
}

}  // namespace

TEST_CASE("twisting field") {
  SUBCASE("one ball for i_max = 1") {
    const auto balls = twisting_balls(1);
    REQUIRE(balls.size() == 1);
    CHECK(balls[0].center.x == doctest::Approx(0.5));
    CHECK(balls[0].center.y == doctest::Approx(0.5));
    CHECK(balls[0].radius == doctest::Approx(0.125));
  }
  SUBCASE("ball count and layout") {
    const auto balls = twisting_balls(6);
    CHECK(balls.size() == 1 + 3 + 7 + 15 + 31 + 63);
    for (const auto& b : balls) {
      CHECK(b.center.y - b.radius > 0.0);
      CHECK(b.radius == doctest::Approx(std::ldexp(1.0, -(b.i + 2))));
    }
  }
  SUBCASE("unit speed and vanishing divergence") {
    double prev_div = 0.0;
    for (double h : {1.0 / 256, 1.0 / 512}) {
      const DomainMask q = unit_square(h);
      const DivField f = twisting_field(3, q.grid());
      CHECK(f.sup_norm == 1.0);
      CHECK(f.analytic_div);
      CHECK(f.xi.max_norm() == doctest::Approx(1.0).epsilon(0.02));
      CHECK(f.xi.max_norm() <= 1.0 + 1e-12);
      double div = 0.0;
      for (std::size_t k = 0; k < q.grid().size(); ++k)
        if (q.inside(k)) div = std::max(div, std::abs(f.discrete_div[k] - f.div[k]));
      if (prev_div > 0.0) CHECK(div < 0.7 * prev_div);
      prev_div = div;
    }
  }
  SUBCASE("tangential inside each ball") {
    const DomainMask q = unit_square(1.0 / 128);
    const DivField f = twisting_field(2, q.grid());
    for (const auto& b : twisting_balls(2))
      for (std::size_t k = 0; k < q.grid().size(); ++k) {
        const Vec2 d = q.grid().center(k) - b.center;
        if (norm(d) < b.radius) CHECK(std::abs(dot(f.xi[k], d)) < 1e-12);
      }
  }
  SUBCASE("resolution guard") {
    const DomainMask q = unit_square(1.0 / 512);
    CHECK_NOTHROW(twisting_field(7, q.grid()));
    CHECK_THROWS_AS(twisting_field(8, q.grid()), Error);
    CHECK_THROWS_AS(twisting_field(0, q.grid()), Error);
    try {
      twisting_field(6, unit_square(1.0 / 128).grid());
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ResolutionViolation);
    }
  }
}

TEST_CASE("pairing") {
  const double h = 1.0 / 128;
  const DomainMask m = disk(h);
  const Grid& g = m.grid();
  const ScalarField one(g, 1.0);
  SUBCASE("identity field integrates its divergence") {
    const DivField f = make_div_field(sampled_vec(g, [](Vec2 p) { return p; }));
    CHECK(pairing(f, one, m) == doctest::Approx(2.0 * kPi).epsilon(0.01));
  }
  SUBCASE("constant field has zero net flux") {
    const DivField f = make_div_field(VectorField(g, {1.0, 0.0}));
    CHECK(std::abs(pairing(f, one, m)) <= h);
  }
  SUBCASE("twisting field pairs to zero with any smooth function") {
    const DomainMask q = unit_square(h);
    const DivField f = twisting_field(5, q.grid());
    const ScalarField phi = sampled(q.grid(), [](Vec2 p) { return std::sin(3.0 * p.x) + p.y * p.y + 2.0; });
    CHECK(std::abs(pairing(f, phi, q)) <= h);
  }
  SUBCASE("adjointness away from the boundary") {
    const DivField f = make_div_field(sampled_vec(g, [](Vec2 p) { return Vec2{std::exp(p.y) + p.x * p.x, std::sin(4 * p.x)}; }));
    // Smooth bump supported in r < 0.8, far from the boundary band.
    const ScalarField phi = sampled(g, [](Vec2 p) {
      const double r2 = dot(p, p);
      return r2 < 0.64 ? std::pow(0.64 - r2, 3) * (1.0 + p.x) : 0.0;
    });
    CHECK(std::abs(pairing(f, phi, m)) < 1e-12);
  }
  SUBCASE("locality: equal on the band means equal pairing") {
    const DivField f = make_div_field(sampled_vec(g, [](Vec2 p) { return Vec2{p.x * p.y + 1.0, p.y}; }));
    const ScalarField phi1 = sampled(g, [](Vec2 p) { return 1.0 + p.x; });
    const ScalarField phi2 = sampled(g, [](Vec2 p) {
      const double r2 = dot(p, p);
      return 1.0 + p.x + (r2 < 0.5 ? 3.0 * std::pow(0.5 - r2, 2) : 0.0);
    });
    CHECK(std::abs(pairing(f, phi1, m) - pairing(f, phi2, m)) <= h);
  }
  SUBCASE("non-finite test function rejected") {
    const DivField f = make_div_field(VectorField(g, {1.0, 0.0}));
    ScalarField bad(g, 1.0);
    bad[g.index(g.nx / 2, g.ny / 2)] = std::nan("");
    CHECK_THROWS_AS(pairing(f, bad, m), Error);
  }
}

TEST_CASE("weak normal trace") {
  SUBCASE("constant field on the disk recovers cos theta") {
    const DomainMask m = disk(1.0 / 128);
    const TraceEstimate t = weak_normal_trace(make_div_field(VectorField(m.grid(), {1.0, 0.0})), m);
    REQUIRE(t.arcs.size() == 32);
    CHECK(t.sup_bound_ok);
    CHECK(t.warnings.empty());
    for (const TraceArc& a : t.arcs) {
      CHECK(a.values.size() == 3);
      CHECK(std::abs(a.value - std::cos(angle_of(a.midpoint))) <= 0.05);
      CHECK(norm(a.normal) == doctest::Approx(1.0));
    }
  }
  SUBCASE("classical consistency for a smooth field") {
    const DomainMask m = disk(1.0 / 128);
    auto field = [](Vec2 p) { return Vec2{p.x + p.y * p.y, p.x * p.y}; };
    const TraceEstimate t = weak_normal_trace(make_div_field(sampled_vec(m.grid(), field)), m);
    const double width = 2.0 * kPi / static_cast<double>(t.arcs.size());
    for (const TraceArc& a : t.arcs) {
      const double expect = hat_mean(
          [&](double th) {
            const Vec2 nu{std::cos(th), std::sin(th)};
            return dot(field(nu), nu);
          },
          angle_of(a.midpoint), width);
      CHECK(std::abs(a.value - expect) <= 0.05);
    }
  }
  SUBCASE("twisting field has zero trace on the bottom edge") {
    const DomainMask q = unit_square(1.0 / 512);
    const TraceEstimate t = weak_normal_trace(twisting_field(6, q.grid()), q);
    int bottom = 0;
    for (const TraceArc& a : t.arcs)
      if (a.midpoint.y < 0.01) {
        ++bottom;
        CHECK(std::abs(a.value) <= 0.02);
      }
    CHECK(bottom >= 4);
    CHECK(t.sup_bound_ok);
  }
  SUBCASE("hemisphere flux has unit trace") {
    const DomainMask m = disk(1.0 / 128);
    const TraceEstimate t = weak_normal_trace(flux_field(hemisphere(m)), m);
    CHECK(t.sup_norm == 1.0);
    for (const TraceArc& a : t.arcs) CHECK(std::abs(a.value - 1.0) <= 0.05);
  }
  SUBCASE("sup bound on a rough field") {
    const DomainMask m = disk(1.0 / 64);
    const DivField f = make_div_field(sampled_vec(m.grid(), [](Vec2 p) {
      return Vec2{std::cos(20 * p.x + 7 * p.y), std::sin(13 * p.x * p.y)} * 0.7;
    }));
    const TraceEstimate t = weak_normal_trace(f, m);
    CHECK(t.sup_bound_ok);
    CHECK(t.max_abs() <= f.sup_norm + 0.05);
  }
  SUBCASE("short arcs are merged with a warning") {
    const DomainMask m = disk(1.0 / 64, 0.2);
    TraceConfig cfg;
    cfg.arcs = 64;
    const TraceEstimate t = weak_normal_trace(make_div_field(VectorField(m.grid(), {1.0, 0.0})), m, cfg);
    CHECK_FALSE(t.warnings.empty());
    for (const TraceArc& a : t.arcs) CHECK(a.length >= 4.0 / 64 - 1e-12);
  }
  SUBCASE("band guards") {
    const DomainMask m = disk(1.0 / 64);
    const DivField f = make_div_field(VectorField(m.grid(), {1.0, 0.0}));
    TraceConfig cfg;
    cfg.eps_cells = {8.0, 3.0};
    CHECK_THROWS_AS(weak_normal_trace(f, m, cfg), Error);
    cfg.eps_cells = {8.0, 8.0};
    CHECK_THROWS_AS(weak_normal_trace(f, m, cfg), Error);
    cfg.eps_cells = {8.0, 4.0};
    CHECK_NOTHROW(weak_normal_trace(f, m, cfg));
  }
}

TEST_CASE("Gauss-Green residual") {
  SUBCASE("identity field with unit test function") {
    const DomainMask m = disk(1.0 / 128);
    const DivField f = make_div_field(sampled_vec(m.grid(), [](Vec2 p) { return p; }));
    const ScalarField one(m.grid(), 1.0);
    CHECK(gauss_green_residual(f, one, m, weak_normal_trace(f, m)) <= 0.01 * 2.0 * kPi);
  }
  SUBCASE("twisting field") {
    const DomainMask q = unit_square(1.0 / 256);
    const DivField f = twisting_field(5, q.grid());
    const ScalarField one(q.grid(), 1.0);
    CHECK(gauss_green_residual(f, one, q, weak_normal_trace(f, q)) <= 0.02);
  }
  SUBCASE("residual decreases under refinement for smooth data") {
    std::vector<double> res;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
      const DomainMask m = disk(h);
      const DivField f = make_div_field(sampled_vec(m.grid(), [](Vec2 p) { return Vec2{p.x + p.y * p.y, p.x * p.y}; }));
      const ScalarField phi = sampled(m.grid(), [](Vec2 p) { return 1.0 + p.x * p.x + 0.5 * p.y; });
      TraceConfig cfg;
      cfg.arcs = static_cast<int>(std::lround(2.0 * kPi / (16.0 * h)));
      res.push_back(gauss_green_residual(f, phi, m, weak_normal_trace(f, m, cfg)));
    }
    CHECK(res[0] / res[1] >= 1.5);
    CHECK(res[1] / res[2] >= 1.5);
  }
}

TEST_CASE("verticality flux") {
  const double h = 1.0 / 128;
  const DomainMask m = disk(h);
  const ApproxLadder ladder = build_ladder(m, {0.2, 0.1, 0.05});
  SUBCASE("flat field carries no flux") {
    for (double f : verticality_flux(HeightField{ScalarField(m.grid()), m}, ladder)) CHECK(f == doctest::Approx(0.0));
  }
  SUBCASE("hemisphere flux through inner circles") {
    const auto flux = verticality_flux(hemisphere(m), ladder);
    REQUIRE(flux.size() == 3);
    for (std::size_t l = 0; l < flux.size(); ++l) {
      const double t = ladder.levels[l].t;
      // Tu = x, so the flux through the circle of radius 1 - t is 2 pi (1 - t)^2.
      CHECK(flux[l] == doctest::Approx(2.0 * kPi * (1 - t) * (1 - t)).epsilon(0.02));
      CHECK(flux[l] <= ladder.levels[l].perimeter + 0.01);
    }
    CHECK(flux[0] < flux[1]);
    CHECK(flux[1] < flux[2]);
  }
}

TEST_CASE("boundary layer flux") {
  SUBCASE("distance gradient fills the band") {
    const DomainMask m = disk(1.0 / 128);
    const double eps = 0.1;
    CHECK(boundary_layer_flux(make_div_field(distance_gradient(m)), m, eps) ==
          doctest::Approx(2.0 * kPi * (1.0 - eps / 2.0)).epsilon(0.03));
  }
  SUBCASE("hemisphere flux approaches the perimeter") {
    const DomainMask m = disk(1.0 / 128);
    CHECK(boundary_layer_flux(flux_field(hemisphere(m)), m, 0.05) == doctest::Approx(2.0 * kPi).epsilon(0.07));
  }
  SUBCASE("twisting field is tangential on average") {
    const DomainMask q = unit_square(1.0 / 256);
    CHECK(std::abs(boundary_layer_flux(twisting_field(5, q.grid()), q, 0.05)) <= 0.05);
  }
  SUBCASE("layer narrower than 2h rejected") {
    const DomainMask m = disk(1.0 / 64);
    CHECK_THROWS_AS(boundary_layer_flux(make_div_field(distance_gradient(m)), m, 1.0 / 64), Error);
  }
}

TEST_CASE("bad set density") {
  const double h = 1.0 / 128;
  const DomainMask m = disk(h);
  const std::vector<double> radii{0.4, 0.2, 0.1, 4 * h};
  SUBCASE("maximal trace has vanishing density") {
    const DivField tu = flux_field(hemisphere(m));
    for (Vec2 z : {Vec2{1, 0}, Vec2{0, 1}, Vec2{-0.6, 0.8}}) {
      const DensityProfile d = bad_set_density(tu, m, 0.1, z, radii, 0.2);
      REQUIRE(d.bad_ratio.size() == radii.size());
      REQUIRE(d.cone_ratio.size() == radii.size());
      for (std::size_t l = 1; l < radii.size(); ++l) CHECK(d.bad_ratio[l] <= d.bad_ratio[l - 1] + 1e-12);
      CHECK(d.bad_ratio.back() <= 0.1);
      for (double r : d.bad_ratio) CHECK((r >= 0.0 && r <= kPi + 0.1));
      for (double r : d.cone_ratio) CHECK((r >= 0.0 && r <= kPi + 0.1));
    }
  }
  SUBCASE("tangential field keeps positive density") {
    const DensityProfile d = bad_set_density(make_div_field(VectorField(m.grid(), {1.0, 0.0})), m, 0.5, {0, 1}, radii);
    CHECK(d.cone_ratio.empty());
    for (double r : d.bad_ratio) CHECK(r >= 0.5);
  }
  SUBCASE("radii below 4h rejected") {
    const DivField f = make_div_field(VectorField(m.grid(), {1.0, 0.0}));
    CHECK_THROWS_AS(bad_set_density(f, m, 0.1, {1, 0}, {0.1, 3 * h}), Error);
  }
}

TEST_CASE("approximate limit") {
  const double h = 1.0 / 128;
  const DomainMask m = disk(h);
  SUBCASE("continuous field at an interior point") {
    const VectorField f = sampled_vec(m.grid(), [](Vec2 p) { return Vec2{1.0 + p.x, p.y * p.y}; });
    const ApproxLimit a = approx_limit(f, m, {0.2, 0.1}, 0.05, {0.3, 0.1, 0.05, 0.02});
    CHECK(a.exists);
    CHECK(a.estimate.x == doctest::Approx(1.2).epsilon(0.01));
    CHECK(a.estimate.y == doctest::Approx(0.01).epsilon(0.01).scale(1.0));
    CHECK(a.residual_mass.back() == 0.0);
  }
  SUBCASE("hemisphere flux tends to the normal") {
    const VectorField tu = flux_field(hemisphere(m)).xi;
    for (Vec2 z : {Vec2{1, 0}, Vec2{-0.6, 0.8}}) {
      const ApproxLimit a = approx_limit(tu, m, z, 0.1, {0.4, 0.2, 0.1, 4 * h});
      CHECK(a.exists);
      CHECK(norm(a.estimate - z) <= 0.05);
      CHECK(a.residual_mass.back() < a.residual_mass.front());
    }
  }
  SUBCASE("twisting field has no limit at the bottom edge") {
    const int i_max = 6;
    const DomainMask q = unit_square(1.0 / 512);
    std::vector<double> radii;
    for (int i = 2; i < i_max; ++i) radii.push_back(std::ldexp(1.0, -i));
    const ApproxLimit a = approx_limit(twisting_field(i_max, q.grid()).xi, q, {0.5, 0.0}, 0.1, radii);
    CHECK_FALSE(a.exists);
    for (double r : a.residual_mass) CHECK(r >= 0.1);
  }
  SUBCASE("radii below 2h rejected") {
    CHECK_THROWS_AS(approx_limit(VectorField(m.grid()), m, {0, 0}, 0.1, {0.1, h}), Error);
  }
}
