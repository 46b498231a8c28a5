#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmc/geometry.hpp"

using namespace pmc;

namespace {

constexpr double kPi = std::numbers::pi;

Grid grid_for(const AnalyticDomain& dom, double h, int margin = 3) {
  const auto [lo, hi] = dom.bounds();
  return Grid::covering(lo, hi, h, margin);
}

DomainMask disk_mask(double radius, double h) {
  AnalyticDomain dom(Disk{{0, 0}, radius});
  return rasterize(dom, grid_for(dom, h));
}

// Brute-force distance from a point to the union of closed cell squares.
double brute_distance(const Grid& g, const std::vector<std::uint8_t>& target, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!target[k]) continue;
    const Vec2 c = g.center(k);
    const double dx = std::max(0.0, std::abs(p.x - c.x) - 0.5 * g.h);
    const double dy = std::max(0.0, std::abs(p.y - c.y) - 0.5 * g.h);
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

}  // namespace

TEST_CASE("grid cell centres are injective and respect the origin") {
  Grid g(10, 12, 0.25, {-1.0, 2.0});
  CHECK(g.center(0, 0).x == doctest::Approx(-0.875));
  CHECK(g.center(0, 0).y == doctest::Approx(2.125));
  CHECK(g.col(g.index(7, 5)) == 7);
  CHECK(g.row(g.index(7, 5)) == 5);
  CHECK_THROWS_AS(Grid(4, 10, 0.1, {}), Error);
  CHECK_THROWS_AS(Grid(10, 10, 0.0, {}), Error);
}

TEST_CASE("rasterize") {
  SUBCASE("unit disk area within 1% of pi on a 256^2 grid") {
    AnalyticDomain dom(Disk{{0, 0}, 1.0});
    Grid g(256, 256, 2.1 / 256, {-1.05, -1.05});
    const DomainMask m = rasterize(dom, g);
    CHECK(std::abs(area(m) - kPi) < 0.01 * kPi);
  }
  SUBCASE("grid-aligned box has exact area and 1% perimeter") {
    AnalyticDomain dom(Box{{0, 0}, 1.0});
    const DomainMask m = rasterize(dom, grid_for(dom, 1.0 / 128));
    CHECK(area(m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(perimeter(m) - 4.0) < 0.04);
  }
  SUBCASE("sub-resolution hole is dropped with a warning") {
    const double h = 1.0 / 64;
    AnalyticDomain dom(DiskMinusBalls{1.0, {Hole{{0.3, 0.2}, 0.4 * h}}});
    const DomainMask m = rasterize(dom, grid_for(dom, h));
    REQUIRE(m.warnings().size() == 1);
    CHECK(m.warnings()[0].find("dropped") != std::string::npos);
    CHECK(m.count() == disk_mask(1.0, h).count());
  }
  SUBCASE("domain that touches the margin is rejected") {
    AnalyticDomain dom(Disk{{0, 0}, 1.0});
    Grid g(64, 64, 2.0 / 64, {-1.0, -1.0});
    CHECK_THROWS_AS(rasterize(dom, g), Error);
  }
  SUBCASE("hole pattern that severs the domain is rejected") {
    // Two holes meeting a thin annulus cut it into two arcs.
    AnalyticDomain dom(DiskMinusBalls{1.0, {Hole{{0.0, 0.0}, 0.9}}});
    const double h = 1.0 / 32;
    Grid g = grid_for(dom, h);
    // Cut the ring with a vertical slit by building from a predicate.
    auto pred = [&](Vec2 p) { return dom.contains(p) && std::abs(p.x) > 2 * h; };
    try {
      DomainMask::from_predicate(g, pred);
      FAIL("expected disconnected raster");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DisconnectedRaster);
    }
  }
}

TEST_CASE("swiss cheese construction") {
  SUBCASE("first hole from direct substitution") {
    const auto holes = swiss_cheese_holes(2.0, 0.01, 0.1, 1);
    REQUIRE(holes.size() == 1);
    CHECK(holes[0].rho == doctest::Approx(0.975));
    CHECK(holes[0].radius == doctest::Approx(0.000625));
    CHECK(holes[0].theta == doctest::Approx(kPi / 4));
  }
  SUBCASE("no holes gives the unit disk") {
    const AnalyticDomain d = swiss_cheese(2.0, 0.01, 0.1, 0);
    CHECK(d.exact_area() == doctest::Approx(kPi));
    CHECK(d.exact_perimeter() == doctest::Approx(2 * kPi));
  }
  SUBCASE("parameter constraints") {
    CHECK_THROWS_AS(swiss_cheese(2.0, 0.1, 0.1, 2), Error);
    CHECK_THROWS_AS(swiss_cheese(1.0, 0.01, 0.1, 2), Error);
    CHECK_THROWS_AS(swiss_cheese(2.0, 0.01, 1.0, 2), Error);
  }
  SUBCASE("overlapping holes are rejected") {
    CHECK_THROWS_AS(AnalyticDomain(DiskMinusBalls{1.0, {Hole{{0.1, 0}, 0.2}, Hole{{0.3, 0}, 0.2}}}), Error);
  }
  SUBCASE("exact perimeter and area agree with independent summation") {
    for (int i_max = 1; i_max <= 5; ++i_max) {
      const AnalyticDomain d = swiss_cheese(1.1, 0.05, 0.3, i_max);
      double sum_r = 0.0, sum_r2 = 0.0;
      std::size_t n = 0;
      for (int i = 1; i <= i_max; ++i)
        for (int j = 1; j <= i; ++j, ++n) {
          const double r = 0.05 / std::pow(1.1, 2 * i * i + 2 * j);
          sum_r += r;
          sum_r2 += r * r;
        }
      CHECK(std::get<DiskMinusBalls>(d.shape()).holes.size() == n);
      CHECK(d.exact_perimeter() == doctest::Approx(2 * kPi + 2 * kPi * sum_r).epsilon(1e-14));
      CHECK(d.exact_area() == doctest::Approx(kPi - kPi * sum_r2).epsilon(1e-14));
    }
  }
}

TEST_CASE("signed distance") {
  SUBCASE("matches brute force distance to cell squares") {
    std::mt19937 rng(7);
    Grid g(20, 17, 0.1, {0, 0});
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::uint8_t> cells(g.size(), 0);
      // Random blob: union of a few discs, guaranteed inside the margin.
      std::uniform_real_distribution<double> cx(0.6, 1.4), cy(0.6, 1.1), rr(0.1, 0.45);
      const Vec2 c0{cx(rng), cy(rng)};
      const double r0 = rr(rng);
      for (std::size_t k = 0; k < g.size(); ++k) cells[k] = norm(g.center(k) - c0) < r0 ? 1 : 0;
      cells[g.index(10, 8)] = 1;
      std::size_t n = 0;
      for (auto c : cells) n += c;
      if (n == 0) continue;
      DomainMask m;
      try {
        m = DomainMask(g, cells);
      } catch (const Error&) {
        continue;
      }
      const ScalarField d = signed_distance(m);
      std::vector<std::uint8_t> outside(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) outside[k] = m.inside(k) ? 0 : 1;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double expect = m.inside(k) ? -brute_distance(g, outside, g.center(k))
                                          : brute_distance(g, m.cells(), g.center(k));
        CHECK(d[k] == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  SUBCASE("unit disk examples") {
    const double h = 1.0 / 64;
    // Odd cell count so that the disk centre is a cell centre.
    const Grid g(137, 137, h, {-68.5 * h, -68.5 * h});
    const DomainMask m = rasterize(AnalyticDomain(Disk{{0, 0}, 1.0}), g);
    const ScalarField d = signed_distance(m);
    CHECK(std::abs(d(68, 68) + 1.0) <= h);
    CHECK(d(0, 0) > 0.0);
    for (int i = 0; i < g.nx; ++i) {
      const int j = g.ny / 2;
      if (m.inside(i, j) && !m.inside(i - 1, j)) {
        CHECK(d(i, j) < 0.0);
        CHECK(d(i, j) > -h);
      }
    }
  }
}

TEST_CASE("area and perimeter") {
  SUBCASE("disk radius 1 at h = 1/128") {
    const DomainMask m = disk_mask(1.0, 1.0 / 128);
    CHECK(std::abs(area(m) - kPi) < 0.01 * kPi);
  }
  SUBCASE("relaxed constant indicator on unit box") {
    AnalyticDomain dom(Box{{0, 0}, 1.0});
    const DomainMask m = rasterize(dom, grid_for(dom, 1.0 / 32));
    CHECK(area(RelaxedIndicator::constant(m, 0.5)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(area(RelaxedIndicator::constant(m, 0.0)) == 0.0);
    CHECK(perimeter(RelaxedIndicator::constant(m, 0.0)) == 0.0);
  }
  SUBCASE("disk radius 0.4 in the unit box at h = 1/256") {
    AnalyticDomain dom(Disk{{0.5, 0.5}, 0.4});
    const DomainMask m = rasterize(dom, Grid::covering({0, 0}, {1, 1}, 1.0 / 256, 2));
    CHECK(std::abs(perimeter(m) - 2 * kPi * 0.4) < 0.01 * 2 * kPi * 0.4);
  }
  SUBCASE("mask filling the grid interior has the bounding rectangle perimeter") {
    Grid g(120, 90, 1.0 / 64, {0, 0});
    const DomainMask m = DomainMask::from_predicate(
        g, [&](Vec2 p) { return p.x > 2 * g.h && p.y > 2 * g.h && p.x < (g.nx - 2) * g.h && p.y < (g.ny - 2) * g.h; });
    const double expect = 2 * ((g.nx - 4) + (g.ny - 4)) * g.h;
    CHECK(std::abs(perimeter(m) - expect) < 0.01 * expect);
  }
  SUBCASE("relaxed smoothed disk indicator: TV within 2% of 2 pi R") {
    const double R = 0.6, h = 1.0 / 128;
    Grid g = Grid::covering({-1, -1}, {1, 1}, h, 2);
    const DomainMask support = DomainMask::from_predicate(g, [](Vec2 p) { return norm(p) < 0.9; });
    ScalarField u(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double r = norm(g.center(k));
      u[k] = 0.5 * (1.0 - std::tanh((r - R) / (3 * h)));
    }
    const RelaxedIndicator ind(support, u);
    CHECK(std::abs(perimeter(ind) - 2 * kPi * R) < 0.02 * 2 * kPi * R);
  }
  SUBCASE("relative perimeter counts only the window") {
    AnalyticDomain dom(Box{{0, 0}, 1.0});
    const DomainMask m = rasterize(dom, grid_for(dom, 1.0 / 64));
    const double left = perimeter(m, Region{{-0.5, 0.2}, {0.3, 0.8}});
    CHECK(left == doctest::Approx(0.6).epsilon(0.02));
    CHECK(perimeter(m, Region{{0.3, 0.3}, {0.7, 0.7}}) == 0.0);
  }
  SUBCASE("perimeter converges under refinement") {
    double prev = std::numeric_limits<double>::infinity();
    const double exact = 2 * kPi * 0.4;
    std::vector<double> errs;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
      AnalyticDomain dom(Disk{{0.5, 0.5}, 0.4});
      const DomainMask m = rasterize(dom, Grid::covering({0, 0}, {1, 1}, h, 2));
      const double err = std::abs(perimeter(m) - exact);
      errs.push_back(err);
      CHECK(err < prev);
      prev = err;
    }
    CHECK(errs[0] / errs[1] > 1.3);
    CHECK(errs[1] / errs[2] > 1.3);
    CHECK(errs[2] < 0.01 * exact);
  }
}

TEST_CASE("interior approximation") {
  SUBCASE("disk parallel set") {
    const DomainMask m = disk_mask(1.0, 1.0 / 128);
    const Erosion e = interior_approximation(m, 0.1);
    CHECK(e.components == 1);
    CHECK(std::abs(perimeter(e.mask) - 2 * kPi * 0.9) < 0.02 * 2 * kPi * 0.9);
    CHECK(e.mask.subset_of(m));
  }
  SUBCASE("box erosion") {
    AnalyticDomain dom(Box{{0, 0}, 1.0});
    const DomainMask m = rasterize(dom, grid_for(dom, 1.0 / 128));
    const Erosion e = interior_approximation(m, 0.25);
    CHECK(area(e.mask) == doctest::Approx(0.25).epsilon(0.04));
    CHECK(std::abs(perimeter(e.mask) - 2.0) < 0.02 * 2.0);
  }
  SUBCASE("dumbbell neck is cut and one lobe kept with a warning") {
    const double h = 1.0 / 64;
    Grid g = Grid::covering({-1.6, -0.6}, {1.6, 0.6}, h, 3);
    auto pred = [](Vec2 p) {
      return norm(p - Vec2{-1.0, 0}) < 0.5 || norm(p - Vec2{1.0, 0}) < 0.45 || (std::abs(p.x) < 0.8 && std::abs(p.y) < 0.05);
    };
    const DomainMask m = DomainMask::from_predicate(g, pred);
    const Erosion e = interior_approximation(m, 0.1);
    CHECK(e.components == 2);
    CHECK(e.mask.warnings().size() == 1);
    // The larger (left) lobe survives.
    CHECK(e.mask.inside(g.to_cell_coords({-1.0, 0}).x, g.to_cell_coords({-1.0, 0}).y));
    CHECK(std::abs(area(e.mask) - kPi * 0.4 * 0.4) < 0.05 * kPi * 0.16);
  }
  SUBCASE("monotone in the erosion depth") {
    const DomainMask m = disk_mask(1.0, 1.0 / 64);
    const Erosion a = interior_approximation(m, 0.05);
    const Erosion b = interior_approximation(m, 0.15);
    CHECK(b.mask.subset_of(a.mask));
  }
  SUBCASE("too deep is an error") {
    const DomainMask m = disk_mask(1.0, 1.0 / 32);
    try {
      interior_approximation(m, 1.2);
      FAIL("expected erosion-empty");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ErosionEmpty);
    }
  }
}

TEST_CASE("approximation ladder") {
  SUBCASE("disk perimeters follow 2 pi (1 - t)") {
    const DomainMask m = disk_mask(1.0, 1.0 / 128);
    const ApproxLadder lad = build_ladder(m, {0.2, 0.1, 0.05});
    REQUIRE(lad.levels.size() == 3);
    for (const auto& lv : lad.levels) CHECK(std::abs(lv.perimeter - 2 * kPi * (1 - lv.t)) < 0.02 * 2 * kPi * (1 - lv.t));
    CHECK(lad.levels[0].mask.subset_of(lad.levels[1].mask));
    CHECK(lad.levels[1].mask.subset_of(lad.levels[2].mask));
  }
  SUBCASE("swiss cheese ladder approaches the exact perimeter") {
    const double h = 1.0 / 512;
    const AnalyticDomain dom = swiss_cheese(1.1, 0.05, 0.3, 2);
    const DomainMask m = rasterize(dom, grid_for(dom, h));
    const ApproxLadder lad = build_ladder(m, {32 * h, 16 * h, 8 * h, 4 * h});
    CHECK(std::abs(lad.levels.back().perimeter - dom.exact_perimeter()) < 0.03 * dom.exact_perimeter());
    CHECK(lad.perimeter_converges);
  }
  SUBCASE("non-decreasing schedule rejected") {
    const DomainMask m = disk_mask(1.0, 1.0 / 32);
    CHECK_THROWS_AS(build_ladder(m, {0.1, 0.2}), Error);
    CHECK_THROWS_AS(build_ladder(m, {0.1, 0.1}), Error);
  }
}

TEST_CASE("inner Minkowski content") {
  const std::vector<double> sched{0.08, 0.06, 0.04, 0.03};
  SUBCASE("disk") {
    const MinkowskiEstimate est = inner_minkowski_content(disk_mask(1.0, 1.0 / 128), sched);
    CHECK(std::abs(est.content - 2 * kPi) < 0.03 * 2 * kPi);
  }
  SUBCASE("box") {
    AnalyticDomain dom(Box{{0, 0}, 1.0});
    const MinkowskiEstimate est = inner_minkowski_content(rasterize(dom, grid_for(dom, 1.0 / 128)), sched);
    CHECK(std::abs(est.content - 4.0) < 0.03 * 4.0);
  }
  SUBCASE("swiss cheese i_max = 3") {
    const AnalyticDomain dom = swiss_cheese(1.1, 0.05, 0.3, 3);
    const double h = 1.0 / 256;
    const MinkowskiEstimate est =
        inner_minkowski_content(rasterize(dom, grid_for(dom, h)), {0.04, 0.03, 0.02, 0.01});
    CHECK(std::abs(est.content - dom.exact_perimeter()) < 0.05 * dom.exact_perimeter());
  }
  SUBCASE("agrees with the raster perimeter for the disk") {
    const DomainMask m = disk_mask(1.0, 1.0 / 128);
    const double p = perimeter(m);
    CHECK(std::abs(inner_minkowski_content(m, sched).content - p) < 0.03 * p);
  }
  SUBCASE("depth below 2h rejected") {
    const double h = 1.0 / 64;
    CHECK_THROWS_AS(inner_minkowski_content(disk_mask(1.0, h), {0.1, 1.5 * h}), Error);
  }
}

TEST_CASE("boundary normals") {
  SUBCASE("disk normals are radial") {
    const BoundaryNormals bn = boundary_normals(disk_mask(1.0, 1.0 / 128));
    double worst = 0.0;
    for (const auto& bp : bn.points) {
      CHECK(norm(bp.normal) == doctest::Approx(1.0).epsilon(1e-12));
      const Vec2 radial = bp.position / norm(bp.position);
      worst = std::max(worst, std::acos(std::clamp(dot(radial, bp.normal), -1.0, 1.0)));
    }
    CHECK(worst < 0.05);
  }
  SUBCASE("box edge midpoint normal is an axis vector") {
    AnalyticDomain dom(Box{{0, 0}, 1.0});
    const double h = 1.0 / 64;
    const BoundaryNormals bn = boundary_normals(rasterize(dom, grid_for(dom, h)));
    const auto it = std::min_element(bn.points.begin(), bn.points.end(), [](const auto& a, const auto& b) {
      return norm(a.position - Vec2{0.5, 0.0}) < norm(b.position - Vec2{0.5, 0.0});
    });
    CHECK(std::abs(it->normal.x) < h);
    CHECK(it->normal.y == doctest::Approx(-1.0).epsilon(h));
  }
  SUBCASE("segment lengths sum to the perimeter") {
    const DomainMask m = rasterize(swiss_cheese(1.1, 0.05, 0.3, 2), Grid::covering({-1, -1}, {1, 1}, 1.0 / 128, 3));
    const BoundaryNormals bn = boundary_normals(m);
    CHECK(bn.total_length == doctest::Approx(perimeter(m)).epsilon(1e-13));
    CHECK(bn.curves.size() == 4);
  }
}

TEST_CASE("super-reduced boundary probe") {
  const double h = 1.0 / 256;
  SUBCASE("smooth disk boundary point") {
    const DomainMask m = disk_mask(1.0, h);
    const BoundaryNormals bn = boundary_normals(m);
    const Vec2 z = bn.points[bn.points.size() / 3].position;
    const auto rep = super_reduced_test(m, z, {0.2, 0.1, 0.05, 0.025}, 0.3);
    CHECK(rep.verdict == SuperReduced::Yes);
  }
  SUBCASE("holes accumulating radially at (1, 0)") {
    DiskMinusBalls d{1.0, {}};
    for (int k = 0; k < 5; ++k) {
      const double c = 0.4 * std::pow(0.5, k);
      d.holes.push_back({{1.0 - c, 0.0}, c / 4});
    }
    const DomainMask m = rasterize(AnalyticDomain(d), Grid::covering({-1, -1}, {1, 1}, h, 3));
    const auto rep = super_reduced_test(m, {1.0 - 0.5 * h, 0.0}, {0.4, 0.2, 0.1, 0.05}, 0.3);
    CHECK(rep.verdict == SuperReduced::No);
  }
  SUBCASE("scale below 4h is inconclusive") {
    const DomainMask m = disk_mask(1.0, h);
    const auto rep = super_reduced_test(m, {0.0, 1.0 - 0.5 * h}, {0.1, 2 * h}, 0.3);
    CHECK(rep.verdict == SuperReduced::Inconclusive);
  }
  SUBCASE("point away from the boundary") {
    const DomainMask m = disk_mask(1.0, h);
    try {
      super_reduced_test(m, {0.0, 0.5}, {0.1, 0.05}, 0.3);
      FAIL("expected point-not-on-boundary");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PointNotOnBoundary);
    }
  }
}
