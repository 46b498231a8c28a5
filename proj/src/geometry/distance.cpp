#include <algorithm>
#include <limits>

#include "geometry_internal.hpp"
#include "pmc/geometry.hpp"

namespace pmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (x - pos[m])^2 + height[m] sampled at integer x = 0..n-1.
// Positions must be increasing; infinite heights are skipped.
void parabola_envelope(const std::vector<double>& pos, const std::vector<double>& height, int n,
                       std::vector<double>& out) {
  std::vector<int> site;
  std::vector<double> from;
  site.reserve(pos.size());
  from.reserve(pos.size() + 1);
  auto meet = [&](int a, int b) {
    return ((height[b] + pos[b] * pos[b]) - (height[a] + pos[a] * pos[a])) / (2.0 * (pos[b] - pos[a]));
  };
  for (int m = 0; m < static_cast<int>(pos.size()); ++m) {
    if (!std::isfinite(height[m])) continue;
    while (!site.empty()) {
      const double s = meet(site.back(), m);
      if (s <= from.back()) {
        site.pop_back();
        from.pop_back();
      } else {
        break;
      }
    }
    from.push_back(site.empty() ? -kInf : meet(site.back(), m));
    site.push_back(m);
  }
  out.assign(n, kInf);
  if (site.empty()) return;
  std::size_t k = 0;
  for (int x = 0; x < n; ++x) {
    while (k + 1 < site.size() && from[k + 1] < x) ++k;
    const double d = x - pos[site[k]];
    out[x] = d * d + height[site[k]];
  }
}

}  // namespace

namespace detail {

std::vector<double> squared_distance_to_cells(const Grid& g, const std::vector<std::uint8_t>& target) {
  const int nx = g.nx, ny = g.ny;
  // Row pass: distance along x to the nearest target square in the same row.
  std::vector<double> row(g.size(), kInf);
  for (int j = 0; j < ny; ++j) {
    int last = -1;
    for (int i = 0; i < nx; ++i) {
      if (target[g.index(i, j)]) last = i;
      if (last >= 0) {
        const double f = (i == last) ? 0.0 : (i - last) - 0.5;
        row[g.index(i, j)] = f * f;
      }
    }
    last = -1;
    for (int i = nx - 1; i >= 0; --i) {
      if (target[g.index(i, j)]) last = i;
      if (last >= 0) {
        const double f = (i == last) ? 0.0 : (last - i) - 0.5;
        row[g.index(i, j)] = std::min(row[g.index(i, j)], f * f);
      }
    }
  }
  // Column pass. For l != j the offset (|j-l| - 1/2)^2 equals min over (j - (l +- 1/2))^2, so the
  // envelope runs over half-integer sites; same-row squares contribute with zero vertical offset.
  std::vector<double> out(g.size(), kInf);
  std::vector<double> pos(ny + 1), height(ny + 1), env;
  for (int i = 0; i < nx; ++i) {
    for (int m = 0; m <= ny; ++m) {
      pos[m] = m - 0.5;
      const double below = m > 0 ? row[g.index(i, m - 1)] : kInf;
      const double above = m < ny ? row[g.index(i, m)] : kInf;
      height[m] = std::min(below, above);
    }
    parabola_envelope(pos, height, ny, env);
    for (int j = 0; j < ny; ++j) out[g.index(i, j)] = std::min(env[j], row[g.index(i, j)]);
  }
  return out;
}

}  // namespace detail

ScalarField signed_distance(const DomainMask& mask) {
  const Grid& g = mask.grid();
  std::vector<std::uint8_t> outside(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) outside[k] = mask.inside(k) ? 0 : 1;
  const auto to_outside = detail::squared_distance_to_cells(g, outside);
  const auto to_inside = detail::squared_distance_to_cells(g, mask.cells());
  ScalarField d(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    d[k] = mask.inside(k) ? -std::sqrt(to_outside[k]) * g.h : std::sqrt(to_inside[k]) * g.h;
  return d;
}

}  // namespace pmc
