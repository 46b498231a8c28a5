#include <algorithm>
#include <limits>
#include <unordered_map>

#include "geometry_internal.hpp"
#include "pmc/geometry.hpp"

namespace pmc {

namespace detail {

double mollifier_radius(double h) { return std::max(2.0 * h, 2.0 * std::sqrt(h * kReferenceSpacing)); }

double normal_smoothing_width(double h) { return std::max(4.0 * h, 0.4 * std::sqrt(h)); }

ScalarField mollified_indicator(const Grid& g, const std::vector<std::uint8_t>& on) {
  // Radial kernel (1 - r^2/R^2)^2 sampled on the integer offsets it covers.
  const double radius = mollifier_radius(g.h) / g.h;
  const int reach = static_cast<int>(std::ceil(radius));
  struct Tap {
    int di, dj;
    double w;
  };
  std::vector<Tap> taps;
  double total = 0.0;
  for (int dj = -reach; dj <= reach; ++dj) {
    for (int di = -reach; di <= reach; ++di) {
      const double q = std::hypot(di, dj) / radius;
      if (q >= 1.0) continue;
      const double w = (1 - q * q) * (1 - q * q);
      taps.push_back({di, dj, w});
      total += w;
    }
  }
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double s = 0.0;
      for (const Tap& t : taps) {
        const int a = i + t.di, b = j + t.dj;
        if (g.contains(a, b) && on[g.index(a, b)]) s += t.w;
      }
      out(i, j) = s / total;
    }
  }
  return out;
}

ScalarField gaussian_smooth(const ScalarField& in, double sigma) {
  const Grid& g = in.grid();
  const double sc = sigma / g.h;
  const int reach = static_cast<int>(std::ceil(3.0 * sc));
  std::vector<double> w(2 * reach + 1);
  for (int a = -reach; a <= reach; ++a) w[a + reach] = std::exp(-0.5 * a * a / (sc * sc));
  ScalarField tmp(g), out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double v = 0.0, ws = 0.0;
      for (int a = std::max(-reach, -i); a <= std::min(reach, g.nx - 1 - i); ++a) {
        v += w[a + reach] * in(i + a, j);
        ws += w[a + reach];
      }
      tmp(i, j) = v / ws;
    }
  }
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double v = 0.0, ws = 0.0;
      for (int a = std::max(-reach, -j); a <= std::min(reach, g.ny - 1 - j); ++a) {
        v += w[a + reach] * tmp(i, j + a);
        ws += w[a + reach];
      }
      out(i, j) = v / ws;
    }
  }
  return out;
}

VectorField outward_normal_field(const DomainMask& mask) {
  const Grid& g = mask.grid();
  const double sigma = normal_smoothing_width(g.h);
  // Pad so the blur never sees the grid edge; the distance there is recomputed exactly.
  const int pad = static_cast<int>(std::ceil(3.0 * sigma / g.h)) + 2;
  const Grid big(g.nx + 2 * pad, g.ny + 2 * pad, g.h, g.origin - Vec2{pad * g.h, pad * g.h});
  std::vector<std::uint8_t> on(big.size(), 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) on[big.index(i + pad, j + pad)] = mask.inside(i, j) ? 1 : 0;
  const ScalarField d = gaussian_smooth(signed_distance(DomainMask(big, std::move(on), pad)), sigma);
  VectorField n(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int bi = i + pad, bj = j + pad;
      n(i, j) = {(d(bi + 1, bj) - d(bi - 1, bj)) / (2.0 * g.h), (d(bi, bj + 1) - d(bi, bj - 1)) / (2.0 * g.h)};
    }
  }
  return n;
}

std::vector<Polyline> contour(const ScalarField& f, double level) {
  const Grid& g = f.grid();
  // Edge ids: 2*index(i,j) for the horizontal edge (i,j)-(i+1,j), +1 for the vertical edge (i,j)-(i,j+1).
  auto hedge = [&](int i, int j) { return 2 * g.index(i, j); };
  auto vedge = [&](int i, int j) { return 2 * g.index(i, j) + 1; };
  auto lerp_point = [&](int ia, int ja, int ib, int jb) {
    const double fa = f(ia, ja), fb = f(ib, jb);
    const double t = (level - fa) / (fb - fa);
    const Vec2 pa = g.center(ia, ja), pb = g.center(ib, jb);
    return pa + t * (pb - pa);
  };

  struct Segment {
    std::size_t to;
    Vec2 from_point;
  };
  std::unordered_map<std::size_t, Segment> next;

  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      // Corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
      const int ci[4] = {i, i + 1, i + 1, i};
      const int cj[4] = {j, j, j + 1, j + 1};
      bool in[4];
      int n_in = 0;
      for (int c = 0; c < 4; ++c) {
        in[c] = f(ci[c], cj[c]) > level;
        n_in += in[c];
      }
      if (n_in == 0 || n_in == 4) continue;
      const std::size_t edge_id[4] = {hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)};
      auto edge_point = [&](int e) {
        const int a = e, b = (e + 1) % 4;
        return lerp_point(ci[a], cj[a], ci[b], cj[b]);
      };
      auto emit = [&](int from, int to) { next[edge_id[from]] = Segment{edge_id[to], edge_point(from)}; };

      const bool saddle = n_in == 2 && in[0] == in[2];
      if (saddle) {
        double mean = 0.0;
        for (int c = 0; c < 4; ++c) mean += f(ci[c], cj[c]);
        const bool center_in = 0.25 * mean > level;
        if (in[0]) {
          if (center_in) {
            emit(0, 1);
            emit(2, 3);
          } else {
            emit(0, 3);
            emit(2, 1);
          }
        } else {
          if (center_in) {
            emit(1, 2);
            emit(3, 0);
          } else {
            emit(1, 0);
            emit(3, 2);
          }
        }
        continue;
      }
      int exit_edge = -1, entry_edge = -1;
      for (int e = 0; e < 4; ++e) {
        const bool a = in[e], b = in[(e + 1) % 4];
        if (a && !b) exit_edge = e;
        if (!a && b) entry_edge = e;
      }
      emit(exit_edge, entry_edge);
    }
  }

  std::vector<Polyline> curves;
  while (!next.empty()) {
    Polyline poly;
    const std::size_t start = next.begin()->first;
    std::size_t cur = start;
    bool closed = true;
    while (true) {
      auto it = next.find(cur);
      if (it == next.end()) {
        closed = false;
        break;
      }
      poly.points.push_back(it->second.from_point);
      cur = it->second.to;
      next.erase(it);
      if (cur == start) break;
    }
    poly.closed = closed;
    if (poly.points.size() >= 2) curves.push_back(std::move(poly));
  }
  // Deterministic order: by lowest-left first vertex.
  std::sort(curves.begin(), curves.end(), [](const Polyline& a, const Polyline& b) {
    const auto ka = std::min_element(a.points.begin(), a.points.end(), [](Vec2 p, Vec2 q) {
      return p.y < q.y || (p.y == q.y && p.x < q.x);
    });
    const auto kb = std::min_element(b.points.begin(), b.points.end(), [](Vec2 p, Vec2 q) {
      return p.y < q.y || (p.y == q.y && p.x < q.x);
    });
    return ka->y < kb->y || (ka->y == kb->y && ka->x < kb->x);
  });
  for (auto& c : curves) {
    // Start each closed curve at its lowest-left vertex so output does not depend on hash order.
    if (!c.closed) continue;
    auto it = std::min_element(c.points.begin(), c.points.end(),
                               [](Vec2 p, Vec2 q) { return p.y < q.y || (p.y == q.y && p.x < q.x); });
    std::rotate(c.points.begin(), it, c.points.end());
  }
  return curves;
}

double clipped_length(Vec2 a, Vec2 b, const Region& r) {
  // Liang-Barsky parametric clip.
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - r.lo.x, r.hi.x - a.x, a.y - r.lo.y, r.hi.y - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return 0.0;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
  }
  return t1 > t0 ? (t1 - t0) * norm(d) : 0.0;
}

double set_perimeter(const Grid& g, const std::vector<std::uint8_t>& on) {
  double total = 0.0;
  for (const Polyline& c : contour(mollified_indicator(g, on), 0.5)) total += c.length();
  return total;
}

}  // namespace detail

double Polyline::length() const {
  double s = 0.0;
  for (std::size_t k = 0; k < segment_count(); ++k) s += norm(segment_end(k) - segment_start(k));
  return s;
}

std::vector<Polyline> boundary_polylines(const DomainMask& mask) {
  return detail::contour(detail::mollified_indicator(mask.grid(), mask.cells()), 0.5);
}

double perimeter(const DomainMask& mask, std::optional<Region> region) {
  double total = 0.0;
  for (const Polyline& c : boundary_polylines(mask)) {
    for (std::size_t s = 0; s < c.segment_count(); ++s) {
      const Vec2 a = c.segment_start(s), b = c.segment_end(s);
      total += region ? detail::clipped_length(a, b, *region) : norm(b - a);
    }
  }
  return total;
}

namespace {

double tv_impl(const ScalarField& u, const std::optional<Region>& region) {
  const Grid& g = u.grid();
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (region && !region->contains(g.center(i, j))) continue;
      const double dx = i + 1 < g.nx ? u(i + 1, j) - u(i, j) : 0.0;
      const double dy = j + 1 < g.ny ? u(i, j + 1) - u(i, j) : 0.0;
      s += std::sqrt(dx * dx + dy * dy);
    }
  }
  return s * g.h;
}

}  // namespace

double total_variation(const ScalarField& u) { return tv_impl(u, std::nullopt); }

double perimeter(const RelaxedIndicator& u, std::optional<Region> region) { return tv_impl(u.field(), region); }

BoundaryNormals boundary_normals(const DomainMask& mask) {
  const VectorField grad = detail::outward_normal_field(mask);
  BoundaryNormals out;
  out.curves = boundary_polylines(mask);
  for (std::size_t c = 0; c < out.curves.size(); ++c) {
    const Polyline& poly = out.curves[c];
    out.total_length += poly.length();
    for (std::size_t v = 0; v < poly.points.size(); ++v) {
      const Vec2 p = poly.points[v];
      Vec2 n = grad.sample(p);
      double len = norm(n);
      if (len < 1e-12) {
        // Degenerate gradient: use the polyline tangent (interior on the left).
        const std::size_t s = v % poly.segment_count();
        const Vec2 t = poly.segment_end(s) - poly.segment_start(s);
        n = Vec2{t.y, -t.x};
        len = norm(n);
      }
      out.points.push_back({p, n / len, c, v});
    }
  }
  return out;
}

ClosestPoint closest_boundary_point(const std::vector<Polyline>& curves, Vec2 p) {
  ClosestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const Polyline& poly = curves[c];
    double arc = 0.0;
    for (std::size_t s = 0; s < poly.segment_count(); ++s) {
      const Vec2 a = poly.segment_start(s), b = poly.segment_end(s);
      const Vec2 ab = b - a;
      const double len2 = dot(ab, ab);
      const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
      const Vec2 q = a + t * ab;
      const double dist = norm(p - q);
      const double len = std::sqrt(len2);
      if (dist < best.distance) best = {q, dist, c, s, arc + t * len};
      arc += len;
    }
  }
  return best;
}

}  // namespace pmc
