#include <algorithm>
#include <numbers>

#include "pmc/geometry.hpp"

namespace pmc {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

bool in_disk(Vec2 p, Vec2 c, double r) { return norm(p - c) < r; }

}  // namespace

AnalyticDomain::AnalyticDomain(Variant v) : shape_(std::move(v)) {
  std::visit(Overloaded{
                 [](const Disk& d) {
                   if (!(d.radius > 0)) throw Error(ErrorCode::ParameterConstraint, "disk radius must be positive");
                 },
                 [](const Box& b) {
                   if (!(b.side > 0)) throw Error(ErrorCode::ParameterConstraint, "box side must be positive");
                 },
                 [](const DiskMinusBalls& d) {
                   if (!(d.radius > 0)) throw Error(ErrorCode::ParameterConstraint, "disk radius must be positive");
                   for (std::size_t a = 0; a < d.holes.size(); ++a) {
                     const Hole& ha = d.holes[a];
                     if (!(ha.radius > 0) || norm(ha.center) + ha.radius >= d.radius)
                       throw Error(ErrorCode::ParameterConstraint, "hole not strictly inside the outer disk");
                     for (std::size_t b = a + 1; b < d.holes.size(); ++b) {
                       const Hole& hb = d.holes[b];
                       if (norm(ha.center - hb.center) <= ha.radius + hb.radius)
                         throw Error(ErrorCode::OverlappingHoles, "holes overlap");
                     }
                   }
                 },
             },
             shape_);
}

std::string AnalyticDomain::tag() const {
  return std::visit(Overloaded{[](const Disk&) { return std::string("disk"); },
                               [](const Box&) { return std::string("box"); },
                               [](const DiskMinusBalls&) { return std::string("disk-minus-balls"); }},
                    shape_);
}

bool AnalyticDomain::contains(Vec2 p) const {
  return std::visit(Overloaded{
                        [p](const Disk& d) { return in_disk(p, d.center, d.radius); },
                        [p](const Box& b) {
                          return p.x > b.corner.x && p.x < b.corner.x + b.side && p.y > b.corner.y &&
                                 p.y < b.corner.y + b.side;
                        },
                        [p](const DiskMinusBalls& d) {
                          if (!in_disk(p, {}, d.radius)) return false;
                          return std::none_of(d.holes.begin(), d.holes.end(),
                                              [p](const Hole& h) { return norm(p - h.center) <= h.radius; });
                        },
                    },
                    shape_);
}

double AnalyticDomain::exact_area() const {
  return std::visit(Overloaded{
                        [](const Disk& d) { return kPi * d.radius * d.radius; },
                        [](const Box& b) { return b.side * b.side; },
                        [](const DiskMinusBalls& d) {
                          double a = kPi * d.radius * d.radius;
                          for (const Hole& h : d.holes) a -= kPi * h.radius * h.radius;
                          return a;
                        },
                    },
                    shape_);
}

double AnalyticDomain::exact_perimeter() const {
  return std::visit(Overloaded{
                        [](const Disk& d) { return 2 * kPi * d.radius; },
                        [](const Box& b) { return 4 * b.side; },
                        [](const DiskMinusBalls& d) {
                          double p = 2 * kPi * d.radius;
                          for (const Hole& h : d.holes) p += 2 * kPi * h.radius;
                          return p;
                        },
                    },
                    shape_);
}

std::pair<Vec2, Vec2> AnalyticDomain::bounds() const {
  return std::visit(Overloaded{
                        [](const Disk& d) {
                          return std::pair{d.center - Vec2{d.radius, d.radius}, d.center + Vec2{d.radius, d.radius}};
                        },
                        [](const Box& b) { return std::pair{b.corner, b.corner + Vec2{b.side, b.side}}; },
                        [](const DiskMinusBalls& d) {
                          return std::pair{Vec2{-d.radius, -d.radius}, Vec2{d.radius, d.radius}};
                        },
                    },
                    shape_);
}

DomainMask rasterize(const AnalyticDomain& dom, const Grid& grid) {
  const auto [lo, hi] = dom.bounds();
  constexpr int kMargin = 2;
  const Vec2 glo = grid.origin + Vec2{kMargin * grid.h, kMargin * grid.h};
  const Vec2 ghi = grid.upper() - Vec2{kMargin * grid.h, kMargin * grid.h};
  const double slack = 1e-12;
  if (lo.x < glo.x - slack || lo.y < glo.y - slack || hi.x > ghi.x + slack || hi.y > ghi.y + slack)
    throw Error(ErrorCode::DomainDoesNotFit, "domain " + dom.tag() + " does not fit the grid with a 2-cell margin");

  std::vector<std::string> warnings;
  const AnalyticDomain* effective = &dom;
  std::optional<AnalyticDomain> pruned;
  if (const auto* d = std::get_if<DiskMinusBalls>(&dom.shape())) {
    DiskMinusBalls kept{d->radius, {}};
    for (const Hole& h : d->holes) {
      if (h.radius < 0.5 * grid.h) {
        warnings.push_back("dropped sub-resolution hole at (" + std::to_string(h.center.x) + ", " +
                           std::to_string(h.center.y) + ") radius " + std::to_string(h.radius));
      } else {
        kept.holes.push_back(h);
      }
    }
    if (kept.holes.size() != d->holes.size()) {
      pruned.emplace(kept);
      effective = &*pruned;
    }
  }

  DomainMask mask = DomainMask::from_predicate(grid, [effective](Vec2 p) { return effective->contains(p); }, kMargin);
  for (auto& w : warnings) mask.add_warning(std::move(w));
  return mask;
}

std::vector<SwissCheeseHole> swiss_cheese_holes(double a, double delta, double eps, int i_max) {
  if (!(a > 1.0)) throw Error(ErrorCode::ParameterConstraint, "swiss cheese requires a > 1");
  if (!(delta > 0.0 && delta < eps && eps < 1.0))
    throw Error(ErrorCode::ParameterConstraint, "swiss cheese requires 0 < delta < eps < 1");
  if (i_max < 0) throw Error(ErrorCode::ParameterConstraint, "i_max must be non-negative");
  std::vector<SwissCheeseHole> holes;
  for (int i = 1; i <= i_max; ++i) {
    for (int j = 1; j <= i; ++j) {
      SwissCheeseHole h;
      h.i = i;
      h.j = j;
      h.rho = 1.0 - eps / std::pow(a, i * i + j);
      h.radius = delta / std::pow(a, 2 * i * i + 2 * j);
      h.theta = 0.5 * kPi * j / (i + 1.0);
      holes.push_back(h);
    }
  }
  return holes;
}

AnalyticDomain swiss_cheese(double a, double delta, double eps, int i_max) {
  DiskMinusBalls d{1.0, {}};
  for (const auto& h : swiss_cheese_holes(a, delta, eps, i_max))
    d.holes.push_back({{h.rho * std::cos(h.theta), h.rho * std::sin(h.theta)}, h.radius});
  return AnalyticDomain(std::move(d));
}

}  // namespace pmc
