#include <algorithm>
#include <numeric>
#include <queue>

#include "geometry_internal.hpp"
#include "pmc/geometry.hpp"

namespace pmc {

namespace detail {

std::vector<int> label_components(const Grid& g, const std::vector<std::uint8_t>& on, std::size_t& count) {
  std::vector<int> label(g.size(), -1);
  count = 0;
  std::queue<std::size_t> frontier;
  for (std::size_t seed = 0; seed < g.size(); ++seed) {
    if (!on[seed] || label[seed] >= 0) continue;
    const int id = static_cast<int>(count++);
    label[seed] = id;
    frontier.push(seed);
    while (!frontier.empty()) {
      const std::size_t k = frontier.front();
      frontier.pop();
      const int i = g.col(k), j = g.row(k);
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int n = 0; n < 4; ++n) {
        const int a = i + di[n], b = j + dj[n];
        if (!g.contains(a, b)) continue;
        const std::size_t m = g.index(a, b);
        if (on[m] && label[m] < 0) {
          label[m] = id;
          frontier.push(m);
        }
      }
    }
  }
  return label;
}

}  // namespace detail

DomainMask::DomainMask(const Grid& grid, std::vector<std::uint8_t> inside, int margin)
    : grid_(grid), inside_(std::move(inside)), margin_(margin) {
  if (inside_.size() != grid_.size()) throw Error(ErrorCode::InvalidArgument, "mask size does not match grid");
  if (margin_ < 2) throw Error(ErrorCode::InvalidArgument, "bounding margin must be at least 2 cells");
  for (auto& c : inside_) c = c ? 1 : 0;

  for (int j = 0; j < grid_.ny; ++j) {
    for (int i = 0; i < grid_.nx; ++i) {
      const bool frame = i < margin_ || j < margin_ || i >= grid_.nx - margin_ || j >= grid_.ny - margin_;
      if (frame && inside_[grid_.index(i, j)])
        throw Error(ErrorCode::DomainDoesNotFit, "interior cell inside the bounding margin");
    }
  }
  if (count() == 0) throw Error(ErrorCode::EmptyDomain, "mask has no interior cells");

  std::size_t n_components = 0;
  detail::label_components(grid_, inside_, n_components);
  if (n_components != 1)
    throw Error(ErrorCode::DisconnectedRaster,
                "interior is not 4-connected (" + std::to_string(n_components) + " components)");

  // Exterior components not touching the frame are cavities; single cells are filled.
  std::vector<std::uint8_t> outside(inside_.size());
  for (std::size_t k = 0; k < inside_.size(); ++k) outside[k] = inside_[k] ? 0 : 1;
  std::size_t n_out = 0;
  const auto label = detail::label_components(grid_, outside, n_out);
  std::vector<std::size_t> size(n_out, 0);
  for (std::size_t k = 0; k < label.size(); ++k)
    if (label[k] >= 0) ++size[label[k]];
  std::size_t filled = 0;
  for (std::size_t k = 0; k < label.size(); ++k) {
    if (label[k] >= 0 && size[label[k]] == 1) {
      const int i = grid_.col(k), j = grid_.row(k);
      if (i > 0 && j > 0 && i < grid_.nx - 1 && j < grid_.ny - 1) {
        inside_[k] = 1;
        ++filled;
      }
    }
  }
  if (filled > 0)
    warnings_.push_back("filled " + std::to_string(filled) + " single-cell exterior cavities");
}

DomainMask DomainMask::from_predicate(const Grid& grid, const std::function<bool(Vec2)>& inside, int margin) {
  std::vector<std::uint8_t> cells(grid.size(), 0);
  for (std::size_t k = 0; k < grid.size(); ++k) cells[k] = inside(grid.center(k)) ? 1 : 0;
  return DomainMask(grid, std::move(cells), margin);
}

std::size_t DomainMask::count() const {
  return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), std::uint8_t{1}));
}

bool DomainMask::subset_of(const DomainMask& other) const {
  if (!(other.grid_ == grid_)) return false;
  for (std::size_t k = 0; k < inside_.size(); ++k)
    if (inside_[k] && !other.inside_[k]) return false;
  return true;
}

RelaxedIndicator::RelaxedIndicator(const DomainMask& support, ScalarField values) : values_(std::move(values)) {
  if (!(values_.grid() == support.grid())) throw Error(ErrorCode::InvalidArgument, "indicator grid mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k)
    values_[k] = support.inside(k) ? std::clamp(values_[k], 0.0, 1.0) : 0.0;
}

RelaxedIndicator RelaxedIndicator::constant(const DomainMask& support, double value) {
  return RelaxedIndicator(support, ScalarField(support.grid(), value));
}

std::vector<std::uint8_t> RelaxedIndicator::threshold(double level) const {
  std::vector<std::uint8_t> out(values_.size(), 0);
  for (std::size_t k = 0; k < values_.size(); ++k) out[k] = values_[k] > level ? 1 : 0;
  return out;
}

double area(const DomainMask& mask) { return static_cast<double>(mask.count()) * mask.grid().cell_area(); }

double area(const RelaxedIndicator& u) {
  const auto& v = u.field().values();
  return std::accumulate(v.begin(), v.end(), 0.0) * u.grid().cell_area();
}

}  // namespace pmc
