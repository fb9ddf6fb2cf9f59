#include "fsep/plic.hpp"

namespace fsep {

namespace {

bool degenerate_gradient(const RectilinearGrid& grid, const Vec3& g) {
  return !(g.norm() > 1e-12 / grid.min_spacing());
}

}  // namespace

PlicPatch make_patch(const RectilinearGrid& grid, const Index3& cell, const Vec3& normal,
                     double f) {
  PlicPatch p;
  p.cell = cell;
  p.normal = normal.normalized();
  const Vec3 lo = grid.cell_lo(cell), hi = grid.cell_hi(cell);
  p.corner = deepest_corner<double>(lo, hi, p.normal);
  p.offset = solve_offset<double>(hi - lo, p.normal, f);
  return p;
}

std::optional<PlicPatch> try_reconstruct_patch(const TimeStep& step, const Index3& cell) {
  const RectilinearGrid& grid = step.grid();
  const double f = step.f(grid.flat(cell));
  if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("PLIC requested for a pure cell");
  const Vec3 g = gradient_f(step, cell);
  if (degenerate_gradient(grid, g)) return std::nullopt;
  return make_patch(grid, cell, -g, f);
}

PlicPatch reconstruct_patch(const TimeStep& step, const Index3& cell) {
  auto p = try_reconstruct_patch(step, cell);
  if (!p) throw DegenerateNormal("vanishing fraction gradient in interface cell");
  return *p;
}

Vec3 project_to_patch(const PlicPatch& patch, const Vec3& x) {
  return project_to_plane<double>(patch.normal, patch.corner, patch.offset, x);
}

bool is_liquid(const TimeStep& step, const Vec3& x, double tau) {
  const RectilinearGrid& grid = step.grid();
  const auto cell = locate_cell(grid, x);
  if (!cell) return false;
  const double f = step.f(grid.flat(*cell));
  if (f >= 1.0) return true;
  if (f <= tau) return false;
  const auto patch = try_reconstruct_patch(step, *cell);
  if (!patch) return f > 0.5;
  return patch->contains(x);
}

PhaseClassifier::PhaseClassifier(const TimeStep& step, double tau) : step_(&step), tau_(tau) {
  const RectilinearGrid& grid = step.grid();
  const std::size_t n = grid.cell_count();
  for (std::size_t c = 0; c < n; ++c) {
    const double f = step.f(c);
    if (f > tau && f < 1.0) {
      if (auto p = try_reconstruct_patch(step, grid.unflat(c))) patches_.emplace(c, *p);
    }
  }
}

const PlicPatch* PhaseClassifier::patch(std::size_t cell) const {
  const auto it = patches_.find(cell);
  return it == patches_.end() ? nullptr : &it->second;
}

bool PhaseClassifier::admits_liquid(std::size_t cell) const {
  const double f = step_->f(cell);
  if (f <= tau_) return false;
  if (f >= 1.0) return true;
  return patch(cell) != nullptr || f > 0.5;
}

bool PhaseClassifier::is_liquid(const Vec3& x, const Index3& cell) const {
  const std::size_t c = step_->grid().flat(cell);
  const double f = step_->f(c);
  if (f >= 1.0) return true;
  if (f <= tau_) return false;
  if (const PlicPatch* p = patch(c)) return p->contains(x);
  return f > 0.5;
}

bool PhaseClassifier::is_liquid(const Vec3& x) const {
  const auto cell = locate_cell(step_->grid(), x);
  return cell && is_liquid(x, *cell);
}

}  // namespace fsep
