#include "fsep/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fsep {

RectilinearGrid::RectilinearGrid(std::array<std::vector<double>, 3> nodes)
    : nodes_(std::move(nodes)) {
  for (int a = 0; a < 3; ++a) {
    const auto& n = nodes_[a];
    if (n.size() < 2)
      throw std::invalid_argument("grid axis " + std::to_string(a) + " needs at least one cell");
    for (std::size_t i = 0; i + 1 < n.size(); ++i) {
      if (!(n[i] < n[i + 1]) || !std::isfinite(n[i]) || !std::isfinite(n[i + 1]))
        throw std::invalid_argument("grid axis " + std::to_string(a) +
                                    " nodes are not strictly increasing");
    }
    centers_[a].resize(n.size() - 1);
    for (std::size_t i = 0; i + 1 < n.size(); ++i) centers_[a][i] = 0.5 * (n[i] + n[i + 1]);
  }
}

RectilinearGrid RectilinearGrid::uniform(const Index3& cells, const Vec3& lo, const Vec3& hi) {
  std::array<std::vector<double>, 3> nodes;
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 1) throw std::invalid_argument("cell count per axis must be >= 1");
    nodes[a].resize(cells[a] + 1);
    const double h = (hi[a] - lo[a]) / cells[a];
    for (int i = 0; i <= cells[a]; ++i) nodes[a][i] = lo[a] + h * i;
    nodes[a].back() = hi[a];
  }
  return RectilinearGrid(std::move(nodes));
}

double RectilinearGrid::min_spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < cells(a); ++i) h = std::min(h, width(a, i));
  return h;
}

CellField::CellField(GridPtr grid, int components, double fill)
    : grid_(std::move(grid)), components_(components),
      values_(grid_->cell_count() * components, fill) {}

CellField::CellField(GridPtr grid, int components, std::vector<double> values)
    : grid_(std::move(grid)), components_(components), values_(std::move(values)) {
  if (values_.size() != grid_->cell_count() * static_cast<std::size_t>(components_))
    throw std::invalid_argument("field length does not match cell count x components");
}

void TimeStep::validate() const {
  if (!f.grid() || !u.grid()) throw std::invalid_argument("time step has no grid");
  if (!(*f.grid() == *u.grid())) throw std::invalid_argument("f and u use different grids");
  if (f.components() != 1 || u.components() != 3)
    throw std::invalid_argument("time step expects scalar f and 3-component u");
}

void TimeSeriesDataset::validate() const {
  for (std::size_t k = 0; k < steps.size(); ++k) {
    steps[k].validate();
    if (!(*steps[k].f.grid() == *grid)) throw std::invalid_argument("step grid differs");
    if (k > 0 && !(steps[k - 1].time < steps[k].time))
      throw std::invalid_argument("step times are not strictly increasing");
  }
}

std::optional<Index3> locate_cell(const RectilinearGrid& grid, const Vec3& x) {
  Index3 c;
  for (int a = 0; a < 3; ++a) {
    const auto nodes = grid.nodes(a);
    if (!(x[a] >= nodes.front() && x[a] <= nodes.back())) return std::nullopt;
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x[a]);
    c[a] = std::min(static_cast<int>(it - nodes.begin()) - 1, grid.cells(a) - 1);
  }
  return c;
}

namespace {

struct AxisStencil {
  int i0, i1;
  double w1;  // weight of i1
};

AxisStencil axis_stencil(std::span<const double> centers, double x) {
  const int n = static_cast<int>(centers.size());
  if (n == 1 || x <= centers.front()) return {0, 0, 0.0};
  if (x >= centers.back()) return {n - 1, n - 1, 0.0};
  const auto it = std::upper_bound(centers.begin(), centers.end(), x);
  const int i1 = static_cast<int>(it - centers.begin());
  const int i0 = i1 - 1;
  return {i0, i1, (x - centers[i0]) / (centers[i1] - centers[i0])};
}

template <typename Accumulate>
void trilinear(const RectilinearGrid& g, const Vec3& x, Accumulate&& acc) {
  const AxisStencil sx = axis_stencil(g.centers(0), x.x());
  const AxisStencil sy = axis_stencil(g.centers(1), x.y());
  const AxisStencil sz = axis_stencil(g.centers(2), x.z());
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? sz.w1 : 1.0 - sz.w1;
    if (wz == 0.0) continue;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? sy.w1 : 1.0 - sy.w1;
      if (wy == 0.0) continue;
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? sx.w1 : 1.0 - sx.w1;
        if (wx == 0.0) continue;
        const Index3 c(dx ? sx.i1 : sx.i0, dy ? sy.i1 : sy.i0, dz ? sz.i1 : sz.i0);
        acc(g.flat(c), wx * wy * wz);
      }
    }
  }
}

}  // namespace

double interpolate_scalar(const CellField& field, const Vec3& x) {
  double v = 0.0;
  trilinear(*field.grid(), x, [&](std::size_t c, double w) { v += w * field(c); });
  return v;
}

Vec3 interpolate_vector(const CellField& field, const Vec3& x) {
  Vec3 v = Vec3::Zero();
  trilinear(*field.grid(), x, [&](std::size_t c, double w) {
    v += w * Vec3(field(c, 0), field(c, 1), field(c, 2));
  });
  return v;
}

Vec3 sample_velocity(const TimeStep& a, const TimeStep& b, const Vec3& x, double t) {
  if (!(a.time <= t && t <= b.time))
    throw std::domain_error("sample time outside the bracketing steps");
  const double span = b.time - a.time;
  const double w = span > 0.0 ? (t - a.time) / span : 0.0;
  if (w == 0.0) return interpolate_vector(a.u, x);
  if (w == 1.0) return interpolate_vector(b.u, x);
  return (1.0 - w) * interpolate_vector(a.u, x) + w * interpolate_vector(b.u, x);
}

Vec3 gradient(const CellField& f, const Index3& cell) {
  const RectilinearGrid& g = *f.grid();
  Vec3 grad = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    const int n = g.cells(a);
    if (n < 2) continue;
    const int i = cell[a];
    Index3 lo = cell, hi = cell;
    if (i == 0) {
      hi[a] = 1;
      grad[a] = (f(g.flat(hi)) - f(g.flat(cell))) / (g.center(a, 1) - g.center(a, 0));
    } else if (i == n - 1) {
      lo[a] = n - 2;
      grad[a] = (f(g.flat(cell)) - f(g.flat(lo))) / (g.center(a, n - 1) - g.center(a, n - 2));
    } else {
      lo[a] = i - 1;
      hi[a] = i + 1;
      const double hm = g.center(a, i) - g.center(a, i - 1);
      const double hp = g.center(a, i + 1) - g.center(a, i);
      const double fm = f(g.flat(lo)), f0 = f(g.flat(cell)), fp = f(g.flat(hi));
      grad[a] = (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hm * hp * (hm + hp));
    }
  }
  return grad;
}

Vec3 gradient_f(const TimeStep& step, const Index3& cell) { return gradient(step.f, cell); }

}  // namespace fsep
