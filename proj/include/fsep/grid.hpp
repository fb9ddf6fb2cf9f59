#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fsep {

using Vec3 = Eigen::Vector3d;
using Index3 = Eigen::Vector3i;

// Axis-aligned grid with independent, strictly increasing node coordinates
// per axis. Cells are addressed as (i,j,k) or by flat index with x fastest.
class RectilinearGrid {
 public:
  explicit RectilinearGrid(std::array<std::vector<double>, 3> nodes);

  static RectilinearGrid uniform(const Index3& cells, const Vec3& lo, const Vec3& hi);

  int cells(int axis) const { return static_cast<int>(nodes_[axis].size()) - 1; }
  Index3 dims() const { return {cells(0), cells(1), cells(2)}; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(cells(0)) * cells(1) * cells(2);
  }

  std::span<const double> nodes(int axis) const { return nodes_[axis]; }
  std::span<const double> centers(int axis) const { return centers_[axis]; }
  double node(int axis, int i) const { return nodes_[axis][i]; }
  double center(int axis, int i) const { return centers_[axis][i]; }
  double width(int axis, int i) const { return nodes_[axis][i + 1] - nodes_[axis][i]; }

  Vec3 lo() const { return {nodes_[0].front(), nodes_[1].front(), nodes_[2].front()}; }
  Vec3 hi() const { return {nodes_[0].back(), nodes_[1].back(), nodes_[2].back()}; }

  Vec3 cell_lo(const Index3& c) const { return {node(0, c.x()), node(1, c.y()), node(2, c.z())}; }
  Vec3 cell_hi(const Index3& c) const {
    return {node(0, c.x() + 1), node(1, c.y() + 1), node(2, c.z() + 1)};
  }
  Vec3 cell_size(const Index3& c) const { return cell_hi(c) - cell_lo(c); }
  Vec3 cell_center(const Index3& c) const {
    return {center(0, c.x()), center(1, c.y()), center(2, c.z())};
  }
  double cell_volume(const Index3& c) const { return cell_size(c).prod(); }

  // Smallest cell width over all axes.
  double min_spacing() const;

  bool contains(const Index3& c) const {
    return (c.array() >= 0).all() && (c.array() < dims().array()).all();
  }
  std::size_t flat(const Index3& c) const {
    return static_cast<std::size_t>(c.x()) +
           static_cast<std::size_t>(cells(0)) *
               (static_cast<std::size_t>(c.y()) + static_cast<std::size_t>(cells(1)) * c.z());
  }
  Index3 unflat(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(cells(0));
    const auto ny = static_cast<std::size_t>(cells(1));
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
            static_cast<int>(idx / (nx * ny))};
  }

  bool operator==(const RectilinearGrid& other) const { return nodes_ == other.nodes_; }

 private:
  std::array<std::vector<double>, 3> nodes_;
  std::array<std::vector<double>, 3> centers_;
};

using GridPtr = std::shared_ptr<const RectilinearGrid>;

// Cell-centered field; components are stored as consecutive arrays.
class CellField {
 public:
  CellField() = default;
  CellField(GridPtr grid, int components, double fill = 0.0);
  CellField(GridPtr grid, int components, std::vector<double> values);

  const GridPtr& grid() const { return grid_; }
  int components() const { return components_; }
  std::size_t cell_count() const { return grid_ ? grid_->cell_count() : 0; }

  double& operator()(std::size_t cell, int comp = 0) { return values_[comp * cell_count() + cell]; }
  double operator()(std::size_t cell, int comp = 0) const {
    return values_[comp * cell_count() + cell];
  }
  std::span<const double> component(int comp) const {
    return std::span<const double>(values_).subspan(comp * cell_count(), cell_count());
  }
  std::span<double> component(int comp) {
    return std::span<double>(values_).subspan(comp * cell_count(), cell_count());
  }
  const std::vector<double>& values() const { return values_; }

 private:
  GridPtr grid_;
  int components_ = 0;
  std::vector<double> values_;
};

struct TimeStep {
  double time = 0.0;
  CellField f;  // fraction / scalar, 1 component
  CellField u;  // velocity, 3 components

  const RectilinearGrid& grid() const { return *f.grid(); }
  Vec3 velocity(std::size_t cell) const { return {u(cell, 0), u(cell, 1), u(cell, 2)}; }

  // Throws std::invalid_argument if f and u do not share one grid.
  void validate() const;
};

struct TimeSeriesDataset {
  GridPtr grid;
  std::vector<TimeStep> steps;

  // Throws std::invalid_argument on non-increasing times or grid mismatch.
  void validate() const;
};

// Containing cell using half-open intervals [node_i, node_{i+1}); the last
// cell on each axis is closed on the right.
std::optional<Index3> locate_cell(const RectilinearGrid& grid, const Vec3& x);

// Trilinear interpolation over the cell-center lattice, clamped to the
// nearest center outside it.
double interpolate_scalar(const CellField& field, const Vec3& x);
Vec3 interpolate_vector(const CellField& field, const Vec3& x);

// Velocity at (x,t) blended linearly between two steps.
// Throws std::domain_error unless a.time <= t <= b.time.
Vec3 sample_velocity(const TimeStep& a, const TimeStep& b, const Vec3& x, double t);

// Gradient of f at the cell center: non-uniform central differences in the
// interior, one-sided at the domain boundary.
Vec3 gradient_f(const TimeStep& step, const Index3& cell);
Vec3 gradient(const CellField& f, const Index3& cell);

}  // namespace fsep
