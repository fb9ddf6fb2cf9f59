#pragma once

#include <cstddef>
#include <vector>

#include "fsep/grid.hpp"

namespace fsep {

// Per-cell feature id, -1 for background. Ids are dense and ordered by the
// smallest flat cell index of each component.
struct LabelField {
  GridPtr grid;
  std::vector<int> labels;
  int count = 0;

  int operator[](std::size_t cell) const { return labels[cell]; }
  int at(const Index3& cell) const { return labels[grid->flat(cell)]; }
};

// 6-connected components of {f > tau} by region growing.
LabelField label_features(const TimeStep& step, double tau = 0.0);
LabelField label_mask(const GridPtr& grid, const std::vector<std::uint8_t>& mask);

// Box [begin, end) of cells.
struct CellBox {
  Index3 begin = Index3::Zero();
  Index3 end = Index3::Zero();

  bool contains(const Index3& c) const {
    return (c.array() >= begin.array()).all() && (c.array() < end.array()).all();
  }
  std::size_t size() const { return static_cast<std::size_t>((end - begin).prod()); }
};

class PartitionLayout {
 public:
  PartitionLayout(const Index3& grid_dims, const Index3& counts, int ghost_width = 2);

  const Index3& dims() const { return dims_; }
  int partition_count() const { return static_cast<int>(cores_.size()); }
  const Index3& counts() const { return counts_; }
  int ghost_width() const { return ghost_; }
  const CellBox& core(int p) const { return cores_[p]; }
  // Core grown by the ghost width and clipped to the domain.
  const CellBox& halo(int p) const { return halos_[p]; }
  int owner(const Index3& cell) const;

 private:
  Index3 dims_;
  Index3 counts_;
  int ghost_;
  std::vector<std::vector<int>> splits_;  // per axis, partition start indices + end
  std::vector<CellBox> cores_;
  std::vector<CellBox> halos_;
};

// Labels of one partition's core; ids local to the partition.
struct LocalLabels {
  int partition = 0;
  CellBox box;
  std::vector<int> labels;             // box-local flat order, -1 background
  std::vector<std::size_t> min_cell;   // smallest global flat index per local id
};

LocalLabels label_partition(const TimeStep& step, double tau, const PartitionLayout& layout,
                            int partition);

// Pair of (partition, local id) that touch across a partition face.
struct LabelEquivalence {
  int partition_a, label_a;
  int partition_b, label_b;
};

std::vector<LabelEquivalence> boundary_equivalences(const std::vector<LocalLabels>& locals,
                                                    const PartitionLayout& layout);

// Global union-find over local ids, then canonical dense relabel.
LabelField merge_partition_labels(const GridPtr& grid, const std::vector<LocalLabels>& locals,
                                  const std::vector<LabelEquivalence>& equivalences);

LabelField label_features_partitioned(const TimeStep& step, double tau,
                                      const PartitionLayout& layout);

}  // namespace fsep
