#include "fsep/labeling.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace fsep {

namespace {

const Index3 kFaces[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

// Region growing restricted to a box; visits seeds in increasing global flat
// order so local ids follow the smallest member cell.
template <typename Masked>
int grow_regions(const RectilinearGrid& g, const CellBox& box, Masked&& masked,
                 std::vector<int>& labels, std::vector<std::size_t>& min_cell) {
  const Index3 ext = box.end - box.begin;
  auto local = [&](const Index3& c) {
    const Index3 r = c - box.begin;
    return static_cast<std::size_t>(r.x()) +
           static_cast<std::size_t>(ext.x()) * (r.y() + static_cast<std::size_t>(ext.y()) * r.z());
  };
  labels.assign(box.size(), -1);
  min_cell.clear();
  std::vector<Index3> queue;
  int next = 0;
  for (int k = box.begin.z(); k < box.end.z(); ++k)
    for (int j = box.begin.y(); j < box.end.y(); ++j)
      for (int i = box.begin.x(); i < box.end.x(); ++i) {
        const Index3 start(i, j, k);
        if (labels[local(start)] != -1 || !masked(g.flat(start))) continue;
        const int id = next++;
        min_cell.push_back(g.flat(start));
        labels[local(start)] = id;
        queue.clear();
        queue.push_back(start);
        for (std::size_t q = 0; q < queue.size(); ++q) {
          const Index3 c = queue[q];
          for (const Index3& d : kFaces) {
            const Index3 nb = c + d;
            if (!box.contains(nb)) continue;
            auto& l = labels[local(nb)];
            if (l != -1 || !masked(g.flat(nb))) continue;
            l = id;
            queue.push_back(nb);
          }
        }
      }
  return next;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

LabelField label_mask(const GridPtr& grid, const std::vector<std::uint8_t>& mask) {
  LabelField out;
  out.grid = grid;
  std::vector<std::size_t> min_cell;
  const CellBox all{Index3::Zero(), grid->dims()};
  out.count = grow_regions(*grid, all, [&](std::size_t c) { return mask[c] != 0; }, out.labels,
                           min_cell);
  return out;
}

LabelField label_features(const TimeStep& step, double tau) {
  const GridPtr& grid = step.f.grid();
  LabelField out;
  out.grid = grid;
  std::vector<std::size_t> min_cell;
  const CellBox all{Index3::Zero(), grid->dims()};
  out.count = grow_regions(*grid, all, [&](std::size_t c) { return step.f(c) > tau; }, out.labels,
                           min_cell);
  return out;
}

PartitionLayout::PartitionLayout(const Index3& grid_dims, const Index3& counts, int ghost_width)
    : dims_(grid_dims), counts_(counts), ghost_(ghost_width) {
  if ((counts.array() < 1).any() || (counts.array() > grid_dims.array()).any())
    throw std::invalid_argument("partition counts must be within [1, cells] per axis");
  if (ghost_width < 2) throw std::invalid_argument("ghost width must be >= 2");
  splits_.resize(3);
  for (int a = 0; a < 3; ++a) {
    for (int p = 0; p <= counts[a]; ++p)
      splits_[a].push_back(static_cast<int>(static_cast<long>(grid_dims[a]) * p / counts[a]));
  }
  for (int pz = 0; pz < counts.z(); ++pz)
    for (int py = 0; py < counts.y(); ++py)
      for (int px = 0; px < counts.x(); ++px) {
        CellBox core{{splits_[0][px], splits_[1][py], splits_[2][pz]},
                     {splits_[0][px + 1], splits_[1][py + 1], splits_[2][pz + 1]}};
        CellBox halo{(core.begin.array() - ghost_).max(0),
                     (core.end.array() + ghost_).min(grid_dims.array())};
        cores_.push_back(core);
        halos_.push_back(halo);
      }
}

int PartitionLayout::owner(const Index3& cell) const {
  Index3 p;
  for (int a = 0; a < 3; ++a) {
    const auto& s = splits_[a];
    p[a] = static_cast<int>(std::upper_bound(s.begin(), s.end(), cell[a]) - s.begin()) - 1;
    p[a] = std::clamp(p[a], 0, counts_[a] - 1);
  }
  return p.x() + counts_.x() * (p.y() + counts_.y() * p.z());
}

LocalLabels label_partition(const TimeStep& step, double tau, const PartitionLayout& layout,
                            int partition) {
  LocalLabels out;
  out.partition = partition;
  out.box = layout.core(partition);
  grow_regions(step.grid(), out.box, [&](std::size_t c) { return step.f(c) > tau; }, out.labels,
               out.min_cell);
  return out;
}

namespace {

int local_label(const LocalLabels& l, const Index3& c) {
  const Index3 ext = l.box.end - l.box.begin;
  const Index3 r = c - l.box.begin;
  return l.labels[static_cast<std::size_t>(r.x()) +
                  static_cast<std::size_t>(ext.x()) * (r.y() + static_cast<std::size_t>(ext.y()) * r.z())];
}

}  // namespace

std::vector<LabelEquivalence> boundary_equivalences(const std::vector<LocalLabels>& locals,
                                                    const PartitionLayout& layout) {
  std::vector<LabelEquivalence> out;
  // Each partition inspects its upper faces (+x, +y, +z) against the neighbor.
  for (const LocalLabels& l : locals) {
    const CellBox& box = l.box;
    for (int a = 0; a < 3; ++a) {
      if (box.end[a] >= layout.dims()[a]) continue;
      CellBox face = box;
      face.begin[a] = box.end[a] - 1;
      for (int k = face.begin.z(); k < face.end.z(); ++k)
        for (int j = face.begin.y(); j < face.end.y(); ++j)
          for (int i = face.begin.x(); i < face.end.x(); ++i) {
            const Index3 c(i, j, k);
            const int la = local_label(l, c);
            if (la < 0) continue;
            Index3 nb = c;
            nb[a] += 1;
            const int q = layout.owner(nb);
            const int lb = local_label(locals[q], nb);
            if (lb < 0) continue;
            out.push_back({l.partition, la, q, lb});
          }
    }
  }
  return out;
}

LabelField merge_partition_labels(const GridPtr& grid, const std::vector<LocalLabels>& locals,
                                  const std::vector<LabelEquivalence>& equivalences) {
  std::vector<std::size_t> offset(locals.size() + 1, 0);
  for (std::size_t p = 0; p < locals.size(); ++p)
    offset[p + 1] = offset[p] + locals[p].min_cell.size();
  UnionFind uf(offset.back());
  for (const auto& e : equivalences)
    uf.unite(offset[e.partition_a] + e.label_a, offset[e.partition_b] + e.label_b);

  // Canonical order: smallest member cell of each merged component.
  std::vector<std::size_t> root_min(offset.back(), SIZE_MAX);
  for (std::size_t p = 0; p < locals.size(); ++p)
    for (std::size_t l = 0; l < locals[p].min_cell.size(); ++l) {
      const std::size_t r = uf.find(offset[p] + l);
      root_min[r] = std::min(root_min[r], locals[p].min_cell[l]);
    }
  std::vector<std::size_t> roots;
  for (std::size_t g = 0; g < offset.back(); ++g)
    if (uf.find(g) == g) roots.push_back(g);
  std::sort(roots.begin(), roots.end(),
            [&](std::size_t a, std::size_t b) { return root_min[a] < root_min[b]; });
  std::vector<int> dense(offset.back(), -1);
  for (std::size_t i = 0; i < roots.size(); ++i) dense[roots[i]] = static_cast<int>(i);

  LabelField out;
  out.grid = grid;
  out.count = static_cast<int>(roots.size());
  out.labels.assign(grid->cell_count(), -1);
  for (std::size_t p = 0; p < locals.size(); ++p) {
    const LocalLabels& l = locals[p];
    const Index3 ext = l.box.end - l.box.begin;
    std::size_t idx = 0;
    for (int k = 0; k < ext.z(); ++k)
      for (int j = 0; j < ext.y(); ++j)
        for (int i = 0; i < ext.x(); ++i, ++idx) {
          const int ll = l.labels[idx];
          if (ll < 0) continue;
          out.labels[grid->flat(l.box.begin + Index3(i, j, k))] = dense[uf.find(offset[p] + ll)];
        }
  }
  return out;
}

LabelField label_features_partitioned(const TimeStep& step, double tau,
                                      const PartitionLayout& layout) {
  std::vector<LocalLabels> locals(layout.partition_count());
  {
    std::vector<std::jthread> workers;
    for (int p = 0; p < layout.partition_count(); ++p)
      workers.emplace_back([&, p] { locals[p] = label_partition(step, tau, layout, p); });
  }
  return merge_partition_labels(step.f.grid(), locals, boundary_equivalences(locals, layout));
}

}  // namespace fsep
