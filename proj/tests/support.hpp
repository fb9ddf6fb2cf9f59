#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fsep/extract.hpp"
#include "fsep/grid.hpp"
#include "fsep/labeling.hpp"

namespace fsep::test {

inline GridPtr unit_grid(int n) {
  return std::make_shared<const RectilinearGrid>(
      RectilinearGrid::uniform(Index3::Constant(n), Vec3::Zero(), Vec3::Ones()));
}

inline GridPtr box_grid(const Index3& cells, const Vec3& lo, const Vec3& hi) {
  return std::make_shared<const RectilinearGrid>(RectilinearGrid::uniform(cells, lo, hi));
}

// Step with f and u given per cell center.
inline TimeStep make_step(const GridPtr& grid, double time,
                          const std::function<double(const Vec3&)>& f,
                          const std::function<Vec3(const Vec3&)>& u = {}) {
  TimeStep s;
  s.time = time;
  s.f = CellField(grid, 1);
  s.u = CellField(grid, 3);
  for (std::size_t c = 0; c < grid->cell_count(); ++c) {
    const Vec3 x = grid->cell_center(grid->unflat(c));
    s.f(c) = f(x);
    if (u) {
      const Vec3 v = u(x);
      for (int k = 0; k < 3; ++k) s.u(c, k) = v[k];
    }
  }
  return s;
}

inline TimeStep mask_step(const GridPtr& grid, const std::vector<std::uint8_t>& mask) {
  TimeStep s;
  s.f = CellField(grid, 1);
  s.u = CellField(grid, 3);
  for (std::size_t c = 0; c < mask.size(); ++c) s.f(c) = mask[c] ? 1.0 : 0.0;
  return s;
}

inline std::vector<std::uint8_t> random_mask(std::size_t n, double density, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution on(density);
  std::vector<std::uint8_t> m(n);
  for (auto& v : m) v = on(rng) ? 1 : 0;
  return m;
}

// Independent union-find labeling over 6-neighbors; returns one root per cell
// (SIZE_MAX for background).
inline std::vector<std::size_t> union_find_roots(const Index3& dims,
                                                 const std::vector<std::uint8_t>& mask) {
  const std::size_t n = mask.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  const std::size_t sx = 1, sy = dims.x(), sz = static_cast<std::size_t>(dims.x()) * dims.y();
  for (int k = 0; k < dims.z(); ++k)
    for (int j = 0; j < dims.y(); ++j)
      for (int i = 0; i < dims.x(); ++i) {
        const std::size_t c = i * sx + j * sy + k * sz;
        if (!mask[c]) continue;
        if (i + 1 < dims.x() && mask[c + sx]) unite(c, c + sx);
        if (j + 1 < dims.y() && mask[c + sy]) unite(c, c + sy);
        if (k + 1 < dims.z() && mask[c + sz]) unite(c, c + sz);
      }
  std::vector<std::size_t> roots(n, SIZE_MAX);
  for (std::size_t c = 0; c < n; ++c)
    if (mask[c]) roots[c] = find(c);
  return roots;
}

inline std::size_t count_roots(const std::vector<std::size_t>& roots) {
  std::size_t n = 0;
  for (std::size_t c = 0; c < roots.size(); ++c) n += roots[c] == c;
  return n;
}

// Two labelings describe the same partition of cells.
inline bool same_partition(const std::vector<int>& labels, const std::vector<std::size_t>& roots) {
  std::map<int, std::size_t> fwd;
  std::map<std::size_t, int> back;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if ((labels[c] < 0) != (roots[c] == SIZE_MAX)) return false;
    if (labels[c] < 0) continue;
    const auto [a, fa] = fwd.emplace(labels[c], roots[c]);
    const auto [b, fb] = back.emplace(roots[c], labels[c]);
    if (a->second != roots[c] || b->second != labels[c]) return false;
  }
  return true;
}

// Point-in-closed-mesh by ray parity along a fixed skewed direction.
inline bool inside_mesh(const TriangleMesh& mesh, const Vec3& p) {
  const Vec3 dir = Vec3(0.5773, 0.3141, 0.7536).normalized();
  int hits = 0;
  for (const auto& t : mesh.triangles) {
    const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 h = dir.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-14) continue;
    const Vec3 s = p - a;
    const double u = s.dot(h) / det;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) / det;
    if (v < 0.0 || u + v > 1.0) continue;
    if (e2.dot(q) / det > 0.0) ++hits;
  }
  return hits % 2 == 1;
}

// Signed volume by the divergence theorem; positive for outward orientation.
inline double signed_volume(const TriangleMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles)
    v += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]])) / 6.0;
  return v;
}

inline int euler_characteristic(const TriangleMesh& mesh) {
  const EdgeStats e = edge_stats(mesh);
  return static_cast<int>(mesh.vertices.size()) - static_cast<int>(e.edges) +
         static_cast<int>(mesh.triangles.size());
}

// Lines of a text file starting with `prefix`.
inline std::size_t count_lines_prefixed(const std::filesystem::path& p, const std::string& prefix) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0;
  return n;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("fsep_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fsep::test
