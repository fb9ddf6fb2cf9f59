#include "fsep/marching_cubes.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace fsep {

namespace {

using Tri = std::array<std::uint8_t, 3>;

Vec3 corner_pos(int c) { return Vec3(c & 1, (c >> 1) & 1, (c >> 2) & 1); }

int edge_between(int c0, int c1) {
  const int diff = c0 ^ c1;
  const int axis = diff == 1 ? 0 : (diff == 2 ? 1 : 2);
  const int o1 = axis == 0 ? 1 : 0;
  const int o2 = axis == 2 ? 1 : 2;
  const int b = ((c0 >> o1) & 1) | (((c0 >> o2) & 1) << 1);
  return axis * 4 + b;
}

Vec3 edge_mid(int e) {
  const auto c = cube_edge_corners(e);
  return 0.5 * (corner_pos(c[0]) + corner_pos(c[1]));
}

// Two edges lie on a common cube face.
bool share_face(int e0, int e1) {
  const auto a = cube_edge_corners(e0), b = cube_edge_corners(e1);
  for (int axis = 0; axis < 3; ++axis)
    for (int s = 0; s < 2; ++s) {
      auto on = [&](int c) { return ((c >> axis) & 1) == s; };
      if (on(a[0]) && on(a[1]) && on(b[0]) && on(b[1])) return true;
    }
  return false;
}

// Triangulation of a closed loop that never uses a chord lying in a cube
// face; such chords could be produced by the neighbouring cube as well and
// would make the shared edge non-manifold. Maximizes the smallest triangle.
std::vector<Tri> triangulate_loop(const std::vector<int>& loop) {
  const int m = static_cast<int>(loop.size());
  if (m == 3) return {Tri{static_cast<std::uint8_t>(loop[0]), static_cast<std::uint8_t>(loop[1]),
                          static_cast<std::uint8_t>(loop[2])}};
  constexpr double kNone = -1.0;
  constexpr double kEmpty = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best(m, std::vector<double>(m, kNone));
  std::vector<std::vector<int>> split(m, std::vector<int>(m, -1));
  auto chord_ok = [&](int i, int j) {
    return j == i + 1 || (i == 0 && j == m - 1) || !share_face(loop[i], loop[j]);
  };
  auto area = [&](int i, int j, int k) {
    return 0.5 * (edge_mid(loop[j]) - edge_mid(loop[i]))
                     .cross(edge_mid(loop[k]) - edge_mid(loop[i]))
                     .norm();
  };
  for (int i = 0; i + 1 < m; ++i) best[i][i + 1] = kEmpty;
  for (int len = 2; len < m; ++len)
    for (int i = 0; i + len < m; ++i) {
      const int j = i + len;
      if (!chord_ok(i, j)) continue;
      for (int k = i + 1; k < j; ++k) {
        const double q = std::min({best[i][k], best[k][j], area(i, k, j)});
        if (best[i][k] < 0 || best[k][j] < 0 || area(i, k, j) < 1e-9) continue;
        if (q > best[i][j]) {
          best[i][j] = q;
          split[i][j] = k;
        }
      }
    }
  if (best[0][m - 1] < 0) throw std::logic_error("cube loop has no admissible triangulation");
  std::vector<Tri> out;
  std::vector<std::pair<int, int>> stack{{0, m - 1}};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    if (j - i < 2) continue;
    const int k = split[i][j];
    out.push_back({static_cast<std::uint8_t>(loop[i]), static_cast<std::uint8_t>(loop[k]),
                   static_cast<std::uint8_t>(loop[j])});
    stack.push_back({i, k});
    stack.push_back({k, j});
  }
  return out;
}

std::vector<Tri> build_config(int config) {
  auto inside = [&](int c) { return ((config >> c) & 1) != 0; };
  std::unordered_map<int, int> next;  // directed segments, edge -> edge

  for (int axis = 0; axis < 3; ++axis)
    for (int s = 0; s < 2; ++s) {
      const int o1 = axis == 0 ? 1 : 0;
      const int o2 = axis == 2 ? 1 : 2;
      int cyc[4];
      const int pattern[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
      for (int k = 0; k < 4; ++k)
        cyc[k] = (s << axis) | (pattern[k][0] << o1) | (pattern[k][1] << o2);
      Vec3 normal = Vec3::Zero();
      normal[axis] = s ? 1.0 : -1.0;

      int edges[4];
      int crossings = 0;
      for (int k = 0; k < 4; ++k) {
        edges[k] = edge_between(cyc[k], cyc[(k + 1) % 4]);
        crossings += inside(cyc[k]) != inside(cyc[(k + 1) % 4]);
      }
      auto add = [&](int ea, int eb, int ref_corner) {
        const Vec3 p = edge_mid(ea), q = edge_mid(eb);
        if (normal.cross(q - p).dot(corner_pos(ref_corner) - p) < 0) std::swap(ea, eb);
        if (!next.emplace(ea, eb).second) throw std::logic_error("inconsistent cube segments");
      };
      if (crossings == 2) {
        int found[2], n = 0, ref = -1;
        for (int k = 0; k < 4; ++k) {
          if (inside(cyc[k]) != inside(cyc[(k + 1) % 4])) found[n++] = edges[k];
          if (inside(cyc[k])) ref = cyc[k];
        }
        add(found[0], found[1], ref);
      } else if (crossings == 4) {
        for (int k = 0; k < 4; ++k)
          if (inside(cyc[k])) add(edges[(k + 3) % 4], edges[k], cyc[k]);
      }
    }

  std::vector<Tri> tris;
  std::unordered_map<int, bool> used;
  for (const auto& [start, unused] : next) {
    if (used[start]) continue;
    std::vector<int> loop;
    int e = start;
    do {
      used[e] = true;
      loop.push_back(e);
      e = next.at(e);
    } while (e != start);
    // Segment orientation winds around the inside corners; reverse so the
    // triangle normals face away from them.
    std::reverse(loop.begin(), loop.end());
    for (const Tri& t : triangulate_loop(loop)) tris.push_back(t);
  }
  return tris;
}

const std::array<std::vector<Tri>, 256>& table() {
  static const std::array<std::vector<Tri>, 256> t = [] {
    std::array<std::vector<Tri>, 256> out;
    for (int c = 0; c < 256; ++c) out[c] = build_config(c);
    return out;
  }();
  return t;
}

}  // namespace

std::array<int, 2> cube_edge_corners(int edge) {
  const int axis = edge / 4, b = edge % 4;
  const int o1 = axis == 0 ? 1 : 0;
  const int o2 = axis == 2 ? 1 : 2;
  const int base = ((b & 1) << o1) | (((b >> 1) & 1) << o2);
  return {base, base | (1 << axis)};
}

const std::vector<std::array<std::uint8_t, 3>>& cube_triangles(int config) {
  return table().at(config);
}

RawMesh march_binary(const NodeLattice& lattice, bool drop_invalid) {
  RawMesh mesh;
  const Index3 d = lattice.dims();
  if ((d.array() < 2).any()) return mesh;
  std::unordered_map<std::uint64_t, int> vertex_of;  // node flat * 3 + axis

  auto vertex = [&](const Index3& cube, int edge) {
    const auto c = cube_edge_corners(edge);
    const Index3 n0 = cube + Index3(c[0] & 1, (c[0] >> 1) & 1, (c[0] >> 2) & 1);
    const int axis = edge / 4;
    const std::uint64_t key = static_cast<std::uint64_t>(lattice.flat(n0)) * 3 + axis;
    auto [it, fresh] = vertex_of.emplace(key, static_cast<int>(mesh.vertices.size()));
    if (fresh) {
      Index3 n1 = n0;
      n1[axis] += 1;
      mesh.vertices.push_back(0.5 * (lattice.position(n0) + lattice.position(n1)));
    }
    return it->second;
  };

  for (int k = 0; k + 1 < d.z(); ++k)
    for (int j = 0; j + 1 < d.y(); ++j)
      for (int i = 0; i + 1 < d.x(); ++i) {
        const Index3 cube(i, j, k);
        int config = 0;
        NodeClass cls[8];
        for (int c = 0; c < 8; ++c) {
          cls[c] = lattice.at(cube + Index3(c & 1, (c >> 1) & 1, (c >> 2) & 1));
          if (cls[c] == NodeClass::Inside) config |= 1 << c;
        }
        if (config == 0 || config == 255) continue;
        for (const auto& tri : cube_triangles(config)) {
          if (drop_invalid) {
            bool touches = false;
            for (int e : tri) {
              const auto c = cube_edge_corners(e);
              touches |= cls[c[0]] == NodeClass::Invalid || cls[c[1]] == NodeClass::Invalid;
            }
            if (touches) continue;
          }
          mesh.triangles.push_back({vertex(cube, tri[0]), vertex(cube, tri[1]), vertex(cube, tri[2])});
        }
      }
  return mesh;
}

}  // namespace fsep
