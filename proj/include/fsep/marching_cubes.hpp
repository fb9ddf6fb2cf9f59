#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fsep/grid.hpp"

namespace fsep {

// Cube corner c sits at ((c>>0)&1, (c>>1)&1, (c>>2)&1). Edge e runs along
// axis e/4; bits of e%4 give the two remaining corner coordinates in
// ascending axis order.
std::array<int, 2> cube_edge_corners(int edge);

// Triangles (as edge triples) for each of the 256 corner configurations.
// Ambiguous faces always separate inside corners, so neighbouring cubes agree
// on every shared face and binary fields give closed surfaces.
const std::vector<std::array<std::uint8_t, 3>>& cube_triangles(int config);

enum class NodeClass : std::uint8_t { Outside = 0, Inside = 1, Invalid = 2 };

// Node lattice with per-axis coordinates, x fastest.
struct NodeLattice {
  std::array<std::vector<double>, 3> coords;
  std::vector<NodeClass> nodes;

  Index3 dims() const {
    return {static_cast<int>(coords[0].size()), static_cast<int>(coords[1].size()),
            static_cast<int>(coords[2].size())};
  }
  std::size_t flat(const Index3& n) const {
    const Index3 d = dims();
    return static_cast<std::size_t>(n.x()) +
           static_cast<std::size_t>(d.x()) * (n.y() + static_cast<std::size_t>(d.y()) * n.z());
  }
  NodeClass& at(const Index3& n) { return nodes[flat(n)]; }
  NodeClass at(const Index3& n) const { return nodes[flat(n)]; }
  Vec3 position(const Index3& n) const {
    return {coords[0][n.x()], coords[1][n.y()], coords[2][n.z()]};
  }
};

struct RawMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// Iso-surface between Inside and the other classes with vertices at edge
// midpoints, oriented from inside to outside. With drop_invalid, triangles
// touching an edge incident to an Invalid node are discarded.
RawMesh march_binary(const NodeLattice& lattice, bool drop_invalid);

}  // namespace fsep
