#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

#include "fsep/advect.hpp"
#include "fsep/marching_cubes.hpp"
#include "fsep/segment.hpp"

namespace fsep {

enum class MeshKind { Boundary, Separation };

std::string_view to_string(MeshKind kind);

struct TriangleMesh {
  MeshKind kind = MeshKind::Boundary;
  int label = -1;         // target label (boundary) or first label of the pair
  int label_b = -1;       // second label of the pair (separation)
  int initial = -1;       // initial feature the separation lies in
  double time = 0.0;      // t_{k+1} for separation surfaces
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

// Node coordinates of the seed lattice along one axis, extrapolated with the
// boundary subcell spacing outside the grid.
double lattice_coordinate(const RectilinearGrid& grid, int refinement, int axis, int index);

// Lattice spanning the given seed-lattice box plus `pad` nodes on each side,
// all nodes initialized to `fill`.
NodeLattice make_lattice(const RectilinearGrid& grid, int refinement, const Index3& lo,
                         const Index3& hi, int pad, NodeClass fill);

// Closed surface around all seeds carrying `label` in `labeling`. Returns an
// empty mesh when no seed has the label.
TriangleMesh extract_boundary(const ParticleSet& particles, const SeedLabeling& labeling, int label,
                              const RectilinearGrid& grid);

// Open surface between the seeds of a split group going to `first` and those
// going to `second`.
TriangleMesh extract_separation_surface(const ParticleSet& particles, const SeedLabeling& initial,
                                        const SeedLabeling& previous, const SeedLabeling& next,
                                        const SplitEvent& split, int first, int second,
                                        const RectilinearGrid& grid);

// Umbrella-operator Laplacian smoothing; open-boundary vertices stay fixed.
TriangleMesh smooth_mesh(const TriangleMesh& mesh, int iterations = 10, double lambda = 0.5);

// Drops triangles with zero area and unreferenced vertices.
void remove_degenerate(TriangleMesh& mesh);

struct EdgeStats {
  std::size_t edges = 0;
  std::size_t boundary = 0;      // incident to exactly one triangle
  std::size_t non_manifold = 0;  // incident to more than two triangles
};

EdgeStats edge_stats(const TriangleMesh& mesh);
bool is_watertight(const TriangleMesh& mesh);
bool is_open_manifold(const TriangleMesh& mesh);

// Triangle-connected components; component id per triangle.
std::vector<int> triangle_components(const TriangleMesh& mesh, int* count = nullptr);

// Removes triangle components with fewer than min_triangles triangles.
TriangleMesh filter_small_components(const TriangleMesh& mesh, std::size_t min_triangles);

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh read_obj(const std::filesystem::path& path);

// One OBJ per mesh plus meshes.tsv: "file<TAB>kind<TAB>labels<TAB>timestamp".
void export_meshes(const std::vector<TriangleMesh>& meshes, const std::filesystem::path& dir);

}  // namespace fsep
