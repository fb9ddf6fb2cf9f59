#include "fsep/extract.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fsep {

namespace fs = std::filesystem;

std::string_view to_string(MeshKind kind) {
  return kind == MeshKind::Boundary ? "boundary" : "separation";
}

double lattice_coordinate(const RectilinearGrid& grid, int refinement, int axis, int index) {
  const int per = 1 << refinement;
  const int n = grid.cells(axis) * per;
  auto inside = [&](int I) {
    const int cell = I >> refinement, sub = I & (per - 1);
    return grid.node(axis, cell) +
           (sub + 0.5) / per * (grid.node(axis, cell + 1) - grid.node(axis, cell));
  };
  if (index < 0) return inside(0) + index * grid.width(axis, 0) / per;
  if (index >= n)
    return inside(n - 1) + (index - n + 1) * grid.width(axis, grid.cells(axis) - 1) / per;
  return inside(index);
}

NodeLattice make_lattice(const RectilinearGrid& grid, int refinement, const Index3& lo,
                         const Index3& hi, int pad, NodeClass fill) {
  NodeLattice lat;
  for (int a = 0; a < 3; ++a)
    for (int I = lo[a] - pad; I <= hi[a] + pad; ++I)
      lat.coords[a].push_back(lattice_coordinate(grid, refinement, a, I));
  lat.nodes.assign(static_cast<std::size_t>(lat.dims().prod()), fill);
  return lat;
}

namespace {

TriangleMesh to_mesh(RawMesh raw) {
  TriangleMesh m;
  m.vertices = std::move(raw.vertices);
  m.triangles = std::move(raw.triangles);
  remove_degenerate(m);
  return m;
}

}  // namespace

TriangleMesh extract_boundary(const ParticleSet& particles, const SeedLabeling& labeling, int label,
                              const RectilinearGrid& grid) {
  TriangleMesh mesh;
  mesh.kind = MeshKind::Boundary;
  mesh.label = label;
  mesh.time = labeling.time;

  std::vector<std::size_t> members;
  for (std::size_t s = 0; s < particles.size(); ++s)
    if (labeling.labels[s] == label) members.push_back(s);
  if (members.empty()) return mesh;

  Index3 lo = particles.lattice[members.front()], hi = lo;
  for (std::size_t s : members) {
    lo = lo.cwiseMin(particles.lattice[s]);
    hi = hi.cwiseMax(particles.lattice[s]);
  }
  constexpr int kPad = 1;
  NodeLattice lat = make_lattice(grid, particles.refinement, lo, hi, kPad, NodeClass::Outside);
  for (std::size_t s : members)
    lat.at(particles.lattice[s] - lo + Index3::Constant(kPad)) = NodeClass::Inside;

  TriangleMesh built = to_mesh(march_binary(lat, false));
  mesh.vertices = std::move(built.vertices);
  mesh.triangles = std::move(built.triangles);
  return mesh;
}

TriangleMesh extract_separation_surface(const ParticleSet& particles, const SeedLabeling& initial,
                                        const SeedLabeling& previous, const SeedLabeling& next,
                                        const SplitEvent& split, int first, int second,
                                        const RectilinearGrid& grid) {
  TriangleMesh mesh;
  mesh.kind = MeshKind::Separation;
  mesh.label = first;
  mesh.label_b = second;
  mesh.initial = split.initial;
  mesh.time = split.time;

  std::vector<std::size_t> group;
  for (std::size_t s = 0; s < particles.size(); ++s)
    if (initial.labels[s] == split.initial && previous.labels[s] == split.previous)
      group.push_back(s);
  if (group.empty()) return mesh;

  Index3 lo = particles.lattice[group.front()], hi = lo;
  for (std::size_t s : group) {
    lo = lo.cwiseMin(particles.lattice[s]);
    hi = hi.cwiseMax(particles.lattice[s]);
  }
  constexpr int kPad = 1;
  NodeLattice lat = make_lattice(grid, particles.refinement, lo, hi, kPad, NodeClass::Invalid);
  bool has_first = false, has_second = false;
  for (std::size_t s : group) {
    const Index3 n = particles.lattice[s] - lo + Index3::Constant(kPad);
    if (next.labels[s] == first) {
      lat.at(n) = NodeClass::Inside;
      has_first = true;
    } else if (next.labels[s] == second) {
      lat.at(n) = NodeClass::Outside;
      has_second = true;
    }
  }
  if (!has_first || !has_second) return mesh;

  TriangleMesh built = to_mesh(march_binary(lat, true));
  mesh.vertices = std::move(built.vertices);
  mesh.triangles = std::move(built.triangles);
  return mesh;
}

void remove_degenerate(TriangleMesh& mesh) {
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3 e1 = mesh.vertices[t[1]] - a, e2 = mesh.vertices[t[2]] - a;
    const double scale = std::max(e1.squaredNorm(), e2.squaredNorm());
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    if (!(e1.cross(e2).norm() > 1e-12 * scale)) continue;
    kept.push_back(t);
  }
  std::vector<int> remap(mesh.vertices.size(), -1);
  std::vector<Vec3> verts;
  for (auto& t : kept)
    for (int& v : t) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(verts.size());
        verts.push_back(mesh.vertices[v]);
      }
      v = remap[v];
    }
  mesh.vertices = std::move(verts);
  mesh.triangles = std::move(kept);
}

namespace {

std::map<std::pair<int, int>, int> edge_counts(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> counts;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++counts[{a, b}];
    }
  return counts;
}

}  // namespace

EdgeStats edge_stats(const TriangleMesh& mesh) {
  EdgeStats s;
  for (const auto& [edge, n] : edge_counts(mesh)) {
    ++s.edges;
    if (n == 1) ++s.boundary;
    if (n > 2) ++s.non_manifold;
  }
  return s;
}

bool is_watertight(const TriangleMesh& mesh) {
  for (const auto& [edge, n] : edge_counts(mesh))
    if (n != 2) return false;
  return true;
}

bool is_open_manifold(const TriangleMesh& mesh) {
  const EdgeStats s = edge_stats(mesh);
  return s.non_manifold == 0 && s.boundary > 0;
}

TriangleMesh smooth_mesh(const TriangleMesh& mesh, int iterations, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in (0, 1]");
  TriangleMesh out = mesh;
  if (iterations <= 0) return out;

  std::vector<std::set<int>> adj(mesh.vertices.size());
  std::vector<std::uint8_t> fixed(mesh.vertices.size(), 0);
  for (const auto& [edge, n] : edge_counts(mesh)) {
    adj[edge.first].insert(edge.second);
    adj[edge.second].insert(edge.first);
    if (n == 1) fixed[edge.first] = fixed[edge.second] = 1;
  }
  std::vector<Vec3> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
      if (fixed[v] || adj[v].empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 avg = Vec3::Zero();
      for (int u : adj[v]) avg += out.vertices[u];
      avg /= static_cast<double>(adj[v].size());
      next[v] = out.vertices[v] + lambda * (avg - out.vertices[v]);
    }
    out.vertices.swap(next);
  }
  return out;
}

std::vector<int> triangle_components(const TriangleMesh& mesh, int* count) {
  const std::size_t n = mesh.triangles.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::pair<int, int>, std::size_t> first_tri;
  for (std::size_t t = 0; t < n; ++t)
    for (int e = 0; e < 3; ++e) {
      int a = mesh.triangles[t][e], b = mesh.triangles[t][(e + 1) % 3];
      if (a > b) std::swap(a, b);
      auto [it, fresh] = first_tri.emplace(std::make_pair(a, b), t);
      if (!fresh) {
        const std::size_t ra = find(it->second), rb = find(t);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  std::vector<int> comp(n, -1);
  std::map<std::size_t, int> ids;
  for (std::size_t t = 0; t < n; ++t) {
    const auto [it, fresh] = ids.emplace(find(t), static_cast<int>(ids.size()));
    comp[t] = it->second;
  }
  if (count) *count = static_cast<int>(ids.size());
  return comp;
}

TriangleMesh filter_small_components(const TriangleMesh& mesh, std::size_t min_triangles) {
  if (min_triangles == 0) return mesh;
  int count = 0;
  const auto comp = triangle_components(mesh, &count);
  std::vector<std::size_t> size(count, 0);
  for (int c : comp) ++size[c];
  TriangleMesh out = mesh;
  out.triangles.clear();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    if (size[comp[t]] >= min_triangles) out.triangles.push_back(mesh.triangles[t]);
  remove_degenerate(out);
  return out;
}

void write_obj(const TriangleMesh& mesh, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TriangleMesh read_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> t;
      for (int& idx : t) {
        std::string tok;
        if (!(ls >> tok))
          throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad face");
        idx = std::stoi(tok.substr(0, tok.find('/'))) - 1;
        if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
          throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                   ": face index out of range");
      }
      mesh.triangles.push_back(t);
    }
  }
  return mesh;
}

void export_meshes(const std::vector<TriangleMesh>& meshes, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  const fs::path manifest = dir / "meshes.tsv";
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot open " + manifest.string() + " for writing");
  out << "file\tkind\tlabels\ttimestamp\n";
  char name[64], stamp[64];
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    const TriangleMesh& mesh = meshes[m];
    std::snprintf(name, sizeof name, "mesh_%04zu.obj", m);
    write_obj(mesh, dir / name);
    out << name << '\t' << to_string(mesh.kind) << '\t';
    if (mesh.kind == MeshKind::Boundary) {
      out << mesh.label << "\t-\n";
    } else {
      std::snprintf(stamp, sizeof stamp, "%.17g", mesh.time);
      out << mesh.label << ',' << mesh.label_b << '\t' << stamp << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + manifest.string());
}

}  // namespace fsep
