#include "fsep/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fsep {

namespace fs = std::filesystem;

namespace {

constexpr char kStepMagic[8] = {'F', 'S', 'E', 'P', '0', '0', '0', '1'};
constexpr char kGridMagic[8] = {'F', 'S', 'E', 'P', 'G', 'R', 'I', 'D'};
constexpr std::string_view kManifestTag = "fsep-manifest";

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw DatasetError(DatasetErrorKind::Io, "cannot open " + path.string());
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    v = to_little(v);
    bytes(&v, 4);
  }
  void f64(double v) {
    v = to_little(v);
    bytes(&v, 8);
  }
  void f64s(std::span<const double> vs) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(vs.data(), vs.size() * 8);
    } else {
      for (double v : vs) f64(v);
    }
  }
  void finish() {
    out_.flush();
    if (!out_) throw DatasetError(DatasetErrorKind::Io, "write failed: " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DatasetError(DatasetErrorKind::Io, "cannot open " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw DatasetError(DatasetErrorKind::Truncated, "truncated payload in " + path_.string());
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return to_little(v);
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return to_little(v);
  }
  void f64s(std::span<double> vs) {
    bytes(vs.data(), vs.size() * 8);
    if constexpr (std::endian::native == std::endian::big)
      for (double& v : vs) v = to_little(v);
  }
  void magic(const char (&expected)[8]) {
    char m[8];
    in_.read(m, 8);
    if (in_.gcount() != 8 || std::memcmp(m, expected, 8) != 0)
      throw DatasetError(DatasetErrorKind::MagicMismatch, "bad magic in " + path_.string());
  }

 private:
  fs::path path_;
  std::ifstream in_;
};

}  // namespace

void write_timestep(const TimeStep& step, const fs::path& path) {
  step.validate();
  const RectilinearGrid& g = step.grid();
  Writer w(path);
  w.bytes(kStepMagic, 8);
  w.u32(3);
  for (int a = 0; a < 3; ++a) w.u32(static_cast<std::uint32_t>(g.cells(a)));
  w.f64(step.time);
  w.f64s(step.f.component(0));
  for (int c = 0; c < 3; ++c) w.f64s(step.u.component(c));
  w.finish();
}

TimeStep read_timestep(const fs::path& path, const GridPtr& grid) {
  Reader r(path);
  r.magic(kStepMagic);
  const std::uint32_t d = r.u32();
  if (d != 3)
    throw DatasetError(DatasetErrorKind::DimensionMismatch,
                       "unsupported dimension " + std::to_string(d) + " in " + path.string());
  for (int a = 0; a < 3; ++a) {
    const std::uint32_t n = r.u32();
    if (n != static_cast<std::uint32_t>(grid->cells(a)))
      throw DatasetError(DatasetErrorKind::DimensionMismatch,
                         "cell count mismatch on axis " + std::to_string(a) + " in " +
                             path.string());
  }
  TimeStep step;
  step.time = r.f64();
  step.f = CellField(grid, 1);
  step.u = CellField(grid, 3);
  r.f64s(step.f.component(0));
  for (int c = 0; c < 3; ++c) r.f64s(step.u.component(c));
  return step;
}

void write_grid(const RectilinearGrid& grid, const fs::path& path) {
  Writer w(path);
  w.bytes(kGridMagic, 8);
  w.u32(3);
  for (int a = 0; a < 3; ++a) {
    const auto nodes = grid.nodes(a);
    w.u32(static_cast<std::uint32_t>(nodes.size()));
    w.f64s(nodes);
  }
  w.finish();
}

RectilinearGrid read_grid(const fs::path& path) {
  Reader r(path);
  r.magic(kGridMagic);
  const std::uint32_t d = r.u32();
  if (d != 3)
    throw DatasetError(DatasetErrorKind::DimensionMismatch,
                       "unsupported dimension " + std::to_string(d) + " in " + path.string());
  std::array<std::vector<double>, 3> nodes;
  for (int a = 0; a < 3; ++a) {
    const std::uint32_t n = r.u32();
    if (n > (1u << 24))
      throw DatasetError(DatasetErrorKind::Format, "implausible node count in " + path.string());
    nodes[a].resize(n);
    r.f64s(nodes[a]);
  }
  try {
    return RectilinearGrid(std::move(nodes));
  } catch (const std::invalid_argument& e) {
    throw DatasetError(DatasetErrorKind::Format, path.string() + ": " + e.what());
  }
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetErrorKind::Io, "cannot open " + path.string());
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };

  DatasetManifest m;
  std::string line;
  if (!std::getline(in, line))
    throw DatasetError(DatasetErrorKind::Format, "empty manifest " + path.string());
  {
    std::istringstream hs(line);
    std::string tag, grid;
    if (!std::getline(hs, tag, '\t') || tag != kManifestTag || !(hs >> m.version) ||
        !(hs.ignore(1), std::getline(hs, grid)) || grid.empty())
      throw DatasetError(DatasetErrorKind::Format, "bad manifest header in " + path.string());
    m.grid_file = resolve(grid);
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DatasetError(DatasetErrorKind::Format,
                         path.string() + ":" + std::to_string(lineno) + ": expected time<TAB>path");
    ManifestEntry e;
    try {
      std::size_t used = 0;
      e.time = std::stod(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DatasetError(DatasetErrorKind::Format,
                         path.string() + ":" + std::to_string(lineno) + ": bad time value");
    }
    e.path = resolve(line.substr(tab + 1));
    if (!m.entries.empty() && !(m.entries.back().time < e.time))
      throw DatasetError(DatasetErrorKind::Format,
                         path.string() + ": step times are not strictly increasing");
    m.entries.push_back(std::move(e));
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError(DatasetErrorKind::Io, "cannot open " + path.string());
  // Entry paths are relative to the working directory or absolute; the file
  // stores them relative to the manifest.
  const fs::path base = fs::absolute(path).parent_path();
  auto rel = [&](const fs::path& p) { return fs::absolute(p).lexically_relative(base).generic_string(); };
  out << kManifestTag << '\t' << manifest.version << '\t' << rel(manifest.grid_file) << '\n';
  char buf[64];
  for (const auto& e : manifest.entries) {
    std::snprintf(buf, sizeof buf, "%.17g", e.time);
    out << buf << '\t' << rel(e.path) << '\n';
  }
  if (!out) throw DatasetError(DatasetErrorKind::Io, "write failed: " + path.string());
}

TimeSeriesDataset load_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  for (const auto& e : m.entries)
    if (!fs::exists(e.path))
      throw DatasetError(DatasetErrorKind::Io, "missing step file " + e.path.string());
  TimeSeriesDataset ds;
  ds.grid = std::make_shared<const RectilinearGrid>(read_grid(m.grid_file));
  for (const auto& e : m.entries) {
    ds.steps.push_back(read_timestep(e.path, ds.grid));
    if (ds.steps.back().time != e.time)
      throw DatasetError(DatasetErrorKind::Format,
                         "time in " + e.path.string() + " disagrees with manifest");
  }
  return ds;
}

fs::path save_dataset(const TimeSeriesDataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DatasetError(DatasetErrorKind::Io, "cannot create " + dir.string());
  DatasetManifest m;
  m.grid_file = dir / "grid.bin";
  write_grid(*dataset.grid, m.grid_file);
  char name[32];
  for (std::size_t k = 0; k < dataset.steps.size(); ++k) {
    std::snprintf(name, sizeof name, "step_%04zu.bin", k);
    write_timestep(dataset.steps[k], dir / name);
    m.entries.push_back({dataset.steps[k].time, dir / name});
  }
  const fs::path manifest = dir / "manifest.txt";
  write_manifest(m, manifest);
  return manifest;
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

ScenarioKind parse_scenario_kind(std::string_view name) {
  if (name == "split-sphere") return ScenarioKind::SplitSphere;
  if (name == "rigid-rotation") return ScenarioKind::RigidRotation;
  if (name == "merge-then-split") return ScenarioKind::MergeThenSplit;
  if (name == "shear-stretch") return ScenarioKind::ShearStretch;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::SplitSphere: return "split-sphere";
    case ScenarioKind::RigidRotation: return "rigid-rotation";
    case ScenarioKind::MergeThenSplit: return "merge-then-split";
    case ScenarioKind::ShearStretch: return "shear-stretch";
  }
  return "?";
}

void SyntheticScenario::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("scenario radius must be > 0");
  if (steps < 2) throw std::invalid_argument("scenario needs at least 2 steps");
  if (cells < 1) throw std::invalid_argument("scenario needs at least 1 cell per axis");
  if (!(t_end > t_begin)) throw std::invalid_argument("scenario time span is empty");
  if (kind == ScenarioKind::MergeThenSplit && !(period > 0.0))
    throw std::invalid_argument("merge-then-split period must be > 0");
}

SyntheticScenario default_scenario(ScenarioKind kind, int cells, int steps) {
  SyntheticScenario s;
  s.kind = kind;
  s.cells = cells;
  s.steps = steps;
  const double h = 1.0 / cells;
  const double span = s.t_end - s.t_begin;
  switch (kind) {
    case ScenarioKind::SplitSphere:
      s.radius = 0.15625;
      // One cell per stored step, capped so both halves stay in the domain.
      s.speed = std::min(h * (steps - 1), 0.3) / span;
      break;
    case ScenarioKind::RigidRotation:
      s.radius = 0.15;
      s.orbit_radius = 0.2;
      s.angular_velocity = 2.0 * std::numbers::pi / span;
      break;
    case ScenarioKind::MergeThenSplit:
      s.radius = 0.125;
      s.separation = 0.09;
      s.amplitude = 0.1;
      s.period = span * 2.0 / 3.0;
      break;
    case ScenarioKind::ShearStretch:
      s.radius = 0.2;
      s.shear_rate = 0.5;
      break;
  }
  return s;
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double ball_sdf(const Vec3& x, const Vec3& c, double r) { return (x - c).norm() - r; }

// Signed distance bound (negative inside). Its magnitude never exceeds the
// true distance to the boundary, so cells far from zero are pure.
double scenario_sdf(const SyntheticScenario& s, const Vec3& x, double t) {
  const Vec3& c = s.center;
  switch (s.kind) {
    case ScenarioKind::SplitSphere: {
      const double shift = s.speed * std::max(0.0, t - s.t_split);
      const Vec3 off(shift, 0.0, 0.0);
      const double left = std::max(ball_sdf(x, c - off, s.radius), x.x() - (c.x() - shift));
      const double right = std::max(ball_sdf(x, c + off, s.radius), (c.x() + shift) - x.x());
      return std::min(left, right);
    }
    case ScenarioKind::RigidRotation: {
      const double phi = s.angular_velocity * t;
      const Vec3 bc = c + s.orbit_radius * Vec3(std::cos(phi), std::sin(phi), 0.0);
      return ball_sdf(x, bc, s.radius);
    }
    case ScenarioKind::MergeThenSplit: {
      const double d =
          s.separation + s.amplitude * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / s.period));
      const Vec3 off(d, 0.0, 0.0);
      return std::min(ball_sdf(x, c - off, s.radius), ball_sdf(x, c + off, s.radius));
    }
    case ScenarioKind::ShearStretch: {
      const double g = s.shear_rate * t;
      const Vec3 back(x.x() - g * (x.y() - c.y()), x.y(), x.z());
      return ball_sdf(back, c, s.radius) / (1.0 + std::abs(g));
    }
  }
  return 1.0;
}

}  // namespace

bool scenario_inside(const SyntheticScenario& s, const Vec3& x, double t) {
  return scenario_sdf(s, x, t) <= 0.0;
}

Vec3 scenario_velocity(const SyntheticScenario& s, const Vec3& x, double t) {
  const Vec3& c = s.center;
  switch (s.kind) {
    case ScenarioKind::SplitSphere:
      return {t >= s.t_split ? sign(x.x() - c.x()) * s.speed : 0.0, 0.0, 0.0};
    case ScenarioKind::RigidRotation:
      return {-s.angular_velocity * (x.y() - c.y()), s.angular_velocity * (x.x() - c.x()), 0.0};
    case ScenarioKind::MergeThenSplit: {
      const double w = 2.0 * std::numbers::pi / s.period;
      const double rate = s.amplitude * 0.5 * w * std::sin(w * t);
      return {sign(x.x() - c.x()) * rate, 0.0, 0.0};
    }
    case ScenarioKind::ShearStretch:
      return {s.shear_rate * (x.y() - c.y()), 0.0, 0.0};
  }
  return Vec3::Zero();
}

TimeSeriesDataset generate_scenario(const SyntheticScenario& s) {
  s.validate();
  TimeSeriesDataset ds;
  ds.grid = std::make_shared<const RectilinearGrid>(RectilinearGrid::uniform(
      Index3::Constant(s.cells), Vec3::Zero(), Vec3::Ones()));
  const RectilinearGrid& g = *ds.grid;
  constexpr int kSub = 4;

  for (int k = 0; k < s.steps; ++k) {
    const double t = s.t_begin + (s.t_end - s.t_begin) * k / (s.steps - 1);
    TimeStep step;
    step.time = t;
    step.f = CellField(ds.grid, 1);
    step.u = CellField(ds.grid, 3);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const Index3 idx = g.unflat(c);
      const Vec3 xc = g.cell_center(idx);
      const Vec3 size = g.cell_size(idx);
      const double sdf = scenario_sdf(s, xc, t);
      double f;
      if (sdf > 0.5 * size.norm()) {
        f = 0.0;
      } else if (sdf < -0.5 * size.norm()) {
        f = 1.0;
      } else {
        const Vec3 lo = g.cell_lo(idx);
        int inside = 0;
        for (int sz = 0; sz < kSub; ++sz)
          for (int sy = 0; sy < kSub; ++sy)
            for (int sx = 0; sx < kSub; ++sx) {
              const Vec3 p = lo + Vec3((sx + 0.5) / kSub * size.x(), (sy + 0.5) / kSub * size.y(),
                                       (sz + 0.5) / kSub * size.z());
              inside += scenario_inside(s, p, t);
            }
        f = static_cast<double>(inside) / (kSub * kSub * kSub);
      }
      step.f(c) = f;
      const Vec3 u = scenario_velocity(s, xc, t);
      for (int a = 0; a < 3; ++a) step.u(c, a) = u[a];
    }
    ds.steps.push_back(std::move(step));
  }
  return ds;
}

}  // namespace fsep
