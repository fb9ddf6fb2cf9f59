#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fsep/grid.hpp"

namespace fsep {

enum class DatasetErrorKind { Io, MagicMismatch, DimensionMismatch, Truncated, Format };

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DatasetErrorKind kind() const { return kind_; }

 private:
  DatasetErrorKind kind_;
};

// Step file, little-endian:
//   "FSEP0001" | u32 d | u32 nx, ny, nz | f64 time | f[nx*ny*nz] | u_0.. u_{d-1}
// Grid file:
//   "FSEPGRID" | u32 d | per axis: u32 count, f64 nodes[count]
void write_timestep(const TimeStep& step, const std::filesystem::path& path);
TimeStep read_timestep(const std::filesystem::path& path, const GridPtr& grid);

void write_grid(const RectilinearGrid& grid, const std::filesystem::path& path);
RectilinearGrid read_grid(const std::filesystem::path& path);

struct ManifestEntry {
  double time = 0.0;
  std::filesystem::path path;
};

// Text manifest: a header line "fsep-manifest<TAB>version<TAB>grid-file",
// then one "time<TAB>path" line per step. Relative paths resolve against the
// manifest's directory.
struct DatasetManifest {
  int version = 1;
  std::filesystem::path grid_file;
  std::vector<ManifestEntry> entries;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

TimeSeriesDataset load_dataset(const std::filesystem::path& manifest_path);

// Writes grid.bin, step_NNNN.bin and manifest.txt into dir; returns the
// manifest path.
std::filesystem::path save_dataset(const TimeSeriesDataset& dataset,
                                   const std::filesystem::path& dir);

enum class ScenarioKind { SplitSphere, RigidRotation, MergeThenSplit, ShearStretch };

ScenarioKind parse_scenario_kind(std::string_view name);
std::string_view to_string(ScenarioKind kind);

// Analytic test flows on the unit cube. Lengths in domain units.
struct SyntheticScenario {
  ScenarioKind kind = ScenarioKind::SplitSphere;
  int cells = 32;  // per axis
  int steps = 8;
  double t_begin = 0.0;
  double t_end = 1.0;
  Vec3 center = Vec3::Constant(0.5);
  double radius = 0.15625;

  // split-sphere: halves move apart at +-speed along x once t >= t_split.
  double speed = 0.0;
  double t_split = 0.0;

  // merge-then-split: ball centers at center +- (separation + s(t)) e_x with
  // s(t) = amplitude (1 - cos(2 pi t / period)) / 2.
  double separation = 0.09;
  double amplitude = 0.1;
  double period = 2.0 / 3.0;

  // rigid-rotation about the z axis through center.
  double angular_velocity = 0.0;
  double orbit_radius = 0.2;

  // shear-stretch: u = (shear_rate (y - c_y), 0, 0).
  double shear_rate = 0.5;

  void validate() const;
};

// Sensible parameters for a kind at the given resolution.
SyntheticScenario default_scenario(ScenarioKind kind, int cells, int steps);

TimeSeriesDataset generate_scenario(const SyntheticScenario& scenario);

// Analytic liquid indicator and velocity of a scenario at time t.
bool scenario_inside(const SyntheticScenario& scenario, const Vec3& x, double t);
Vec3 scenario_velocity(const SyntheticScenario& scenario, const Vec3& x, double t);

}  // namespace fsep
