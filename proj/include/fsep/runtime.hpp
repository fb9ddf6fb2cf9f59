#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsep/config.hpp"
#include "fsep/extract.hpp"
#include "fsep/labeling.hpp"
#include "fsep/segment.hpp"

namespace fsep {

// A particle owned by one partition worker.
struct WorkerParticle {
  std::size_t seed = 0;  // global seed index
  int origin = 0;        // partition that seeded it and collects its labels
  Vec3 position = Vec3::Zero();
  double epsilon = 0.0;
  bool alive = true;
};

struct Worker {
  int rank = 0;
  CellBox core;
  std::vector<WorkerParticle> particles;  // owned, ascending seed
  std::vector<std::size_t> seeded;        // seeds originating here, ascending
  std::vector<int> seed_labels;           // label per entry of `seeded`
};

struct HandoffMessage {
  int from = 0;
  int to = 0;
  WorkerParticle particle;
};

// Pre-step and post-step position of a valid particle near another core.
struct GhostMessage {
  int from = 0;
  int to = 0;
  NeighborIndex::Entry entry;
};

struct LabelMessage {
  std::size_t seed = 0;
  int origin = 0;
  int label = -1;
};

struct ExchangeStats {
  std::size_t messages = 0;
  std::size_t unclaimed = 0;  // alive particles outside every core, marked dead
};

// Hands each alive particle to the worker whose core contains its cell. Each
// particle is owned by exactly one worker afterwards.
ExchangeStats partition_exchange(std::vector<Worker>& workers, const PartitionLayout& layout,
                                 const RectilinearGrid& grid);

// Largest particle travel per data interval, in units of the smallest cell
// width, over the steps between the two indices.
double max_cell_travel(const TimeSeriesDataset& dataset, int first, int last);

struct IntervalRecord {
  int from_index = 0;
  int to_index = 0;
  double time = 0.0;  // t_{k+1}
  IntervalStats stats;
  int features = 0;
  std::size_t splits = 0;
  std::size_t handoffs = 0;
  std::size_t ghosts = 0;
  double advect_seconds = 0.0;
  double label_seconds = 0.0;
  double split_seconds = 0.0;
};

struct RunReport {
  std::size_t seeds = 0;
  std::size_t alive = 0;
  std::size_t corrected_seeds = 0;  // epsilon > 0
  double corrected_fraction = 0.0;
  double epsilon_max = 0.0;
  double epsilon_mean = 0.0;
  int initial_features = 0;
  int final_features = 0;
  std::size_t boundary_meshes = 0;
  std::size_t separation_meshes = 0;
  std::size_t handoff_messages = 0;
  std::size_t ghost_messages = 0;
  std::size_t label_messages = 0;
  double seed_seconds = 0.0;
  double boundary_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<IntervalRecord> intervals;
  std::vector<std::string> violations;  // failed runtime invariants
};

struct RunResult {
  RunReport report;
  ParticleSet particles;
  SeedLabeling initial;
  SeedLabeling final_labels;
  std::vector<SeedLabeling> history;  // t0 through tF, one per step
  std::vector<SplitEvent> splits;
  ContributionTable contributions;
  std::vector<TriangleMesh> meshes;  // boundaries by label, then separations in time order
};

// Runs the full pipeline in memory. Partitioned runs produce the same
// result as serial runs apart from timings and message counts.
RunResult run_pipeline(const TimeSeriesDataset& dataset, const PipelineConfig& config);

// Loads config.dataset, runs, and writes all artifacts into config.output.
RunResult run_pipeline(const PipelineConfig& config);

// report.tsv, intervals.tsv, contributions.tsv, epsilon.tsv, labels.tsv,
// splits.tsv, trails.tsv, config.txt and meshes/.
void write_artifacts(const RunResult& result, const PipelineConfig& config,
                     const std::filesystem::path& dir);

// Human-readable summary of a run directory.
void summarize_run(const std::filesystem::path& dir, std::ostream& out);

}  // namespace fsep
