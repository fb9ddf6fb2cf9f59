#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fsep/grid.hpp"
#include "fsep/plic.hpp"

namespace fsep {

enum class CorrectorMode { Off, Stages23, Full };
enum class TimeDirection { Forward, Backward };

CorrectorMode parse_corrector_mode(std::string_view name);
std::string_view to_string(CorrectorMode mode);

struct AdvectionConfig {
  int refinement = 1;
  int substeps = 1;
  CorrectorMode corrector = CorrectorMode::Full;
  int trail_stride = 8;
  TimeDirection direction = TimeDirection::Forward;

  void validate() const;
};

struct TrailSnapshot {
  double time = 0.0;
  std::vector<Vec3> positions;
};

// Particles in seed order; index i refers to the same seed for the whole run.
struct ParticleSet {
  int refinement = 0;
  std::vector<Vec3> seeds;
  std::vector<Index3> lattice;  // seed lattice coordinate, cell * 2^r + subcell
  std::vector<double> seed_volume;
  std::vector<Vec3> positions;
  std::vector<std::uint8_t> alive;
  std::vector<int> label;
  std::vector<double> epsilon;
  std::vector<TrailSnapshot> trail;

  std::size_t size() const { return seeds.size(); }
  void push_back(const Vec3& seed, const Index3& lattice_coord, double volume);
};

// Subcell centers of every cell with f > tau, kept where the PLIC test
// classifies them as liquid. Cells are visited in flat order, subcells x
// fastest.
ParticleSet seed_particles(const TimeStep& step, int refinement, double tau = 0.0);
ParticleSet seed_particles(const PhaseClassifier& phase, int refinement);
// Seeds only the cells in [begin, end).
ParticleSet seed_particles(const PhaseClassifier& phase, int refinement, const Index3& begin,
                           const Index3& end);

// RK4 from `from.time` to `to.time` in `substeps` equal steps. Returns
// nullopt if the particle leaves the domain.
std::optional<Vec3> integrate_rk4(const TimeStep& from, const TimeStep& to, const Vec3& x,
                                  int substeps);

// Particles around the pre-step positions, bucketed by cell, together with
// their post-step positions and phase validity.
class NeighborIndex {
 public:
  struct Entry {
    std::size_t id;
    Vec3 before;
    Vec3 after;
  };

  explicit NeighborIndex(const RectilinearGrid& grid) : grid_(&grid) {}

  // Only particles valid after the step are candidates; others are ignored.
  void add(std::size_t id, const Vec3& before, const Vec3& after, bool valid_after);

  // Nearest valid candidate (by pre-step position) in the 3x3x3 cell block
  // around `cell`, excluding `self`; ties go to the lower id.
  const Entry* nearest(const Index3& cell, const Vec3& before, std::size_t self) const;

 private:
  const RectilinearGrid* grid_;
  std::unordered_map<std::size_t, std::vector<Entry>> buckets_;
};

struct Correction {
  Vec3 position = Vec3::Zero();
  std::array<double, 3> stage_distance{0.0, 0.0, 0.0};
  bool vanished = false;  // no cell with f > tau anywhere

  double displacement() const { return stage_distance[0] + stage_distance[1] + stage_distance[2]; }
};

// Three-stage repositioning of a particle that failed the phase test after
// the step: neighbor displacement (full mode only), move into the nearest
// liquid-admitting cell, project onto the PLIC plane.
Correction correct_particle(std::size_t id, const Vec3& before, const Vec3& after,
                            const NeighborIndex& neighbors, const PhaseClassifier& phase,
                            CorrectorMode mode);

// Point where the segment from x towards the box center enters the box,
// nudged inside by `inset` (slab method).
Vec3 enter_box(const Vec3& x, const Vec3& lo, const Vec3& hi, double inset);

struct IntervalStats {
  std::size_t advected = 0;
  std::size_t left_domain = 0;
  std::size_t corrected = 0;
  std::size_t vanished = 0;
  std::size_t inconsistent = 0;  // alive and not liquid after the interval
};

// Advances all alive particles over one data interval. `from` and `to` may be
// in either time order; `to_phase` classifies against `to`.
IntervalStats advance_interval(ParticleSet& particles, const TimeStep& from, const TimeStep& to,
                               const PhaseClassifier& to_phase, const AdvectionConfig& config,
                               int interval_index);

IntervalStats advance_interval(ParticleSet& particles, const TimeStep& from, const TimeStep& to,
                               const AdvectionConfig& config, double tau = 0.0,
                               int interval_index = 0);

// epsilon per seed, in seed order.
std::vector<double> accumulated_displacement_field(const ParticleSet& particles);

}  // namespace fsep
