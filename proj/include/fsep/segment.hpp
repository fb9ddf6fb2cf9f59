#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "fsep/advect.hpp"
#include "fsep/labeling.hpp"

namespace fsep {

// Feature label of every seed's particle at one time; -1 when invalid.
struct SeedLabeling {
  double time = 0.0;
  std::vector<int> labels;

  bool operator==(const SeedLabeling&) const = default;
};

constexpr int kMaxGradientWalk = 8;

// Label of the feature containing x. Unlabeled cells whose interpolated f
// exceeds tau walk up the f gradient, one face neighbor at a time.
int assign_label(const Vec3& x, const LabelField& labels, const TimeStep& step, double tau);

SeedLabeling assign_labels(const ParticleSet& particles, const LabelField& labels,
                           const TimeStep& step, double tau = 0.0);

struct ContributionRow {
  int initial = -1;
  int target = -1;
  std::size_t count = 0;
  double volume = 0.0;

  bool operator==(const ContributionRow&) const = default;
};

// Rows sorted by (initial, target); invalid targets kept as target -1.
struct ContributionTable {
  std::vector<ContributionRow> rows;

  std::size_t total_count() const;
  std::size_t count(int initial, int target) const;
  bool operator==(const ContributionTable&) const = default;
};

ContributionTable contribution_table(const SeedLabeling& final_labels,
                                     const SeedLabeling& initial_labels,
                                     std::span<const double> seed_volume);

// Header line, then "i<TAB>j<TAB>count<TAB>volume" per row.
void write_contribution_table(const ContributionTable& table, std::ostream& out);
ContributionTable read_contribution_table(std::istream& in);

struct SplitEvent {
  int initial = -1;
  int previous = -1;        // group label at t_k
  std::vector<int> next;    // >= 2 distinct valid labels at t_{k+1}, ascending
  double time = 0.0;        // t_{k+1}

  bool operator==(const SplitEvent&) const = default;
};

// Seed groups (initial label, label at t_k) whose seeds carry at least two
// distinct valid labels at t_{k+1}.
std::vector<SplitEvent> detect_splits(const SeedLabeling& initial, const SeedLabeling& previous,
                                      const SeedLabeling& next);

}  // namespace fsep
