#include "fsep/segment.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fsep/parallel.hpp"

namespace fsep {

int assign_label(const Vec3& x, const LabelField& labels, const TimeStep& step, double tau) {
  const RectilinearGrid& g = *labels.grid;
  const auto cell = locate_cell(g, x);
  if (!cell) return -1;
  const int direct = labels.at(*cell);
  if (direct >= 0) return direct;
  if (!(interpolate_scalar(step.f, x) > tau)) return -1;

  Index3 c = *cell;
  for (int walk = 0; walk < kMaxGradientWalk; ++walk) {
    const Vec3 grad = gradient_f(step, c);
    Eigen::Index axis;
    const double mag = grad.cwiseAbs().maxCoeff(&axis);
    if (!(mag > 0.0)) return -1;
    c[axis] += grad[axis] > 0.0 ? 1 : -1;
    if (!g.contains(c)) return -1;
    if (const int l = labels.at(c); l >= 0) return l;
  }
  return -1;
}

SeedLabeling assign_labels(const ParticleSet& particles, const LabelField& labels,
                           const TimeStep& step, double tau) {
  SeedLabeling out;
  out.time = step.time;
  out.labels.assign(particles.size(), -1);
  parallel_for(particles.size(), [&](std::size_t i) {
    if (particles.alive[i]) out.labels[i] = assign_label(particles.positions[i], labels, step, tau);
  });
  return out;
}

std::size_t ContributionTable::total_count() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.count;
  return n;
}

std::size_t ContributionTable::count(int initial, int target) const {
  for (const auto& r : rows)
    if (r.initial == initial && r.target == target) return r.count;
  return 0;
}

ContributionTable contribution_table(const SeedLabeling& final_labels,
                                     const SeedLabeling& initial_labels,
                                     std::span<const double> seed_volume) {
  if (final_labels.labels.size() != initial_labels.labels.size() ||
      seed_volume.size() != initial_labels.labels.size())
    throw std::invalid_argument("labelings refer to different particle sets");
  std::map<std::pair<int, int>, ContributionRow> rows;
  for (std::size_t s = 0; s < seed_volume.size(); ++s) {
    const int i = initial_labels.labels[s], j = final_labels.labels[s];
    auto& row = rows[{i, j}];
    row.initial = i;
    row.target = j;
    ++row.count;
    row.volume += seed_volume[s];
  }
  ContributionTable t;
  for (auto& [key, row] : rows) t.rows.push_back(row);
  return t;
}

void write_contribution_table(const ContributionTable& table, std::ostream& out) {
  out << "i\tj\tcount\tvolume\n";
  char buf[64];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.volume);
    out << r.initial << '\t' << r.target << '\t' << r.count << '\t' << buf << '\n';
  }
}

ContributionTable read_contribution_table(std::istream& in) {
  ContributionTable t;
  std::string line;
  if (!std::getline(in, line)) return t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ContributionRow r;
    if (!(ls >> r.initial >> r.target >> r.count >> r.volume))
      throw std::runtime_error("malformed contribution row: " + line);
    t.rows.push_back(r);
  }
  return t;
}

std::vector<SplitEvent> detect_splits(const SeedLabeling& initial, const SeedLabeling& previous,
                                      const SeedLabeling& next) {
  const std::size_t n = initial.labels.size();
  if (previous.labels.size() != n || next.labels.size() != n)
    throw std::invalid_argument("labelings refer to different particle sets");
  std::map<std::pair<int, int>, std::set<int>> groups;
  for (std::size_t s = 0; s < n; ++s) {
    const int i = initial.labels[s], j = previous.labels[s], k = next.labels[s];
    if (i < 0 || j < 0) continue;
    auto& g = groups[{i, j}];
    if (k >= 0) g.insert(k);
  }
  std::vector<SplitEvent> out;
  for (const auto& [key, labels] : groups) {
    if (labels.size() < 2) continue;
    out.push_back({key.first, key.second, {labels.begin(), labels.end()}, next.time});
  }
  return out;
}

}  // namespace fsep
