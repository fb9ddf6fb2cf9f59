#include "fsep/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "fsep/dataset_io.hpp"
#include "fsep/parallel.hpp"

namespace fsep {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Runs fn(w) for every worker on its own thread.
template <class Fn>
void for_each_worker(std::size_t count, Fn&& fn) {
  std::vector<std::jthread> threads;
  threads.reserve(count);
  for (std::size_t w = 0; w < count; ++w) threads.emplace_back([&fn, w] { fn(w); });
}

bool near_core(const CellBox& core, const Index3& cell) {
  return (cell.array() >= core.begin.array() - 1).all() &&
         (cell.array() < core.end.array() + 1).all();
}

class Engine {
 public:
  virtual ~Engine() = default;
  // Seeds at the initial step and returns the global seed table.
  virtual ParticleSet seed(const PhaseClassifier& phase, int refinement) = 0;
  virtual IntervalRecord advance(const TimeStep& from, const TimeStep& to,
                                 const PhaseClassifier& to_phase, const AdvectionConfig& config,
                                 int interval_index) = 0;
  virtual SeedLabeling label(const TimeStep& step, double tau, int* feature_count) = 0;
  // Copies the final particle state into the global seed table.
  virtual void finish(ParticleSet& particles) = 0;
  virtual std::size_t label_messages() const { return 0; }
};

class SerialEngine final : public Engine {
 public:
  ParticleSet seed(const PhaseClassifier& phase, int refinement) override {
    ps_ = seed_particles(phase, refinement);
    return ps_;
  }

  IntervalRecord advance(const TimeStep& from, const TimeStep& to, const PhaseClassifier& to_phase,
                         const AdvectionConfig& config, int interval_index) override {
    IntervalRecord rec;
    rec.stats = advance_interval(ps_, from, to, to_phase, config, interval_index);
    return rec;
  }

  SeedLabeling label(const TimeStep& step, double tau, int* feature_count) override {
    const LabelField lf = label_features(step, tau);
    *feature_count = lf.count;
    return assign_labels(ps_, lf, step, tau);
  }

  void finish(ParticleSet& particles) override {
    particles.positions = ps_.positions;
    particles.alive = ps_.alive;
    particles.epsilon = ps_.epsilon;
    particles.trail = ps_.trail;
  }

 private:
  ParticleSet ps_;
};

class PartitionedEngine final : public Engine {
 public:
  PartitionedEngine(const RectilinearGrid& grid, const Index3& counts, int ghost)
      : grid_(grid), layout_(grid.dims(), counts, ghost) {
    workers_.resize(layout_.partition_count());
    for (int p = 0; p < layout_.partition_count(); ++p) {
      workers_[p].rank = p;
      workers_[p].core = layout_.core(p);
    }
  }

  ParticleSet seed(const PhaseClassifier& phase, int refinement) override {
    std::vector<ParticleSet> local(workers_.size());
    for_each_worker(workers_.size(), [&](std::size_t w) {
      local[w] = seed_particles(phase, refinement, workers_[w].core.begin, workers_[w].core.end);
    });

    // Canonical order: cell flat index, then subcell with x fastest.
    const int per_axis = 1 << refinement;
    struct Key {
      std::size_t cell;
      int sub;
      int worker;
      std::size_t index;
    };
    std::vector<Key> keys;
    for (std::size_t w = 0; w < local.size(); ++w)
      for (std::size_t i = 0; i < local[w].size(); ++i) {
        const Index3& q = local[w].lattice[i];
        const Index3 cell(q.x() / per_axis, q.y() / per_axis, q.z() / per_axis);
        const Index3 sub = q - cell * per_axis;
        keys.push_back({grid_.flat(cell), sub.x() + per_axis * (sub.y() + per_axis * sub.z()),
                        static_cast<int>(w), i});
      }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
      return a.cell != b.cell ? a.cell < b.cell : a.sub < b.sub;
    });

    ParticleSet global;
    global.refinement = refinement;
    for (std::size_t s = 0; s < keys.size(); ++s) {
      const ParticleSet& src = local[keys[s].worker];
      const std::size_t i = keys[s].index;
      global.push_back(src.seeds[i], src.lattice[i], src.seed_volume[i]);
      Worker& w = workers_[keys[s].worker];
      w.particles.push_back({s, w.rank, src.seeds[i], 0.0, true});
      w.seeded.push_back(s);
    }
    for (Worker& w : workers_) w.seed_labels.assign(w.seeded.size(), -1);
    seed_count_ = global.size();
    return global;
  }

  IntervalRecord advance(const TimeStep& from, const TimeStep& to, const PhaseClassifier& to_phase,
                         const AdvectionConfig& config, int interval_index) override {
    config.validate();
    const std::size_t nw = workers_.size();
    std::vector<std::vector<Vec3>> before(nw);
    std::vector<std::vector<std::uint8_t>> valid(nw);
    std::vector<IntervalStats> stats(nw);

    for_each_worker(nw, [&](std::size_t w) {
      auto& parts = workers_[w].particles;
      before[w].resize(parts.size());
      valid[w].assign(parts.size(), 0);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        WorkerParticle& p = parts[i];
        before[w][i] = p.position;
        if (!p.alive) continue;
        ++stats[w].advected;
        if (const auto x = integrate_rk4(from, to, p.position, config.substeps)) {
          p.position = *x;
          valid[w][i] = to_phase.is_liquid(p.position);
        } else {
          p.alive = false;
          ++stats[w].left_domain;
        }
      }
    });

    IntervalRecord rec;
    std::vector<std::vector<GhostMessage>> inbox(nw);
    if (config.corrector == CorrectorMode::Full) {
      std::vector<std::vector<GhostMessage>> outbox(nw);
      for_each_worker(nw, [&](std::size_t w) {
        const auto& parts = workers_[w].particles;
        for (std::size_t i = 0; i < parts.size(); ++i) {
          if (!parts[i].alive || !valid[w][i]) continue;
          const auto cell = locate_cell(grid_, before[w][i]);
          if (!cell) continue;
          for (std::size_t v = 0; v < nw; ++v)
            if (v != w && near_core(workers_[v].core, *cell))
              outbox[w].push_back({static_cast<int>(w), static_cast<int>(v),
                                   {parts[i].seed, before[w][i], parts[i].position}});
        }
      });
      for (auto& box : outbox)
        for (auto& m : box) {
          inbox[m.to].push_back(m);
          ++rec.ghosts;
        }
    }

    if (config.corrector != CorrectorMode::Off) {
      for_each_worker(nw, [&](std::size_t w) {
        auto& parts = workers_[w].particles;
        NeighborIndex index(grid_);
        if (config.corrector == CorrectorMode::Full) {
          for (std::size_t i = 0; i < parts.size(); ++i)
            if (parts[i].alive) index.add(parts[i].seed, before[w][i], parts[i].position, valid[w][i]);
          for (const GhostMessage& m : inbox[w])
            index.add(m.entry.id, m.entry.before, m.entry.after, true);
        }
        for (std::size_t i = 0; i < parts.size(); ++i) {
          WorkerParticle& p = parts[i];
          if (!p.alive || valid[w][i]) continue;
          const Correction fix =
              correct_particle(p.seed, before[w][i], p.position, index, to_phase, config.corrector);
          ++stats[w].corrected;
          p.epsilon += fix.displacement();
          p.position = fix.position;
          if (fix.vanished) {
            p.alive = false;
            ++stats[w].vanished;
          }
        }
      });
    }

    for_each_worker(nw, [&](std::size_t w) {
      for (const WorkerParticle& p : workers_[w].particles)
        if (p.alive && !to_phase.is_liquid(p.position)) ++stats[w].inconsistent;
    });
    for (const IntervalStats& s : stats) {
      rec.stats.advected += s.advected;
      rec.stats.left_domain += s.left_domain;
      rec.stats.corrected += s.corrected;
      rec.stats.vanished += s.vanished;
      rec.stats.inconsistent += s.inconsistent;
    }

    if ((interval_index + 1) % config.trail_stride == 0) {
      TrailSnapshot snap{to.time, std::vector<Vec3>(seed_count_, Vec3::Zero())};
      for (const Worker& w : workers_)
        for (const WorkerParticle& p : w.particles) snap.positions[p.seed] = p.position;
      trail_.push_back(std::move(snap));
    }

    const ExchangeStats ex = partition_exchange(workers_, layout_, grid_);
    rec.handoffs = ex.messages;
    return rec;
  }

  SeedLabeling label(const TimeStep& step, double tau, int* feature_count) override {
    const LabelField lf = label_features_partitioned(step, tau, layout_);
    *feature_count = lf.count;
    const std::size_t nw = workers_.size();
    std::vector<std::vector<LabelMessage>> outbox(nw);
    for_each_worker(nw, [&](std::size_t w) {
      for (const WorkerParticle& p : workers_[w].particles)
        outbox[w].push_back({p.seed, p.origin, p.alive ? assign_label(p.position, lf, step, tau) : -1});
    });
    for (std::size_t w = 0; w < nw; ++w)
      for (const LabelMessage& m : outbox[w]) {
        if (m.origin != static_cast<int>(w)) ++label_messages_;
        Worker& o = workers_[m.origin];
        const auto it = std::lower_bound(o.seeded.begin(), o.seeded.end(), m.seed);
        o.seed_labels[it - o.seeded.begin()] = m.label;
      }
    SeedLabeling out;
    out.time = step.time;
    out.labels.assign(seed_count_, -1);
    for (const Worker& w : workers_)
      for (std::size_t i = 0; i < w.seeded.size(); ++i) out.labels[w.seeded[i]] = w.seed_labels[i];
    return out;
  }

  void finish(ParticleSet& particles) override {
    for (const Worker& w : workers_)
      for (const WorkerParticle& p : w.particles) {
        particles.positions[p.seed] = p.position;
        particles.alive[p.seed] = p.alive ? 1 : 0;
        particles.epsilon[p.seed] = p.epsilon;
      }
    particles.trail = trail_;
  }

  std::size_t label_messages() const override { return label_messages_; }

 private:
  const RectilinearGrid& grid_;
  PartitionLayout layout_;
  std::vector<Worker> workers_;
  std::vector<TrailSnapshot> trail_;
  std::size_t seed_count_ = 0;
  std::size_t label_messages_ = 0;
};

void finish_mesh(TriangleMesh& mesh, const ExportOptions& opt) {
  if (opt.min_component_triangles > 0) mesh = filter_small_components(mesh, opt.min_component_triangles);
  if (opt.smooth_iterations > 0) mesh = smooth_mesh(mesh, opt.smooth_iterations, opt.smooth_lambda);
}

}  // namespace

ExchangeStats partition_exchange(std::vector<Worker>& workers, const PartitionLayout& layout,
                                 const RectilinearGrid& grid) {
  ExchangeStats stats;
  std::vector<HandoffMessage> messages;
  for (Worker& w : workers) {
    std::vector<WorkerParticle> keep;
    keep.reserve(w.particles.size());
    for (WorkerParticle& p : w.particles) {
      if (p.alive) {
        const auto cell = locate_cell(grid, p.position);
        if (!cell) {
          p.alive = false;
          ++stats.unclaimed;
        } else if (const int owner = layout.owner(*cell); owner != w.rank) {
          messages.push_back({w.rank, owner, p});
          continue;
        }
      }
      keep.push_back(p);
    }
    w.particles = std::move(keep);
  }
  for (const HandoffMessage& m : messages) workers[m.to].particles.push_back(m.particle);
  stats.messages = messages.size();
  for (Worker& w : workers)
    std::sort(w.particles.begin(), w.particles.end(),
              [](const WorkerParticle& a, const WorkerParticle& b) { return a.seed < b.seed; });
  return stats;
}

double max_cell_travel(const TimeSeriesDataset& ds, int first, int last) {
  if (first > last) std::swap(first, last);
  const double h = ds.grid->min_spacing();
  auto max_speed = [](const TimeStep& s) {
    double m = 0.0;
    for (std::size_t c = 0; c < s.f.cell_count(); ++c) m = std::max(m, s.velocity(c).norm());
    return m;
  };
  double travel = 0.0;
  for (int k = first; k < last; ++k) {
    const double u = std::max(max_speed(ds.steps[k]), max_speed(ds.steps[k + 1]));
    travel = std::max(travel, u * std::abs(ds.steps[k + 1].time - ds.steps[k].time) / h);
  }
  return travel;
}

RunResult run_pipeline(const TimeSeriesDataset& ds, const PipelineConfig& config) {
  config.validate();
  const int n = static_cast<int>(ds.steps.size());
  if (config.t0_index >= n || config.tf_index >= n)
    throw ConfigError("step index out of range: dataset has " + std::to_string(n) + " steps");
  const auto start = Clock::now();
  const RectilinearGrid& grid = *ds.grid;
  const double tau = config.tau;
  const int dir = config.tf_index >= config.t0_index ? 1 : -1;

  std::unique_ptr<Engine> engine;
  if (config.partitioned()) {
    // One ghost layer serves the 3x3x3 neighbor block; the rest covers travel.
    const double travel = max_cell_travel(ds, config.t0_index, config.tf_index);
    constexpr double kSlack = 1e-9;
    if (travel > config.ghost_width - 1 + kSlack)
      throw ConfigError("ghost_width " + std::to_string(config.ghost_width) +
                        " too small: particles travel up to " + num(travel) +
                        " cells per interval, need ghost_width >= " +
                        std::to_string(static_cast<int>(std::ceil(travel - kSlack)) + 1));
    engine = std::make_unique<PartitionedEngine>(grid, config.partitions, config.ghost_width);
  } else {
    engine = std::make_unique<SerialEngine>();
  }

  RunResult res;
  RunReport& rep = res.report;
  {
    const auto t = Clock::now();
    const PhaseClassifier phase0(ds.steps[config.t0_index], tau);
    res.particles = engine->seed(phase0, config.advection.refinement);
    res.initial = engine->label(ds.steps[config.t0_index], tau, &rep.initial_features);
    rep.seed_seconds = seconds_since(t);
  }
  rep.seeds = res.particles.size();
  res.history.push_back(res.initial);
  rep.final_features = rep.initial_features;

  std::vector<TriangleMesh> separations;
  int interval = 0;
  for (int k = config.t0_index; k != config.tf_index; k += dir, ++interval) {
    const TimeStep& from = ds.steps[k];
    const TimeStep& to = ds.steps[k + dir];
    auto t = Clock::now();
    const PhaseClassifier to_phase(to, tau);
    IntervalRecord rec = engine->advance(from, to, to_phase, config.advection, interval);
    rec.advect_seconds = seconds_since(t);
    rec.from_index = k;
    rec.to_index = k + dir;
    rec.time = to.time;

    t = Clock::now();
    SeedLabeling next = engine->label(to, tau, &rec.features);
    rec.label_seconds = seconds_since(t);

    t = Clock::now();
    const SeedLabeling& previous = res.history.back();
    const auto splits = detect_splits(res.initial, previous, next);
    for (const SplitEvent& s : splits)
      for (std::size_t a = 0; a < s.next.size(); ++a)
        for (std::size_t b = a + 1; b < s.next.size(); ++b)
          separations.push_back(extract_separation_surface(res.particles, res.initial, previous,
                                                           next, s, s.next[a], s.next[b], grid));
    rec.split_seconds = seconds_since(t);
    rec.splits = splits.size();
    res.splits.insert(res.splits.end(), splits.begin(), splits.end());
    res.history.push_back(std::move(next));

    if (config.advection.corrector == CorrectorMode::Full && rec.stats.inconsistent > 0)
      rep.violations.push_back("interval " + std::to_string(interval) + ": " +
                               std::to_string(rec.stats.inconsistent) +
                               " particles outside the liquid phase after correction");
    rep.handoff_messages += rec.handoffs;
    rep.ghost_messages += rec.ghosts;
    rep.final_features = rec.features;
    rep.intervals.push_back(rec);
  }

  engine->finish(res.particles);
  res.final_labels = res.history.back();
  res.particles.label = res.final_labels.labels;
  res.contributions = contribution_table(res.final_labels, res.initial, res.particles.seed_volume);

  const auto tb = Clock::now();
  std::vector<int> targets;
  for (int j : res.final_labels.labels)
    if (j >= 0) targets.push_back(j);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  std::vector<TriangleMesh> boundaries(targets.size());
  parallel_for(
      targets.size(),
      [&](std::size_t i) {
        boundaries[i] = extract_boundary(res.particles, res.final_labels, targets[i], grid);
      },
      1);
  for (TriangleMesh& m : boundaries) {
    if (!is_watertight(m))
      rep.violations.push_back("boundary mesh of label " + std::to_string(m.label) +
                               " is not watertight");
    finish_mesh(m, config.export_options);
    res.meshes.push_back(std::move(m));
  }
  rep.boundary_seconds = seconds_since(tb);
  for (TriangleMesh& m : separations) {
    if (edge_stats(m).non_manifold > 0)
      rep.violations.push_back("separation surface " + std::to_string(m.label) + "," +
                               std::to_string(m.label_b) + " has non-manifold edges");
    finish_mesh(m, config.export_options);
    res.meshes.push_back(std::move(m));
  }
  rep.boundary_meshes = boundaries.size();
  rep.separation_meshes = separations.size();

  for (std::size_t i = 0; i < res.particles.size(); ++i) {
    rep.alive += res.particles.alive[i];
    const double e = res.particles.epsilon[i];
    rep.epsilon_max = std::max(rep.epsilon_max, e);
    rep.epsilon_mean += e;
    rep.corrected_seeds += e > 0.0;
  }
  if (rep.seeds > 0) {
    rep.epsilon_mean /= static_cast<double>(rep.seeds);
    rep.corrected_fraction = static_cast<double>(rep.corrected_seeds) / static_cast<double>(rep.seeds);
  }
  rep.label_messages = engine->label_messages();
  rep.total_seconds = seconds_since(start);
  return res;
}

RunResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  const TimeSeriesDataset ds = load_dataset(config.dataset);
  RunResult res = run_pipeline(ds, config);
  write_artifacts(res, config, config.output);
  return res;
}

void write_artifacts(const RunResult& res, const PipelineConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  const RunReport& r = res.report;
  {
    auto out = open("report.tsv");
    out << "key\tvalue\n"
        << "seeds\t" << r.seeds << '\n'
        << "alive\t" << r.alive << '\n'
        << "corrected_seeds\t" << r.corrected_seeds << '\n'
        << "corrected_fraction\t" << num(r.corrected_fraction) << '\n'
        << "epsilon_max\t" << num(r.epsilon_max) << '\n'
        << "epsilon_mean\t" << num(r.epsilon_mean) << '\n'
        << "initial_features\t" << r.initial_features << '\n'
        << "final_features\t" << r.final_features << '\n'
        << "intervals\t" << r.intervals.size() << '\n'
        << "splits\t" << res.splits.size() << '\n'
        << "boundary_meshes\t" << r.boundary_meshes << '\n'
        << "separation_meshes\t" << r.separation_meshes << '\n'
        << "handoff_messages\t" << r.handoff_messages << '\n'
        << "ghost_messages\t" << r.ghost_messages << '\n'
        << "label_messages\t" << r.label_messages << '\n'
        << "seed_seconds\t" << num(r.seed_seconds) << '\n'
        << "boundary_seconds\t" << num(r.boundary_seconds) << '\n'
        << "total_seconds\t" << num(r.total_seconds) << '\n'
        << "violations\t" << r.violations.size() << '\n';
    for (const std::string& v : r.violations) out << "violation\t" << v << '\n';
  }
  {
    auto out = open("intervals.tsv");
    out << "from\tto\ttime\tadvected\tleft_domain\tcorrected\tvanished\tinconsistent\tfeatures"
           "\tsplits\thandoffs\tghosts\tadvect_seconds\tlabel_seconds\tsplit_seconds\n";
    for (const IntervalRecord& i : r.intervals)
      out << i.from_index << '\t' << i.to_index << '\t' << num(i.time) << '\t' << i.stats.advected
          << '\t' << i.stats.left_domain << '\t' << i.stats.corrected << '\t' << i.stats.vanished
          << '\t' << i.stats.inconsistent << '\t' << i.features << '\t' << i.splits << '\t'
          << i.handoffs << '\t' << i.ghosts << '\t' << num(i.advect_seconds) << '\t'
          << num(i.label_seconds) << '\t' << num(i.split_seconds) << '\n';
  }
  {
    auto out = open("contributions.tsv");
    write_contribution_table(res.contributions, out);
  }
  const ParticleSet& ps = res.particles;
  {
    auto out = open("epsilon.tsv");
    out << "seed\tx\ty\tz\tepsilon\talive\n";
    for (std::size_t i = 0; i < ps.size(); ++i)
      out << i << '\t' << num(ps.seeds[i].x()) << '\t' << num(ps.seeds[i].y()) << '\t'
          << num(ps.seeds[i].z()) << '\t' << num(ps.epsilon[i]) << '\t' << int(ps.alive[i]) << '\n';
  }
  {
    auto out = open("labels.tsv");
    out << "seed\tinitial\tfinal\n";
    for (std::size_t i = 0; i < ps.size(); ++i)
      out << i << '\t' << res.initial.labels[i] << '\t' << res.final_labels.labels[i] << '\n';
  }
  {
    auto out = open("splits.tsv");
    out << "time\tinitial\tprevious\tnext\n";
    for (const SplitEvent& s : res.splits) {
      out << num(s.time) << '\t' << s.initial << '\t' << s.previous << '\t';
      for (std::size_t i = 0; i < s.next.size(); ++i) out << (i ? "," : "") << s.next[i];
      out << '\n';
    }
  }
  {
    auto out = open("trails.tsv");
    out << "time\tseed\tx\ty\tz\n";
    for (const TrailSnapshot& t : ps.trail)
      for (std::size_t i = 0; i < t.positions.size(); ++i)
        out << num(t.time) << '\t' << i << '\t' << num(t.positions[i].x()) << '\t'
            << num(t.positions[i].y()) << '\t' << num(t.positions[i].z()) << '\n';
  }
  {
    auto out = open("config.txt");
    write_config(config, out);
  }
  export_meshes(res.meshes, dir / "meshes");
}

void summarize_run(const fs::path& dir, std::ostream& out) {
  std::ifstream report(dir / "report.tsv");
  if (!report) throw std::runtime_error("no report.tsv in " + dir.string());
  std::string line;
  std::getline(report, line);
  out << "run " << dir.string() << '\n';
  while (std::getline(report, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    out << "  " << line.substr(0, tab) << ": " << line.substr(tab + 1) << '\n';
  }
  std::ifstream table_in(dir / "contributions.tsv");
  if (table_in) {
    const ContributionTable table = read_contribution_table(table_in);
    out << "contributions (initial -> final: seeds, volume)\n";
    for (const ContributionRow& row : table.rows)
      out << "  " << row.initial << " -> " << row.target << ": " << row.count << ", "
          << num(row.volume) << '\n';
  }
}

}  // namespace fsep
