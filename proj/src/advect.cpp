#include "fsep/advect.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fsep/parallel.hpp"

namespace fsep {

CorrectorMode parse_corrector_mode(std::string_view name) {
  if (name == "off") return CorrectorMode::Off;
  if (name == "stages-2-3") return CorrectorMode::Stages23;
  if (name == "full") return CorrectorMode::Full;
  throw std::invalid_argument("unknown corrector mode '" + std::string(name) + "'");
}

std::string_view to_string(CorrectorMode mode) {
  switch (mode) {
    case CorrectorMode::Off: return "off";
    case CorrectorMode::Stages23: return "stages-2-3";
    case CorrectorMode::Full: return "full";
  }
  return "?";
}

void AdvectionConfig::validate() const {
  if (refinement < 0) throw std::invalid_argument("refinement must be >= 0");
  if (refinement > 8) throw std::invalid_argument("refinement above 8 is not supported");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (trail_stride < 1) throw std::invalid_argument("trail stride must be >= 1");
}

void ParticleSet::push_back(const Vec3& seed, const Index3& lattice_coord, double volume) {
  seeds.push_back(seed);
  lattice.push_back(lattice_coord);
  seed_volume.push_back(volume);
  positions.push_back(seed);
  alive.push_back(1);
  label.push_back(-1);
  epsilon.push_back(0.0);
}

ParticleSet seed_particles(const PhaseClassifier& phase, int refinement, const Index3& begin,
                           const Index3& end) {
  if (refinement < 0) throw std::invalid_argument("refinement must be >= 0");
  const TimeStep& step = phase.step();
  const RectilinearGrid& g = step.grid();
  const int per_axis = 1 << refinement;
  const double per_cell = static_cast<double>(per_axis) * per_axis * per_axis;

  ParticleSet ps;
  ps.refinement = refinement;
  for (int k = begin.z(); k < end.z(); ++k)
    for (int j = begin.y(); j < end.y(); ++j)
      for (int i = begin.x(); i < end.x(); ++i) {
    const Index3 cell(i, j, k);
    const double f = step.f(g.flat(cell));
    if (!(f > phase.tau())) continue;
    const Vec3 lo = g.cell_lo(cell);
    const Vec3 size = g.cell_size(cell);
    const double volume = g.cell_volume(cell) / per_cell;
    const bool pure = f >= 1.0;
    for (int sz = 0; sz < per_axis; ++sz)
      for (int sy = 0; sy < per_axis; ++sy)
        for (int sx = 0; sx < per_axis; ++sx) {
          const Vec3 p = lo + Vec3((sx + 0.5) / per_axis * size.x(), (sy + 0.5) / per_axis * size.y(),
                                   (sz + 0.5) / per_axis * size.z());
          if (!pure && !phase.is_liquid(p, cell)) continue;
          ps.push_back(p, cell * per_axis + Index3(sx, sy, sz), volume);
        }
      }
  return ps;
}

ParticleSet seed_particles(const PhaseClassifier& phase, int refinement) {
  return seed_particles(phase, refinement, Index3::Zero(), phase.step().grid().dims());
}

ParticleSet seed_particles(const TimeStep& step, int refinement, double tau) {
  return seed_particles(PhaseClassifier(step, tau), refinement);
}

std::optional<Vec3> integrate_rk4(const TimeStep& from, const TimeStep& to, const Vec3& x,
                                  int substeps) {
  const TimeStep& early = from.time <= to.time ? from : to;
  const TimeStep& late = from.time <= to.time ? to : from;
  const double t0 = from.time, t1 = to.time;
  const RectilinearGrid& g = from.grid();
  auto at = [&](double t) { return std::clamp(t, early.time, late.time); };
  auto vel = [&](const Vec3& p, double t) { return sample_velocity(early, late, p, at(t)); };

  Vec3 p = x;
  for (int s = 0; s < substeps; ++s) {
    const double ta = t0 + (t1 - t0) * s / substeps;
    const double tb = t0 + (t1 - t0) * (s + 1) / substeps;
    const double h = tb - ta;
    const double tm = ta + 0.5 * h;
    const Vec3 k1 = vel(p, ta);
    const Vec3 k2 = vel(p + 0.5 * h * k1, tm);
    const Vec3 k3 = vel(p + 0.5 * h * k2, tm);
    const Vec3 k4 = vel(p + h * k3, tb);
    p += h * ((k1 + 2.0 * (k2 + k3) + k4) / 6.0);
    if (!locate_cell(g, p)) return std::nullopt;
  }
  return p;
}

void NeighborIndex::add(std::size_t id, const Vec3& before, const Vec3& after, bool valid_after) {
  if (!valid_after) return;
  const auto cell = locate_cell(*grid_, before);
  if (!cell) return;
  buckets_[grid_->flat(*cell)].push_back({id, before, after});
}

const NeighborIndex::Entry* NeighborIndex::nearest(const Index3& cell, const Vec3& before,
                                                   std::size_t self) const {
  const Entry* best = nullptr;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const Index3 c = cell + Index3(dx, dy, dz);
        if (!grid_->contains(c)) continue;
        const auto it = buckets_.find(grid_->flat(c));
        if (it == buckets_.end()) continue;
        for (const Entry& e : it->second) {
          if (e.id == self) continue;
          const double d2 = (e.before - before).squaredNorm();
          if (d2 < best_d2 || (d2 == best_d2 && best && e.id < best->id)) {
            best = &e;
            best_d2 = d2;
          }
        }
      }
  return best;
}

Vec3 enter_box(const Vec3& x, const Vec3& lo, const Vec3& hi, double inset) {
  const Vec3 target = 0.5 * (lo + hi);
  const Vec3 d = target - x;
  double t_enter = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) continue;
    double t0 = (lo[a] - x[a]) / d[a];
    double t1 = (hi[a] - x[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
  }
  t_enter = std::min(t_enter, 1.0);
  const Vec3 p = x + t_enter * d;
  const Vec3 to_center = target - p;
  const double len = to_center.norm();
  if (len <= inset) return target;
  return p + (inset / len) * to_center;
}

namespace {

Index3 clamp_cell(const RectilinearGrid& g, const Vec3& x) {
  if (auto c = locate_cell(g, x)) return *c;
  const Vec3 clamped = x.cwiseMax(g.lo()).cwiseMin(g.hi());
  if (auto c = locate_cell(g, clamped)) return *c;
  return Index3::Zero();
}

// Nearest cell (by center distance) admitting liquid, searched in growing
// Chebyshev rings; the first non-empty ring wins.
std::optional<Index3> nearest_liquid_cell(const PhaseClassifier& phase, const Vec3& x) {
  const RectilinearGrid& g = phase.step().grid();
  const Index3 origin = clamp_cell(g, x);
  const Index3 dims = g.dims();
  const int max_ring = dims.maxCoeff();
  for (int r = 0; r <= max_ring; ++r) {
    std::optional<Index3> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_flat = 0;
    const Index3 lo = (origin.array() - r).max(0);
    const Index3 hi = (origin.array() + r).min(dims.array() - 1);
    for (int k = lo.z(); k <= hi.z(); ++k)
      for (int j = lo.y(); j <= hi.y(); ++j)
        for (int i = lo.x(); i <= hi.x(); ++i) {
          const Index3 c(i, j, k);
          if ((c - origin).cwiseAbs().maxCoeff() != r) continue;
          const std::size_t flat = g.flat(c);
          if (!phase.admits_liquid(flat)) continue;
          const double d2 = (g.cell_center(c) - x).squaredNorm();
          if (d2 < best_d2 || (d2 == best_d2 && flat < best_flat)) {
            best = c;
            best_d2 = d2;
            best_flat = flat;
          }
        }
    if (best) return best;
  }
  return std::nullopt;
}

constexpr double kInset = 1e-9;  // relative to the local cell size

}  // namespace

Correction correct_particle(std::size_t id, const Vec3& before, const Vec3& after,
                            const NeighborIndex& neighbors, const PhaseClassifier& phase,
                            CorrectorMode mode) {
  Correction out;
  out.position = after;
  if (mode == CorrectorMode::Off || phase.is_liquid(after)) return out;
  const RectilinearGrid& g = phase.step().grid();

  // Stage 1: borrow the displacement of the nearest valid neighbor.
  Vec3 x1 = after;
  if (mode == CorrectorMode::Full) {
    if (const auto cell = locate_cell(g, before)) {
      if (const auto* n = neighbors.nearest(*cell, before, id)) x1 = before + (n->after - n->before);
    }
  }
  out.stage_distance[0] = (x1 - after).norm();

  // Stage 2: step into the nearest cell that can hold liquid.
  Vec3 x2 = x1;
  const auto cell1 = locate_cell(g, x1);
  if (!cell1 || !phase.admits_liquid(g.flat(*cell1))) {
    const auto target = nearest_liquid_cell(phase, x1);
    if (!target) {
      out.vanished = true;
      out.position = x1;
      return out;
    }
    const Vec3 lo = g.cell_lo(*target), hi = g.cell_hi(*target);
    x2 = enter_box(x1, lo, hi, kInset * (hi - lo).minCoeff());
  }
  out.stage_distance[1] = (x2 - x1).norm();

  // Stage 3: pull back onto the PLIC plane along the line to the corner.
  Vec3 x3 = x2;
  if (const auto cell2 = locate_cell(g, x2)) {
    if (const PlicPatch* patch = phase.patch(g.flat(*cell2)); patch && !patch->contains(x2)) {
      const double inset = kInset * g.cell_size(*cell2).minCoeff();
      const double l = std::max(patch->offset - inset, 0.5 * patch->offset);
      x3 = project_to_plane<double>(patch->normal, patch->corner, l, x2);
    }
  }
  out.stage_distance[2] = (x3 - x2).norm();
  out.position = x3;
  return out;
}

IntervalStats advance_interval(ParticleSet& ps, const TimeStep& from, const TimeStep& to,
                               const PhaseClassifier& to_phase, const AdvectionConfig& config,
                               int interval_index) {
  config.validate();
  const std::size_t n = ps.size();
  const std::vector<Vec3> before = ps.positions;
  std::vector<std::uint8_t> left(n, 0);

  parallel_for(n, [&](std::size_t i) {
    if (!ps.alive[i]) return;
    const auto p = integrate_rk4(from, to, before[i], config.substeps);
    if (p) {
      ps.positions[i] = *p;
    } else {
      left[i] = 1;
    }
  });

  IntervalStats stats;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ps.alive[i]) continue;
    ++stats.advected;
    if (left[i]) {
      ps.alive[i] = 0;
      ++stats.left_domain;
    }
  }

  if (config.corrector != CorrectorMode::Off) {
    std::vector<std::uint8_t> valid(n, 0);
    parallel_for(n, [&](std::size_t i) {
      valid[i] = ps.alive[i] && to_phase.is_liquid(ps.positions[i]);
    });
    NeighborIndex index(from.grid());
    if (config.corrector == CorrectorMode::Full)
      for (std::size_t i = 0; i < n; ++i)
        if (ps.alive[i]) index.add(i, before[i], ps.positions[i], valid[i]);

    std::vector<Correction> fixes(n);
    parallel_for(n, [&](std::size_t i) {
      if (!ps.alive[i] || valid[i]) return;
      fixes[i] = correct_particle(i, before[i], ps.positions[i], index, to_phase, config.corrector);
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (!ps.alive[i] || valid[i]) continue;
      ++stats.corrected;
      ps.epsilon[i] += fixes[i].displacement();
      ps.positions[i] = fixes[i].position;
      if (fixes[i].vanished) {
        ps.alive[i] = 0;
        ++stats.vanished;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    if (ps.alive[i] && !to_phase.is_liquid(ps.positions[i])) ++stats.inconsistent;

  if ((interval_index + 1) % config.trail_stride == 0)
    ps.trail.push_back({to.time, ps.positions});
  return stats;
}

IntervalStats advance_interval(ParticleSet& particles, const TimeStep& from, const TimeStep& to,
                               const AdvectionConfig& config, double tau, int interval_index) {
  const PhaseClassifier phase(to, tau);
  return advance_interval(particles, from, to, phase, config, interval_index);
}

std::vector<double> accumulated_displacement_field(const ParticleSet& particles) {
  return particles.epsilon;
}

}  // namespace fsep
