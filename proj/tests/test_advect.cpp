#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fsep/advect.hpp"
#include "fsep/dataset_io.hpp"
#include "support.hpp"

using namespace fsep;
using fsep::test::box_grid;
using fsep::test::make_step;

namespace {

TimeStep row(double left, double mid, double right) {
  const auto g = box_grid(Index3(3, 1, 1), Vec3::Zero(), Vec3(3, 1, 1));
  TimeStep s;
  s.f = CellField(g, 1, std::vector<double>{left, mid, right});
  s.u = CellField(g, 3);
  return s;
}

TimeStep constant_flow(const GridPtr& g, double time, const Vec3& u) {
  return make_step(g, time, [](const Vec3&) { return 1.0; }, [&](const Vec3&) { return u; });
}

// Position after one period of rigid rotation sampled over `intervals` data
// intervals, one RK4 step each.
double rotation_error(int intervals) {
  const auto g = fsep::test::unit_grid(16);
  const Vec3 c(0.5, 0.5, 0.5);
  const double omega = 2.0 * std::numbers::pi;
  auto u = [&](const Vec3& x) { return Vec3(-omega * (x.y() - c.y()), omega * (x.x() - c.x()), 0.0); };
  const Vec3 start(0.7, 0.5, 0.5);
  Vec3 p = start;
  for (int k = 0; k < intervals; ++k) {
    const auto a = make_step(g, double(k) / intervals, [](const Vec3&) { return 1.0; }, u);
    const auto b = make_step(g, double(k + 1) / intervals, [](const Vec3&) { return 1.0; }, u);
    p = *integrate_rk4(a, b, p, 1);
  }
  return (p - start).norm();
}

}  // namespace

TEST_CASE("seeding in pure cells") {
  const auto g = box_grid(Index3(1, 1, 1), Vec3::Zero(), Vec3(2, 2, 2));
  TimeStep s;
  s.f = CellField(g, 1, 1.0);
  s.u = CellField(g, 3);
  const ParticleSet r0 = seed_particles(s, 0);
  REQUIRE(r0.size() == 1);
  CHECK(r0.seeds[0] == Vec3(1, 1, 1));
  CHECK(r0.seed_volume[0] == 8.0);
  const ParticleSet r2 = seed_particles(s, 2);
  CHECK(r2.size() == 64);
  CHECK(r2.seed_volume[0] == doctest::Approx(8.0 / 64.0));
}

TEST_CASE("seed count law on a fully liquid block") {
  const auto g = fsep::test::unit_grid(8);
  const auto s = make_step(g, 0.0, [](const Vec3&) { return 1.0; });
  for (int r = 0; r <= 2; ++r) CHECK(seed_particles(s, r).size() == 512u * (1u << (3 * r)));
}

TEST_CASE("seeding in an interface cell keeps the liquid half") {
  const ParticleSet ps = seed_particles(row(0.0, 0.5, 1.0), 1);
  std::size_t mid = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Vec3& x = ps.seeds[i];
    if (x.x() > 1.0 && x.x() < 2.0) {
      ++mid;
      CHECK(x.x() > 1.5);  // liquid sits on the right here
    }
  }
  CHECK(mid == 4);
  CHECK(ps.size() == 12);
  for (std::size_t i = 0; i < ps.size(); ++i)
    CHECK(ps.lattice[i] == Index3(int(std::floor(ps.seeds[i].x() * 2)),
                                  int(std::floor(ps.seeds[i].y() * 2)),
                                  int(std::floor(ps.seeds[i].z() * 2))));
}

TEST_CASE("box-restricted seeding partitions the full seeding") {
  const auto g = fsep::test::unit_grid(10);
  const auto s = make_step(g, 0.0, [](const Vec3& x) {
    return std::clamp(0.5 - ((x - Vec3(0.4, 0.5, 0.55)).norm() - 0.3) * 10.0, 0.0, 1.0);
  });
  const PhaseClassifier phase(s, 0.0);
  const ParticleSet all = seed_particles(phase, 1);
  const ParticleSet a = seed_particles(phase, 1, Index3::Zero(), Index3(4, 10, 10));
  const ParticleSet b = seed_particles(phase, 1, Index3(4, 0, 0), Index3(10, 10, 10));
  CHECK(a.size() + b.size() == all.size());
  for (const Vec3& x : a.seeds) CHECK(x.x() < 0.4);
}

TEST_CASE("RK4 is exact for a constant field") {
  const auto g = box_grid(Index3(4, 4, 4), Vec3::Zero(), Vec3(4, 4, 4));
  const auto a = constant_flow(g, 0.0, Vec3(1, 0, 0));
  const auto b = constant_flow(g, 0.5, Vec3(1, 0, 0));
  const auto p = integrate_rk4(a, b, Vec3(1.25, 2.0, 3.0), 1);
  REQUIRE(p);
  CHECK(*p == Vec3(1.75, 2.0, 3.0));
  const auto q = integrate_rk4(a, b, Vec3(1.25, 2.0, 3.0), 3);
  REQUIRE(q);
  CHECK((*q - Vec3(1.75, 2.0, 3.0)).norm() < 1e-15);
  CHECK_FALSE(integrate_rk4(a, b, Vec3(3.75, 2.0, 2.0), 1).has_value());
}

TEST_CASE("backward integration on a constant field reproduces the seeds") {
  const auto g = box_grid(Index3(4, 4, 4), Vec3::Zero(), Vec3(4, 4, 4));
  const auto a = constant_flow(g, 0.0, Vec3(1, 0.5, 0));
  const auto b = constant_flow(g, 0.5, Vec3(1, 0.5, 0));
  ParticleSet ps = seed_particles(a, 0);
  AdvectionConfig fwd;
  fwd.corrector = CorrectorMode::Off;
  ps.positions.assign(ps.seeds.begin(), ps.seeds.end());
  for (auto& x : ps.positions) x -= Vec3(0.5, 0.25, 0.0);  // stay inside after the step
  const std::vector<Vec3> start = ps.positions;
  advance_interval(ps, a, b, fwd, 0.0, 0);
  AdvectionConfig bwd = fwd;
  bwd.direction = TimeDirection::Backward;
  advance_interval(ps, b, a, bwd, 0.0, 1);
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps.alive[i]) CHECK(ps.positions[i] == start[i]);
}

TEST_CASE("RK4 on rigid rotation converges with fourth order") {
  const double e1 = rotation_error(16), e2 = rotation_error(32), e3 = rotation_error(64);
  CHECK(e1 < 1e-3);
  for (double order : {std::log2(e1 / e2), std::log2(e2 / e3)}) {
    CHECK(order >= 3.5);
    CHECK(order <= 4.5);
  }
}

TEST_CASE("enter_box agrees with a bisection oracle") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 4.0);
  const Vec3 lo(0.0, 0.5, 1.0), hi(1.0, 1.5, 1.25);
  const Vec3 center = 0.5 * (lo + hi);
  auto inside = [&](const Vec3& p) {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  };
  for (int t = 0; t < 500; ++t) {
    const Vec3 x(u(rng), u(rng), u(rng));
    if (inside(x)) continue;
    double a = 0.0, b = 1.0;
    for (int i = 0; i < 80; ++i) {
      const double m = 0.5 * (a + b);
      (inside(x + m * (center - x)) ? b : a) = m;
    }
    const Vec3 oracle = x + b * (center - x);
    const Vec3 p = enter_box(x, lo, hi, 0.0);
    CHECK((p - oracle).norm() < 1e-9);
    const Vec3 q = enter_box(x, lo, hi, 1e-6);
    CHECK((q.array() > lo.array()).all());
    CHECK((q.array() < hi.array()).all());
  }
}

TEST_CASE("corrector stage 2 moves into the nearest liquid cell") {
  const TimeStep s = row(1.0, 0.0, 0.0);
  const PhaseClassifier phase(s, 0.0);
  const NeighborIndex none(s.grid());
  const Vec3 x(1.5, 0.5, 0.5);
  for (CorrectorMode mode : {CorrectorMode::Stages23, CorrectorMode::Full}) {
    const Correction c = correct_particle(0, x, x, none, phase, mode);
    CHECK_FALSE(c.vanished);
    CHECK(c.position.x() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(c.position.x() < 1.0);
    CHECK(c.stage_distance[0] == 0.0);
    CHECK(c.displacement() == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(phase.is_liquid(c.position));
  }
}

TEST_CASE("corrector stage 3 projects onto the patch towards the attachment corner") {
  const TimeStep s = row(1.0, 0.5, 0.0);
  const PhaseClassifier phase(s, 0.0);
  const NeighborIndex none(s.grid());
  SUBCASE("on the corner axis the distance is the gap") {
    const Vec3 x(1.75, 0.0, 0.0);
    const Correction c = correct_particle(0, x, x, none, phase, CorrectorMode::Stages23);
    CHECK(c.stage_distance[1] == 0.0);
    CHECK(c.displacement() == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(phase.is_liquid(c.position));
  }
  SUBCASE("off axis the move follows x - a") {
    const Vec3 x(1.75, 0.5, 0.5), a(1.0, 0.0, 0.0);
    const Correction c = correct_particle(0, x, x, none, phase, CorrectorMode::Stages23);
    CHECK(c.displacement() == doctest::Approx((x - a).norm() / 3.0).epsilon(1e-8));
    CHECK((c.position - a).cross(x - a).norm() < 1e-12);
    CHECK(phase.is_liquid(c.position));
  }
}

TEST_CASE("corrector stage 1 borrows the nearest valid neighbor's displacement") {
  const auto g = box_grid(Index3(3, 1, 1), Vec3::Zero(), Vec3(3, 1, 1));
  TimeStep s;
  s.f = CellField(g, 1, std::vector<double>{1.0, 1.0, 0.0});
  s.u = CellField(g, 3);
  const PhaseClassifier phase(s, 0.0);
  NeighborIndex index(*g);
  // Particle 1 moved by +0.25 and is valid; particle 2 is farther away.
  index.add(1, Vec3(0.8, 0.5, 0.5), Vec3(1.05, 0.5, 0.5), true);
  index.add(2, Vec3(0.1, 0.5, 0.5), Vec3(0.2, 0.5, 0.5), true);
  index.add(3, Vec3(0.9, 0.5, 0.5), Vec3(2.5, 0.5, 0.5), false);
  const Vec3 before(1.0, 0.5, 0.5), after(2.2, 0.5, 0.5);
  const Correction c = correct_particle(0, before, after, index, phase, CorrectorMode::Full);
  CHECK((c.position - Vec3(1.25, 0.5, 0.5)).norm() < 1e-15);
  CHECK(c.stage_distance[0] == doctest::Approx(0.95));
  CHECK(c.stage_distance[1] == 0.0);
  CHECK(c.stage_distance[2] == 0.0);
}

TEST_CASE("corrector reports a vanished particle when no cell admits liquid") {
  const TimeStep s = row(0.0, 0.0, 0.0);
  const PhaseClassifier phase(s, 0.0);
  const NeighborIndex none(s.grid());
  CHECK(correct_particle(0, Vec3(1.5, 0.5, 0.5), Vec3(1.5, 0.5, 0.5), none, phase,
                         CorrectorMode::Full)
            .vanished);
}

TEST_CASE("advance_interval on split-sphere") {
  auto sc = default_scenario(ScenarioKind::SplitSphere, 24, 5);
  const auto ds = generate_scenario(sc);
  auto run = [&](CorrectorMode mode, std::vector<std::vector<double>>* eps_history) {
    AdvectionConfig cfg;
    cfg.refinement = 1;
    cfg.corrector = mode;
    cfg.trail_stride = 2;
    ParticleSet ps = seed_particles(ds.steps[0], 1);
    std::vector<IntervalStats> stats;
    for (int k = 0; k + 1 < int(ds.steps.size()); ++k) {
      stats.push_back(advance_interval(ps, ds.steps[k], ds.steps[k + 1], cfg, 0.0, k));
      if (eps_history) eps_history->push_back(ps.epsilon);
    }
    return std::make_pair(ps, stats);
  };

  SUBCASE("corrector off leaves epsilon at zero and strays inconsistent") {
    const auto [ps, stats] = run(CorrectorMode::Off, nullptr);
    for (double e : ps.epsilon) CHECK(e == 0.0);
    std::size_t inconsistent = 0;
    for (const auto& s : stats) inconsistent += s.inconsistent;
    CHECK(inconsistent > 0);
  }
  SUBCASE("full corrector keeps every particle in the liquid and epsilon monotone") {
    std::vector<std::vector<double>> hist;
    const auto [ps, stats] = run(CorrectorMode::Full, &hist);
    for (const auto& s : stats) CHECK(s.inconsistent == 0);
    for (std::size_t k = 1; k < hist.size(); ++k)
      for (std::size_t i = 0; i < hist[k].size(); ++i) CHECK(hist[k][i] >= hist[k - 1][i]);
    CHECK(*std::max_element(ps.epsilon.begin(), ps.epsilon.end()) > 0.0);
    CHECK(ps.trail.size() == 2);
    CHECK(accumulated_displacement_field(ps) == ps.epsilon);
  }
  SUBCASE("runs are bitwise deterministic") {
    const auto a = run(CorrectorMode::Full, nullptr).first;
    const auto b = run(CorrectorMode::Full, nullptr).first;
    CHECK(a.positions == b.positions);
    CHECK(a.epsilon == b.epsilon);
  }
}

TEST_CASE("advection config validation") {
  AdvectionConfig c;
  c.substeps = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.trail_stride = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_corrector_mode("stages-2-3") == CorrectorMode::Stages23);
  CHECK(to_string(CorrectorMode::Full) == "full");
  CHECK_THROWS_AS(parse_corrector_mode("partial"), std::invalid_argument);
}
