#include <doctest.h>

#include <sstream>

#include "fsep/segment.hpp"
#include "support.hpp"

using namespace fsep;
using namespace fsep::test;

namespace {

TimeStep row(std::vector<double> f) {
  const int n = static_cast<int>(f.size());
  const auto g = box_grid(Index3(n, 1, 1), Vec3::Zero(), Vec3(n, 1, 1));
  TimeStep s;
  s.f = CellField(g, 1, std::move(f));
  s.u = CellField(g, 3);
  return s;
}

SeedLabeling labeling(std::vector<int> l, double t = 0.0) { return {t, std::move(l)}; }

}  // namespace

TEST_CASE("assign_label") {
  const TimeStep s = row({0.0, 0.4, 1.0, 0.0, 0.0, 1.0});
  const double tau = 0.5;
  const LabelField lf = label_features(s, tau);
  REQUIRE(lf.count == 2);
  CHECK(assign_label(Vec3(2.5, 0.5, 0.5), lf, s, tau) == 0);
  CHECK(assign_label(Vec3(5.5, 0.5, 0.5), lf, s, tau) == 1);
  CHECK(assign_label(Vec3(0.2, 0.5, 0.5), lf, s, tau) == -1);
  // Interpolated f at x = 1.9 is 0.4 + 0.6 * 0.4 = 0.64 > tau: walk up-gradient.
  CHECK(assign_label(Vec3(1.9, 0.5, 0.5), lf, s, tau) == 0);
  // At x = 1.1 it is 0.24 <= tau.
  CHECK(assign_label(Vec3(1.1, 0.5, 0.5), lf, s, tau) == -1);
  CHECK(assign_label(Vec3(7.0, 0.5, 0.5), lf, s, tau) == -1);
}

TEST_CASE("assign_labels marks dead particles invalid") {
  const TimeStep s = row({1.0, 1.0});
  const LabelField lf = label_features(s);
  ParticleSet ps = seed_particles(s, 0);
  REQUIRE(ps.size() == 2);
  ps.alive[1] = 0;
  const SeedLabeling sl = assign_labels(ps, lf, s);
  CHECK(sl.labels == std::vector<int>{0, -1});
  CHECK(sl.time == s.time);
}

TEST_CASE("contribution table") {
  const std::vector<double> vol{1.0, 1.0, 2.0, 0.5, 0.25};
  SUBCASE("identity mapping is diagonal") {
    const auto l = labeling({0, 0, 1, 1, 2});
    const ContributionTable t = contribution_table(l, l, vol);
    REQUIRE(t.rows.size() == 3);
    for (const auto& r : t.rows) CHECK(r.initial == r.target);
    CHECK(t.count(1, 1) == 2);
    CHECK(t.rows[1].volume == 2.5);
    CHECK(t.total_count() == 5);
  }
  SUBCASE("all dead") {
    const ContributionTable t =
        contribution_table(labeling({-1, -1, -1, -1, -1}), labeling({0, 0, 1, 1, 2}), vol);
    for (const auto& r : t.rows) CHECK(r.target == -1);
    CHECK(t.total_count() == 5);
  }
  SUBCASE("split and round-trip through text") {
    const ContributionTable t =
        contribution_table(labeling({0, 1, 1, -1, 2}), labeling({0, 0, 0, 0, 1}), vol);
    CHECK(t.count(0, 0) == 1);
    CHECK(t.count(0, 1) == 2);
    CHECK(t.count(0, -1) == 1);
    CHECK(t.count(1, 2) == 1);
    CHECK(t.count(1, 0) == 0);
    std::stringstream ss;
    write_contribution_table(t, ss);
    CHECK(ss.str().rfind("i\tj\tcount\tvolume\n", 0) == 0);
    CHECK(read_contribution_table(ss) == t);
  }
  CHECK_THROWS(contribution_table(labeling({0}), labeling({0, 0}), vol));
}

TEST_CASE("detect_splits") {
  const auto init = labeling({0, 0, 0, 0, 1, 1});
  CHECK(detect_splits(init, init, init).empty());

  const auto prev = labeling({0, 0, 0, 0, 1, 1}, 1.0);
  const auto next = labeling({2, 0, 2, -1, 1, 1}, 2.0);
  const auto splits = detect_splits(init, prev, next);
  REQUIRE(splits.size() == 1);
  CHECK(splits[0].initial == 0);
  CHECK(splits[0].previous == 0);
  CHECK(splits[0].next == std::vector<int>{0, 2});
  CHECK(splits[0].time == 2.0);

  // A group losing seeds to the invalid label only is not a split.
  CHECK(detect_splits(init, prev, labeling({0, 0, -1, -1, 1, 1})).empty());
  // Seeds invalid at t_k form no group.
  CHECK(detect_splits(init, labeling({-1, -1, 0, 0, 1, 1}), labeling({3, 4, 0, 0, 1, 1})).empty());
}
