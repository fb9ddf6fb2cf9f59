#include <doctest.h>

#include <cmath>
#include <random>

#include "fsep/plic.hpp"
#include "support.hpp"

using namespace fsep;

namespace {

// Fraction of 64^3 subvoxel centers of the unit cube below the plane.
double subvoxel_fraction(const Vec3& n, const Vec3& a, double l) {
  constexpr int kN = 64;
  long inside = 0;
  for (int k = 0; k < kN; ++k)
    for (int j = 0; j < kN; ++j)
      for (int i = 0; i < kN; ++i) {
        const Vec3 x((i + 0.5) / kN, (j + 0.5) / kN, (k + 0.5) / kN);
        inside += (x - a).dot(n) <= l;
      }
  return static_cast<double>(inside) / (kN * kN * kN);
}

Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<double> g;
  Vec3 n;
  do n = Vec3(g(rng), g(rng), g(rng));
  while (n.norm() < 1e-3);
  return n.normalized();
}

// Row of three unit cells with the given fractions; the middle cell is the
// interface cell under test.
TimeStep row(double left, double mid, double right) {
  const auto g = fsep::test::box_grid(Index3(3, 1, 1), Vec3::Zero(), Vec3(3, 1, 1));
  TimeStep s;
  s.f = CellField(g, 1, std::vector<double>{left, mid, right});
  s.u = CellField(g, 3);
  return s;
}

}  // namespace

TEST_CASE("solve_offset on the unit cell") {
  const Vec3 one = Vec3::Ones();
  CHECK(solve_offset(one, Vec3(1, 0, 0), 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  const Vec3 diag = Vec3::Ones().normalized();
  CHECK(solve_offset(one, diag, 0.5) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-12));
  // Corner tetrahedron: V = c^3 / 6 with c = sqrt(3) l.
  CHECK(solve_offset(one, diag, 1.0 / 48.0) ==
        doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-12));
}

TEST_CASE("truncated_volume limits") {
  const Vec3 lo = Vec3::Zero(), hi = Vec3::Ones();
  const Vec3 n = Vec3(0.3, -0.5, 0.8).normalized();
  const Vec3 a = deepest_corner(lo, hi, n);
  CHECK(truncated_volume(lo, hi, n, a, 0.0) == 0.0);
  const double ext = projected_extent<double>(hi - lo, n);
  CHECK(truncated_volume(lo, hi, n, a, ext) == 1.0);
  CHECK(truncated_volume(lo, hi, n, a, ext * 1.5) == 1.0);
}

TEST_CASE("truncated_volume matches subvoxel counting") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Vec3 n = random_unit(rng);
    const Vec3 a = deepest_corner<double>(Vec3::Zero(), Vec3::Ones(), n);
    const double l = u(rng) * projected_extent<double>(Vec3::Ones(), n);
    const double exact = truncated_volume<double>(Vec3::Zero(), Vec3::Ones(), n, a, l);
    CHECK(std::abs(exact - subvoxel_fraction(n, a, l)) <= 2e-4);
  }
}

TEST_CASE("truncated_volume handles axis-aligned and planar normals") {
  CHECK(subvoxel_fraction(Vec3(1, 0, 0), Vec3::Zero(), 0.3) ==
        doctest::Approx(truncated_volume<double>(Vec3::Zero(), Vec3::Ones(), Vec3(1, 0, 0),
                                                 Vec3::Zero(), 0.3))
            .epsilon(1e-2));
  // Planar normal: the cut is the region x + y <= s of the unit square.
  const Vec3 n = Vec3(1, 1, 0).normalized();
  for (double l : {0.1, 0.5, 0.7, 1.2}) {
    const double s = l * std::sqrt(2.0);
    const double area = s <= 1.0 ? 0.5 * s * s : 1.0 - 0.5 * (2.0 - s) * (2.0 - s);
    CHECK(truncated_volume<double>(Vec3::Zero(), Vec3::Ones(), n, Vec3::Zero(), l) ==
          doctest::Approx(area).epsilon(1e-12));
  }
}

TEST_CASE("truncated_volume is monotone, symmetric and inverted by solve_offset") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0), s(0.2, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 n = random_unit(rng);
    const Vec3 size(s(rng), s(rng), s(rng));
    const Vec3 lo(-0.5, 1.0, 2.0), hi = lo + size;
    const Vec3 a = deepest_corner(lo, hi, n);
    const double ext = projected_extent(size, n);
    double prev = 0.0;
    for (int i = 1; i <= 20; ++i) {
      const double v = truncated_volume(lo, hi, n, a, ext * i / 20.0);
      CHECK(v >= prev - 1e-15);
      prev = v;
      const double mirrored = truncated_volume(lo, hi, n, a, ext * (20 - i) / 20.0);
      CHECK(v + mirrored == doctest::Approx(1.0).epsilon(1e-12));
    }
    const double f = u(rng);
    const double l = solve_offset(size, n, f);
    CHECK(std::abs(truncated_volume(lo, hi, n, a, l) - f) <= 1e-12);
  }
}

TEST_CASE("geometry templates instantiate for float") {
  const Vector3<float> n = Vector3<float>(1, 2, 2).normalized();
  const float l = solve_offset<float>(Vector3<float>::Ones(), n, 0.3f, 40);
  const float v = truncated_volume<float>(Vector3<float>::Zero(), Vector3<float>::Ones(), n,
                                          Vector3<float>::Zero(), l);
  CHECK(v == doctest::Approx(0.3f).epsilon(1e-4));
}

TEST_CASE("project_to_plane") {
  CHECK((project_to_plane<double>(Vec3(1, 0, 0), Vec3(0, 0.5, 0.5), 0.5, Vec3(1, 0.5, 0.5)) -
         Vec3(0.5, 0.5, 0.5))
            .norm() < 1e-15);
  const Vec3 on(0.5, 0.2, 0.9);
  CHECK(project_to_plane<double>(Vec3(1, 0, 0), Vec3(0, 0.5, 0.5), 0.5, on) == on);

  const Vec3 n = Vec3(1, 1, 0).normalized(), a = Vec3::Zero(), x(1, 1, 1);
  const double l = std::sqrt(2.0) / 2.0;
  const Vec3 p = project_to_plane(n, a, l, x);
  CHECK((p - a).dot(n) == doctest::Approx(l).epsilon(1e-14));
  CHECK((p - a).cross(x - a).norm() < 1e-14);
  CHECK((p - Vec3(0.5, 0.5, 0.5)).norm() < 1e-14);
  CHECK_THROWS_AS(project_to_plane(n, a, l, Vec3(-1, -1, 0)), std::domain_error);
}

TEST_CASE("reconstruct_patch normal, corner and offset") {
  const TimeStep s = row(1.0, 0.5, 0.0);
  const PlicPatch p = reconstruct_patch(s, Index3(1, 0, 0));
  CHECK((p.normal - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK(p.corner.x() == 1.0);
  CHECK(p.offset == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(reconstruct_patch(s, Index3(0, 0, 0)), std::invalid_argument);

  const TimeStep flat = row(0.5, 0.5, 0.5);
  CHECK_THROWS_AS(reconstruct_patch(flat, Index3(1, 0, 0)), DegenerateNormal);
  CHECK_FALSE(try_reconstruct_patch(flat, Index3(1, 0, 0)).has_value());
}

TEST_CASE("is_liquid") {
  const TimeStep s = row(1.0, 0.5, 0.0);
  CHECK(is_liquid(s, Vec3(0.5, 0.5, 0.5)));
  CHECK_FALSE(is_liquid(s, Vec3(2.5, 0.5, 0.5)));
  // d = 0.75 > l = 0.5 is rejected, d = 0.25 accepted.
  CHECK_FALSE(is_liquid(s, Vec3(1.75, 0.5, 0.5)));
  CHECK(is_liquid(s, Vec3(1.25, 0.1, 0.9)));
  CHECK_FALSE(is_liquid(s, Vec3(1.25, 0.1, 0.9), 0.6));  // f <= tau
  CHECK_FALSE(is_liquid(s, Vec3(3.5, 0.5, 0.5)));

  // Degenerate gradient: liquid iff f > 0.5.
  CHECK_FALSE(is_liquid(row(0.5, 0.5, 0.5), Vec3(1.5, 0.5, 0.5)));
  CHECK(is_liquid(row(0.6, 0.6, 0.6), Vec3(1.5, 0.5, 0.5)));
}

TEST_CASE("PhaseClassifier agrees with is_liquid") {
  const auto g = fsep::test::unit_grid(12);
  const Vec3 c(0.47, 0.52, 0.5);
  const TimeStep s = fsep::test::make_step(g, 0.0, [&](const Vec3& x) {
    return std::clamp(0.5 - ((x - c).norm() - 0.3) * 12.0, 0.0, 1.0);
  });
  const PhaseClassifier phase(s, 0.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    CHECK(phase.is_liquid(x) == is_liquid(s, x));
  }
  for (std::size_t cell = 0; cell < g->cell_count(); ++cell) {
    const double f = s.f(cell);
    if (f > 0.0 && f < 1.0) CHECK(phase.admits_liquid(cell));
    if (f == 0.0) CHECK_FALSE(phase.admits_liquid(cell));
  }
}

TEST_CASE("patch volume matches the cell fraction") {
  const auto g = fsep::test::box_grid(Index3(4, 4, 4), Vec3::Zero(), Vec3(1, 2, 0.5));
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int t = 0; t < 100; ++t) {
    const Vec3 n = random_unit(rng);
    const double f = u(rng);
    const Index3 cell(1, 2, 3);
    const PlicPatch p = make_patch(*g, cell, n, f);
    CHECK(std::abs(truncated_volume(g->cell_lo(cell), g->cell_hi(cell), p.normal, p.corner,
                                    p.offset) -
                   f) <= 1e-6);
  }
}
