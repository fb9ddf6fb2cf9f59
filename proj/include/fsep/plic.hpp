#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <unordered_map>

#include "fsep/grid.hpp"

namespace fsep {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

// Raised when the fraction gradient vanishes in an interface cell.
class DegenerateNormal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Fraction of the unit cube {y in [0,1]^3 : sum c_i y_i <= l}, c_i >= 0.
template <typename Scalar>
Scalar unit_cube_cut(Scalar c0, Scalar c1, Scalar c2, Scalar l) {
  using std::max;
  Scalar c[3] = {c0, c1, c2};
  const Scalar total = c0 + c1 + c2;
  if (l <= Scalar(0)) return Scalar(0);
  if (l >= total) return Scalar(1);
  // Evaluate on the lower half and mirror; keeps the cubic cancellation small.
  if (l > Scalar(0.5) * total) return Scalar(1) - unit_cube_cut(c0, c1, c2, total - l);

  // Axes whose extent is negligible relative to the others are dropped; the
  // cut is then prismatic along them.
  const Scalar cutoff = Scalar(1e-7) * total;
  Scalar k[3];
  int dim = 0;
  for (Scalar ci : c)
    if (ci > cutoff) k[dim++] = ci;
  std::sort(k, k + dim);

  auto pos = [](Scalar v) { return v > Scalar(0) ? v : Scalar(0); };
  Scalar v;
  switch (dim) {
    case 1:
      v = l / k[0];
      break;
    case 2: {
      const Scalar a = pos(l - k[0]), b = pos(l - k[1]), ab = pos(l - k[0] - k[1]);
      v = (l * l - a * a - b * b + ab * ab) / (Scalar(2) * k[0] * k[1]);
      break;
    }
    default: {
      Scalar s = l * l * l;
      for (int i = 0; i < 3; ++i) s -= std::pow(pos(l - k[i]), 3);
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) s += std::pow(pos(l - k[i] - k[j]), 3);
      s -= std::pow(pos(l - total), 3);
      v = s / (Scalar(6) * k[0] * k[1] * k[2]);
      break;
    }
  }
  return std::clamp(v, Scalar(0), Scalar(1));
}

}  // namespace detail

// Corner of the box [lo, hi] with the smallest projection onto n. Corner
// index bits are (x, y, z); ties go to the lowest index.
template <typename Scalar>
Vector3<Scalar> deepest_corner(const Vector3<Scalar>& lo, const Vector3<Scalar>& hi,
                               const Vector3<Scalar>& n, int* index = nullptr) {
  Vector3<Scalar> best = lo;
  Scalar best_proj = n.dot(lo);
  int best_idx = 0;
  for (int c = 1; c < 8; ++c) {
    const Vector3<Scalar> p((c & 1) ? hi.x() : lo.x(), (c & 2) ? hi.y() : lo.y(),
                            (c & 4) ? hi.z() : lo.z());
    const Scalar proj = n.dot(p);
    if (proj < best_proj) {
      best = p;
      best_proj = proj;
      best_idx = c;
    }
  }
  if (index) *index = best_idx;
  return best;
}

// Projected extent of the box along unit n.
template <typename Scalar>
Scalar projected_extent(const Vector3<Scalar>& size, const Vector3<Scalar>& n) {
  return n.cwiseAbs().dot(size);
}

// Exact volume fraction of the box [lo, hi] inside {x : (x - a) . n <= l}.
template <typename Scalar>
Scalar truncated_volume(const Vector3<Scalar>& lo, const Vector3<Scalar>& hi,
                        const Vector3<Scalar>& n, const Vector3<Scalar>& a, Scalar l) {
  const Vector3<Scalar> size = hi - lo;
  const Vector3<Scalar> deepest = deepest_corner(lo, hi, n);
  const Scalar shifted = l + n.dot(a - deepest);
  return detail::unit_cube_cut(std::abs(n.x()) * size.x(), std::abs(n.y()) * size.y(),
                               std::abs(n.z()) * size.z(), shifted);
}

// Offset l such that the cut volume fraction matches f, by bisection.
template <typename Scalar>
Scalar solve_offset(const Vector3<Scalar>& size, const Vector3<Scalar>& n, Scalar f,
                    int max_iterations = 60) {
  const Scalar c0 = std::abs(n.x()) * size.x(), c1 = std::abs(n.y()) * size.y(),
               c2 = std::abs(n.z()) * size.z();
  Scalar lo = 0, hi = c0 + c1 + c2;
  Scalar mid = Scalar(0.5) * (lo + hi);
  for (int it = 0; it < max_iterations; ++it) {
    mid = Scalar(0.5) * (lo + hi);
    const Scalar v = detail::unit_cube_cut(c0, c1, c2, mid);
    if (v == f) break;
    if (v < f)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

// Intersection of the segment x -> a with the plane (p - a) . n = l.
// Throws std::domain_error when x is not on the far side of a along n.
template <typename Scalar>
Vector3<Scalar> project_to_plane(const Vector3<Scalar>& n, const Vector3<Scalar>& a, Scalar l,
                                 const Vector3<Scalar>& x) {
  const Vector3<Scalar> dir = x - a;
  const Scalar d = dir.dot(n);
  if (!(d > Scalar(0))) throw std::domain_error("segment does not cross the patch plane");
  if (d == l) return x;
  return a + (l / d) * dir;
}

struct PlicPatch {
  Index3 cell = Index3::Zero();
  Vec3 normal = Vec3::UnitX();  // unit, liquid -> gas
  Vec3 corner = Vec3::Zero();   // deepest liquid corner
  double offset = 0.0;          // plane distance from corner along normal

  double signed_depth(const Vec3& x) const { return (x - corner).dot(normal); }
  bool contains(const Vec3& x) const { return signed_depth(x) < offset; }
};

// Patch for an interface cell (0 < f < 1). Returns nullopt for a vanishing
// gradient; throws std::invalid_argument for a pure cell.
std::optional<PlicPatch> try_reconstruct_patch(const TimeStep& step, const Index3& cell);

// Same, but a vanishing gradient raises DegenerateNormal.
PlicPatch reconstruct_patch(const TimeStep& step, const Index3& cell);

// Patch from an explicit normal and fraction.
PlicPatch make_patch(const RectilinearGrid& grid, const Index3& cell, const Vec3& normal,
                     double f);

Vec3 project_to_patch(const PlicPatch& patch, const Vec3& x);

// Liquid-side test: pure cells by threshold, interface cells by PLIC.
// Degenerate interface cells count as liquid iff f > 0.5.
bool is_liquid(const TimeStep& step, const Vec3& x, double tau = 0.0);

// Per-step cache of interface patches, shared read-only by particle loops.
class PhaseClassifier {
 public:
  PhaseClassifier(const TimeStep& step, double tau);

  const TimeStep& step() const { return *step_; }
  double tau() const { return tau_; }

  bool is_liquid(const Vec3& x) const;
  bool is_liquid(const Vec3& x, const Index3& cell) const;

  // Interface patch, or nullptr for pure or degenerate cells.
  const PlicPatch* patch(std::size_t cell) const;

  // Whether any point of the cell can classify as liquid.
  bool admits_liquid(std::size_t cell) const;

 private:
  const TimeStep* step_;
  double tau_;
  std::unordered_map<std::size_t, PlicPatch> patches_;
};

}  // namespace fsep
