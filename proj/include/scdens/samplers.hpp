#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "scdens/concave_fn.hpp"
#include "scdens/density.hpp"
#include "scdens/random.hpp"

namespace scdens {

// Random h o phi with peak value 1, supported on a random interval around 0.
inline TransformedDensity random_shape(const TransformSpec& t, std::uint64_t seed, double max_half_width = 50) {
  Rng rng(seed);
  double c1 = std::exp(rng.uniform(std::log(0.2), std::log(max_half_width)));
  double c2 = std::exp(rng.uniform(std::log(0.2), std::log(max_half_width)));
  int knots = 2 + static_cast<int>(rng.below(12));
  auto phi = sample_random_concave(-c1, c2, 1.0, knots, rng.bits());
  double lambda = std::exp(rng.uniform(std::log(0.05), std::log(10.0)));
  double top = t.inverse(1.0);
  double vmax = phi.max_value();
  return TransformedDensity(t, phi.affine_values(lambda, top - lambda * vmax));
}

inline double mode_of(const TransformedDensity& p) {
  const auto& v = p.phi().values();
  return p.phi().knots()[std::max_element(v.begin(), v.end()) - v.begin()];
}

// Normalized density with its mode moved to `new_mode` and peak `height`.
inline TransformedDensity with_peak(const TransformedDensity& shape, double height, double new_mode) {
  auto p = normalize(shape);
  double c = height / p.sup();
  double m = mode_of(p);
  std::vector<double> xs = p.phi().knots();
  for (auto& x : xs) x = x == m ? new_mode : new_mode + (x - m) / c;
  return normalize(TransformedDensity(p.transform(), PiecewiseConcave(xs, p.phi().values())));
}

// Member of the class {sup p <= M, p(0) >= 1/M}: peak in [1/M, M] at 0.
inline TransformedDensity sample_envelope_member(const TransformSpec& t, double M, std::uint64_t seed) {
  Rng rng(seed ^ 0x5bd1e995ULL);
  double height = M == 1 ? 1.0 : std::exp(rng.uniform(std::log(1 / M), std::log(M)));
  return with_peak(random_shape(t, seed), height, 0.0);
}

// Member of {sup p <= M, p >= 1/M on [-1, 1]} by rejection.
inline TransformedDensity sample_strict_member(const TransformSpec& t, double M, std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    double height = std::exp(rng.uniform(std::log(1 / M), std::log(M)));
    auto p = with_peak(random_shape(t, rng.bits()), height, rng.uniform(-1, 1));
    if (member_of_class(p, M)) return p;
  }
}

// Randomized member for envelope checks. P_{1,s} itself is empty, so M = 1
// uses the envelope preconditions only.
inline TransformedDensity sample_class_member(const TransformSpec& t, double M, std::uint64_t seed) {
  return M == 1 ? sample_envelope_member(t, M, seed) : sample_strict_member(t, M, seed);
}

}  // namespace scdens
