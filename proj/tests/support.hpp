#pragma once

#include "scdens/samplers.hpp"

namespace scdens::testing {

using scdens::mode_of;
using scdens::random_shape;
using scdens::with_peak;
inline TransformedDensity envelope_member(const TransformSpec& t, double M, std::uint64_t seed) {
  return sample_envelope_member(t, M, seed);
}
inline TransformedDensity strict_member(const TransformSpec& t, double M, std::uint64_t seed) {
  return sample_strict_member(t, M, seed);
}

}  // namespace scdens::testing
