// liegen/rng.hpp

// Copyright 2026 The LieGen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Deterministic random-number plumbing.  Every stochastic routine in the
// library draws from an engine derived from (root seed, stream labels) via a
// SplitMix64 mix, so that e.g. training iteration i consumes randomness that
// depends only on (seed, i) and never on how many draws earlier iterations
// made.  That property is what makes checkpoint-resume bit-identical to an
// uninterrupted run.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace liegen {

using Rng = std::mt19937_64;

/// One round of the SplitMix64 output function.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine a root seed with up to three stream labels into a fresh engine.
/// Distinct label tuples give statistically independent streams.
inline Rng make_stream(std::uint64_t seed, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
  s = splitmix64(s ^ splitmix64(a ^ 0x13198a2e03707344ULL));
  s = splitmix64(s ^ splitmix64(b ^ 0xa4093822299f31d0ULL));
  s = splitmix64(s ^ splitmix64(c ^ 0x082efa98ec4e6c89ULL));
  return Rng(s);
}

/// Standard normal draw.
inline double gaussian(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

/// Fill a matrix with i.i.d. N(0,1) entries (row-major fill order so the
/// stream of draws is independent of Eigen's storage order).  Each entry goes
/// through gaussian() so that scalar and matrix fills consume the engine
/// identically; the distribution's internal pair cache is deliberately not
/// reused across entries.
template <class Derived>
void fill_gaussian(Rng& rng, Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = gaussian(rng);
}

/// Fill a matrix with i.i.d. Rademacher (+/-1) entries.
template <class Derived>
void fill_rademacher(Rng& rng, Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = (rng() & 1ULL) ? 1.0 : -1.0;
}

}  // namespace liegen
