/*
 * Copyright 2026 The deployaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DEPLOYAUDIT_RNG_H_
#define DEPLOYAUDIT_RNG_H_

#include <array>
#include <cstdint>
#include <limits>

namespace deployaudit {

// Philox4x32-10 counter-based generator (Salmon et al., Random123). The key is
// the user seed and the upper half of the counter is a stream id, so stream r
// of seed s is the same sequence no matter which thread draws it or when.
// Satisfies UniformRandomBitGenerator.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();
  void discard(std::uint64_t n);

  // The raw bijection, exposed for known-answer tests.
  static Block encrypt(Block counter, Key key);

 private:
  void refill();

  Key key_;
  Block counter_;  // [0..1] block index, [2..3] stream id
  Block output_{};
  unsigned used_ = 4;
};

// Uniform double in [0, 1) from 53 random bits.
double uniform_unit(Philox4x32& rng);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_RNG_H_
