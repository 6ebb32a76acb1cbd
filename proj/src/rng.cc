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

#include "deployaudit/rng.h"

namespace deployaudit {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream),
               static_cast<std::uint32_t>(stream >> 32)} {}

Philox4x32::Block Philox4x32::encrypt(Block ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

void Philox4x32::refill() {
  output_ = encrypt(counter_, key_);
  if (++counter_[0] == 0) ++counter_[1];
  used_ = 0;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (used_ == 4) refill();
  return output_[used_++];
}

void Philox4x32::discard(std::uint64_t n) {
  while (n > 0 && used_ < 4) {
    ++used_;
    --n;
  }
  if (n == 0) return;
  std::uint64_t block = (static_cast<std::uint64_t>(counter_[1]) << 32) | counter_[0];
  block += n / 4;
  counter_[0] = static_cast<std::uint32_t>(block);
  counter_[1] = static_cast<std::uint32_t>(block >> 32);
  refill();
  used_ = static_cast<unsigned>(n % 4);
}

double uniform_unit(Philox4x32& rng) {
  const std::uint64_t hi = rng() >> 5;  // 27 bits
  const std::uint64_t lo = rng() >> 6;  // 26 bits
  return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

}  // namespace deployaudit
