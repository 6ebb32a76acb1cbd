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

#ifndef DEPLOYAUDIT_CLOCK_H_
#define DEPLOYAUDIT_CLOCK_H_

#include <cstdint>

namespace deployaudit {

// Converts UTC timestamps to local wall-clock fields using a fixed offset. No
// daylight-saving rules are applied.
class LocalClock {
 public:
  static constexpr std::int64_t kNewYorkStandardOffset = -5 * 3600;

  explicit LocalClock(std::int64_t utc_offset_seconds = kNewYorkStandardOffset)
      : offset_(utc_offset_seconds) {}

  std::int64_t utc_offset_seconds() const { return offset_; }

  // 0..23
  int hour(std::int64_t utc_seconds) const;
  // 0 = Sunday .. 6 = Saturday
  int weekday(std::int64_t utc_seconds) const;
  // Slot 0..167 counting hours from Sunday 00:00 local.
  int hour_of_week(std::int64_t utc_seconds) const {
    return weekday(utc_seconds) * 24 + hour(utc_seconds);
  }

  // Local hour in [6, 18).
  bool is_daytime(std::int64_t utc_seconds) const;
  bool is_weekend(std::int64_t utc_seconds) const;

 private:
  std::int64_t local_seconds(std::int64_t utc_seconds) const {
    return utc_seconds + offset_;
  }

  std::int64_t offset_;
};

// Floor division for possibly negative timestamps.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_CLOCK_H_
