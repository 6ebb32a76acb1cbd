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

#include "deployaudit/clock.h"

#include <chrono>

namespace deployaudit {

int LocalClock::hour(std::int64_t utc_seconds) const {
  const std::int64_t local = local_seconds(utc_seconds);
  return static_cast<int>(floor_div(local, 3600) - floor_div(local, 86400) * 24);
}

int LocalClock::weekday(std::int64_t utc_seconds) const {
  const std::chrono::sys_days day{
      std::chrono::days{floor_div(local_seconds(utc_seconds), 86400)}};
  return static_cast<int>(std::chrono::weekday{day}.c_encoding());
}

bool LocalClock::is_daytime(std::int64_t utc_seconds) const {
  const int h = hour(utc_seconds);
  return h >= 6 && h < 18;
}

bool LocalClock::is_weekend(std::int64_t utc_seconds) const {
  const int d = weekday(utc_seconds);
  return d == 0 || d == 6;
}

}  // namespace deployaudit
