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

#include <algorithm>

#include "deployaudit/errors.h"
#include "deployaudit/types.h"

namespace deployaudit {
namespace {

std::string describe(const std::string& source,
                     const std::vector<RowIssue>& issues) {
  std::string msg = source + ": " + std::to_string(issues.size()) +
                    " invalid row(s)";
  const std::size_t shown = std::min<std::size_t>(issues.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    msg += "; line " + std::to_string(issues[i].line) + ": " + issues[i].message;
  }
  if (issues.size() > shown) msg += "; ...";
  return msg;
}

}  // namespace

ValidationError::ValidationError(std::string source,
                                 std::vector<RowIssue> issues)
    : AuditError(describe(source, issues)),
      source_(std::move(source)),
      issues_(std::move(issues)) {}

GeometryError::GeometryError(std::string cbg_id, const std::string& what)
    : AuditError("geometry of block group '" + cbg_id + "': " + what),
      cbg_id_(std::move(cbg_id)) {}

std::string_view to_string(ZoneType zone) {
  switch (zone) {
    case ZoneType::kCommercial:
      return "commercial";
    case ZoneType::kResidential:
      return "residential";
    case ZoneType::kManufacturing:
      return "manufacturing";
    case ZoneType::kOther:
      return "other";
  }
  return "other";
}

std::optional<ZoneType> parse_zone_type(std::string_view text) {
  for (ZoneType z : {ZoneType::kCommercial, ZoneType::kResidential,
                     ZoneType::kManufacturing, ZoneType::kOther}) {
    if (text == to_string(z)) return z;
  }
  return std::nullopt;
}

}  // namespace deployaudit
