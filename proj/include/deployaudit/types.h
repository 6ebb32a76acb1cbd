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

#ifndef DEPLOYAUDIT_TYPES_H_
#define DEPLOYAUDIT_TYPES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deployaudit {

// One dashcam image reduced to what the analysis needs: where and when it was
// taken and the classifier's image-level score (max over object detections).
struct DetectionRecord {
  std::string image_id;
  double latitude = 0.0;   // degrees WGS84
  double longitude = 0.0;  // degrees WGS84
  std::int64_t timestamp = 0;  // UTC seconds since epoch
  double score = 0.0;

  bool predicted_positive(double threshold) const { return score >= threshold; }

  friend bool operator==(const DetectionRecord&,
                         const DetectionRecord&) = default;
};

// A detection with a human label: true when the image shows at least one
// police vehicle.
struct LabeledRecord {
  DetectionRecord detection;
  bool label = false;

  friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
};

// Ring vertices as (longitude, latitude) pairs; closed (first == last).
struct Vertex {
  double x = 0.0;  // longitude
  double y = 0.0;  // latitude

  friend bool operator==(const Vertex&, const Vertex&) = default;
};
using Ring = std::vector<Vertex>;

// First ring is the exterior, the rest are holes.
struct Polygon {
  std::vector<Ring> rings;
};
using MultiPolygon = std::vector<Polygon>;

enum class ZoneType { kCommercial, kResidential, kManufacturing, kOther };

std::string_view to_string(ZoneType zone);
// Accepts the lower-case names written by to_string.
std::optional<ZoneType> parse_zone_type(std::string_view text);

// Name of the population column holding every resident of a block group. Race
// and ethnicity columns are not mutually exclusive, so the total is carried
// explicitly rather than summed.
inline constexpr std::string_view kTotalPopulation = "total";

struct CensusBlockGroup {
  std::string cbg_id;
  MultiPolygon geometry;
  std::map<std::string, std::int64_t, std::less<>> populations;
  std::optional<double> median_income;
  double population_density = 0.0;  // persons per km^2
  ZoneType zone_type = ZoneType::kOther;
  std::string borough;
  std::string neighborhood;

  std::int64_t population(std::string_view group) const {
    auto it = populations.find(group);
    return it == populations.end() ? 0 : it->second;
  }
  std::int64_t total_population() const { return population(kTotalPopulation); }
};

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_TYPES_H_
