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

#ifndef DEPLOYAUDIT_SYNTH_H_
#define DEPLOYAUDIT_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "deployaudit/ingest.h"
#include "deployaudit/types.h"

namespace deployaudit {

// Synthetic cities with known deployment rates, used as the end-to-end oracle.
// Block groups are axis-aligned grid cells; row-major index i has id
// cbg_%06d, so id order equals index order.

struct ScoreModel {
  // Image scores for truly positive / truly negative images.
  double positive_alpha = 8.0;
  double positive_beta = 2.0;
  double negative_alpha = 2.0;
  double negative_beta = 8.0;
};

enum class LabelModel {
  // Prediction first, then truth given prediction: Pr(y=1|yhat) is the same
  // in every block group, as the correction assumes. Scores are drawn from
  // the score model truncated to the side of the threshold the prediction
  // fell on.
  kCalibrated,
  // Truth first, then an untruncated score; precision then varies with each
  // block group's base rate.
  kScoreOnly,
};

struct ClassifierSpec {
  LabelModel label_model = LabelModel::kCalibrated;
  double threshold = 0.77;
  double precision = 0.9;
  double false_omission_rate = 0.01;
  ScoreModel scores;
};

struct WorldSpec {
  std::size_t rows = 10;
  std::size_t cols = 10;
  double origin_latitude = 40.55;
  double origin_longitude = -74.20;
  double cell_degrees = 0.01;

  std::vector<std::string> groups = {"white", "black", "hispanic", "asian"};
  std::int64_t min_population = 400;
  std::int64_t max_population = 3000;
  // Larger values concentrate each group around its own center.
  double segregation = 3.0;
  // Optional per-CBG populations (group -> count, "total" required).
  std::vector<std::map<std::string, std::int64_t>> populations;

  // Per-CBG true rates; generated in [rate_min, rate_max] when empty, higher
  // near randomly placed stations.
  std::vector<double> true_rate;
  double rate_min = 0.03;
  double rate_max = 0.30;
  std::size_t n_stations = 3;
  // Weight of station proximity against idiosyncratic noise.
  double station_effect = 0.7;

  // Image allocation: explicit counts, or total_images split by sampling
  // intensity (lognormal with sigma sampling_skew when not given) with at
  // least min_images_per_cbg each.
  std::vector<std::size_t> images_per_cbg;
  std::size_t total_images = 10000;
  std::vector<double> sampling_intensity;
  double sampling_skew = 1.0;
  std::size_t min_images_per_cbg = 1;

  std::size_t n_labeled = 2000;
  ClassifierSpec classifier;
  // CBG index -> amount subtracted from precision there.
  std::map<std::size_t, double> precision_shift;

  double missing_income_fraction = 0.0;
  TimeWindow window{1590969600, 1590969600 + 14 * 86400};  // June 2020
  std::uint64_t seed = 1;
};

enum class SubgroupAttribute {
  kIncomeAboveMedian,   // CBG-level median over CBGs with a known income
  kDensityAboveMedian,
  kBorough,             // match `value`
  kZoneType,            // match `value`
};

struct SubgroupSelector {
  SubgroupAttribute attribute = SubgroupAttribute::kIncomeAboveMedian;
  std::string value;
};

// Lowers precision by `delta` for images in block groups matching the
// subgroup, so its Pr(y=1|yhat=1) differs from everyone else's. delta == 0 or
// an empty subgroup returns the spec unchanged. Throws PreconditionError when
// the shifted precision leaves [0, 1].
WorldSpec inject_miscalibration(const WorldSpec& spec,
                                const SubgroupSelector& subgroup, double delta);

// Block groups matching the selector, by index.
std::vector<std::size_t> select_cbgs(const WorldSpec& spec,
                                     const SubgroupSelector& subgroup);

struct TruthCbg {
  std::string cbg_id;
  double true_rate = 0.0;
  double precision = 0.0;  // effective, after any injected shift
  double station_distance = 0.0;
  std::size_t n_images = 0;
  std::size_t n_true_positive = 0;
  std::size_t n_pred_positive = 0;
};

struct TruthGroup {
  std::string group;
  double absolute_rate = 0.0;
  double relative_rate = 0.0;
};

struct WorldTruth {
  std::vector<TruthCbg> cbgs;
  // Keys: race, race@residential, borough, zone_type. City row "all" first.
  std::map<std::string, std::vector<TruthGroup>> groups;
};

struct SyntheticWorld {
  std::vector<CensusBlockGroup> cbgs;  // with geometry
  std::vector<DetectionRecord> detections;
  std::vector<bool> detection_truth;   // y per detection
  std::vector<LabeledRecord> labels;
  WorldTruth truth;
};

// Census attributes, geometry and rates only (no images); deterministic in
// the seed and shared by generate() and select_cbgs().
std::vector<CensusBlockGroup> generate_census(const WorldSpec& spec);

// Throws PreconditionError for inconsistent dimensions or rates that the
// classifier spec cannot produce.
SyntheticWorld generate(const WorldSpec& spec);

std::string truth_json(const SyntheticWorld& world, const WorldSpec& spec);

struct WorldFiles {
  std::filesystem::path census;
  std::filesystem::path geometry;
  std::filesystem::path detections;
  std::filesystem::path labels;
  std::filesystem::path truth;
};

// census.csv, geometry.geojson, detections.csv, labels.csv, truth.json.
WorldFiles write_world(const SyntheticWorld& world, const WorldSpec& spec,
                       const std::filesystem::path& directory);

// Reads a truth.json written by write_world.
WorldTruth read_truth(const std::filesystem::path& path);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_SYNTH_H_
