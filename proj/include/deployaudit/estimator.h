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

#ifndef DEPLOYAUDIT_ESTIMATOR_H_
#define DEPLOYAUDIT_ESTIMATOR_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deployaudit/classifier_eval.h"
#include "deployaudit/types.h"

namespace deployaudit {

// Deployment level experienced by group a:
//
//   Pr(y=1 | A=a) = sum_c Pr(C=c | A=a) * Pr(y=1 | C=c)
//
// with Pr(C=c | A=a) = N_ca / sum_c N_ca and, per block group,
//
//   Pr(y=1 | C=c) = Pr(yhat=1 | c) * precision + Pr(yhat=0 | c) * FOR.
//
// Visibility is assumed constant across groups within a block group.

struct CbgCounts {
  std::size_t n_images = 0;
  std::size_t n_pred_pos = 0;
};
using CbgCountMap = std::map<std::string, CbgCounts>;

// Tallies assigned records per block group; unassigned records are skipped.
CbgCountMap count_by_cbg(std::span<const DetectionRecord> records,
                         std::span<const std::optional<std::string>> assignments,
                         double threshold);

struct CbgPrevalence {
  std::string cbg_id;
  std::size_t n_images = 0;
  std::size_t n_pred_pos = 0;
  double raw_rate = 0.0;
  double corrected_rate = 0.0;
};

struct PrevalenceTable {
  std::vector<CbgPrevalence> rows;     // ascending cbg_id
  std::vector<std::string> excluded;   // fewer than min_images images
};

double corrected_rate(double predicted_positive_share,
                      const ClassifierErrorModel& model);

PrevalenceTable cbg_prevalence(const CbgCountMap& counts,
                               const ClassifierErrorModel& model,
                               std::size_t min_images = 1);

enum class WeightSource {
  kPopulationColumn,  // N_ca read from the group's own population column
  kCbgAttribute,      // group is a block-group attribute; N_ca = total if member
};

struct GroupingScheme {
  std::string name;
  std::vector<std::string> values;
  WeightSource weight_source = WeightSource::kPopulationColumn;
  std::map<std::string, std::string> membership;  // kCbgAttribute: cbg_id -> value
  // Quartile schemes only.
  std::vector<double> boundaries;
  bool degenerate = false;
};

// Groups are population columns, e.g. {"white", "black", "hispanic", "asian"}.
GroupingScheme population_scheme(std::string name,
                                 std::vector<std::string> groups);

enum class CbgAttribute { kBorough, kNeighborhood, kZoneType };
GroupingScheme attribute_scheme(std::span<const CensusBlockGroup> cbgs,
                                CbgAttribute attribute);

enum class QuartileAttribute { kMedianIncome, kPopulationDensity };

// Nearest-rank 25th/50th/75th percentiles. Throws PreconditionError for fewer
// than four values.
std::array<double, 3> quartile_boundaries(std::vector<double> values);

// Boundaries are taken over images (each image contributes its block group's
// attribute value), then each block group with a known value joins the first
// quartile whose upper boundary it does not exceed. Values lists only the
// non-empty quartiles; fewer than four marks the scheme degenerate.
GroupingScheme quartile_scheme(
    std::span<const std::optional<std::string>> image_cbgs,
    std::span<const CensusBlockGroup> cbgs, QuartileAttribute attribute);

// Named schemes understood by the CLI: race, borough, neighborhood,
// zone_type, income_quartile, density_quartile.
inline constexpr std::array<std::string_view, 4> kRaceGroups = {
    "white", "black", "hispanic", "asian"};

using WeightMap = std::map<std::string, double>;

// Pr(C=c | A=a) over `analysis_set`; weights sum to one. Throws
// PreconditionError naming the group when its population there is zero.
WeightMap group_weights(std::span<const CensusBlockGroup> cbgs,
                        const GroupingScheme& scheme, std::string_view group,
                        const std::set<std::string>& analysis_set);

// sum_c weight(c) * corrected_rate(c), with weights renormalized over the
// block groups present in both inputs.
double group_estimate(std::span<const CbgPrevalence> prevalences,
                      const WeightMap& weights);

inline constexpr std::string_view kCityAverageGroup = "all";

struct DisparityEstimate {
  std::string group_value;
  double absolute_rate = 0.0;
  double relative_rate = 0.0;
  // 1.96 * SD across bootstrap replicates, unset until bootstrapped.
  std::optional<double> ci_half_width;
  std::optional<double> absolute_ci_half_width;
  std::size_t n_cbgs = 0;
  std::int64_t population = 0;
};

struct DisparityTable {
  std::string scheme;
  std::optional<ZoneType> zone_filter;
  double city_average = 0.0;
  std::vector<DisparityEstimate> rows;  // city-average row first
  std::vector<std::string> unsupported_groups;  // no population in analysis set
  std::size_t n_cbgs_analyzed = 0;      // block groups with a usable rate
  std::size_t n_cbgs_without_data = 0;  // in the filter but dropped
  bool degenerate = false;
};

// The group estimate compiled against a fixed census table: group weights are stored as
// sparse (slot, population) lists so a table can be re-evaluated for many
// rate vectors (bootstrap replicates) without map lookups.
class DisparityEvaluator {
 public:
  DisparityEvaluator(const GroupingScheme& scheme,
                     std::span<const CensusBlockGroup> cbgs,
                     std::optional<ZoneType> zone_filter);

  std::size_t n_slots() const { return ids_.size(); }
  const std::vector<std::string>& cbg_ids() const { return ids_; }

  // `rates` is indexed by slot (census order); NaN marks a block group with
  // no usable images. Throws PreconditionError when the city average has no
  // support or is zero.
  DisparityTable evaluate(std::span<const double> rates) const;

 private:
  struct Entry {
    std::uint32_t slot;
    std::int64_t population;
  };
  std::string scheme_name_;
  std::optional<ZoneType> zone_filter_;
  bool degenerate_ = false;
  std::vector<std::string> ids_;
  std::vector<Entry> city_;
  std::vector<std::string> groups_;
  std::vector<std::vector<Entry>> group_entries_;
};

// Slot-ordered rates for an evaluator, NaN where the table has no row.
std::vector<double> rates_by_slot(const DisparityEvaluator& evaluator,
                                  const PrevalenceTable& prevalence);

// Relative rates against the population-weighted city average. With a zone
// filter, both the group weights and the city average use only block groups
// of that zone.
DisparityTable relative_disparities(const GroupingScheme& scheme,
                                    std::span<const CensusBlockGroup> cbgs,
                                    const PrevalenceTable& prevalence,
                                    std::optional<ZoneType> zone_filter);

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, Student t with n-2 dof
  std::size_t n = 0;
};

// Pearson correlation of (first, second) across block groups. Throws
// PreconditionError for fewer than three pairs or zero variance.
CorrelationResult external_correlation(
    const std::map<std::string, std::pair<double, double>>& cbg_stats);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_ESTIMATOR_H_
