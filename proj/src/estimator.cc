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

#include "deployaudit/estimator.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "deployaudit/errors.h"

namespace deployaudit {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool in_zone(const CensusBlockGroup& c, const std::optional<ZoneType>& zone) {
  return !zone || c.zone_type == *zone;
}

std::int64_t group_population(const CensusBlockGroup& c,
                              const GroupingScheme& scheme,
                              std::string_view group) {
  if (scheme.weight_source == WeightSource::kPopulationColumn) {
    return c.population(group);
  }
  auto it = scheme.membership.find(c.cbg_id);
  if (it == scheme.membership.end() || it->second != group) return 0;
  return c.total_population();
}

std::optional<double> quartile_value(const CensusBlockGroup& c,
                                     QuartileAttribute attribute) {
  if (attribute == QuartileAttribute::kMedianIncome) return c.median_income;
  return c.population_density;
}

}  // namespace

CbgCountMap count_by_cbg(std::span<const DetectionRecord> records,
                         std::span<const std::optional<std::string>> assignments,
                         double threshold) {
  if (assignments.size() != records.size()) {
    throw PreconditionError("count_by_cbg: assignments not aligned with records");
  }
  CbgCountMap counts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!assignments[i]) continue;
    CbgCounts& c = counts[*assignments[i]];
    ++c.n_images;
    if (records[i].predicted_positive(threshold)) ++c.n_pred_pos;
  }
  return counts;
}

double corrected_rate(double predicted_positive_share,
                      const ClassifierErrorModel& model) {
  return predicted_positive_share * model.precision +
         (1.0 - predicted_positive_share) * model.false_omission_rate;
}

PrevalenceTable cbg_prevalence(const CbgCountMap& counts,
                               const ClassifierErrorModel& model,
                               std::size_t min_images) {
  PrevalenceTable table;
  const std::size_t floor = std::max<std::size_t>(min_images, 1);
  for (const auto& [id, c] : counts) {
    if (c.n_pred_pos > c.n_images) {
      throw PreconditionError("block group '" + id +
                              "' has more positive predictions than images");
    }
    if (c.n_images < floor) {
      table.excluded.push_back(id);
      continue;
    }
    CbgPrevalence row;
    row.cbg_id = id;
    row.n_images = c.n_images;
    row.n_pred_pos = c.n_pred_pos;
    row.raw_rate = static_cast<double>(c.n_pred_pos) / static_cast<double>(c.n_images);
    row.corrected_rate = corrected_rate(row.raw_rate, model);
    table.rows.push_back(std::move(row));
  }
  return table;
}

GroupingScheme population_scheme(std::string name,
                                 std::vector<std::string> groups) {
  GroupingScheme scheme;
  scheme.name = std::move(name);
  scheme.values = std::move(groups);
  scheme.weight_source = WeightSource::kPopulationColumn;
  return scheme;
}

GroupingScheme attribute_scheme(std::span<const CensusBlockGroup> cbgs,
                                CbgAttribute attribute) {
  GroupingScheme scheme;
  scheme.weight_source = WeightSource::kCbgAttribute;
  switch (attribute) {
    case CbgAttribute::kBorough:
      scheme.name = "borough";
      break;
    case CbgAttribute::kNeighborhood:
      scheme.name = "neighborhood";
      break;
    case CbgAttribute::kZoneType:
      scheme.name = "zone_type";
      break;
  }
  std::set<std::string> values;
  for (const auto& c : cbgs) {
    std::string value;
    switch (attribute) {
      case CbgAttribute::kBorough:
        value = c.borough;
        break;
      case CbgAttribute::kNeighborhood:
        value = c.neighborhood;
        break;
      case CbgAttribute::kZoneType:
        value = std::string(to_string(c.zone_type));
        break;
    }
    if (value.empty()) continue;
    values.insert(value);
    scheme.membership.emplace(c.cbg_id, std::move(value));
  }
  scheme.values.assign(values.begin(), values.end());
  return scheme;
}

std::array<double, 3> quartile_boundaries(std::vector<double> values) {
  if (values.size() < 4) {
    throw PreconditionError("quartiles need at least 4 values, got " +
                            std::to_string(values.size()));
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::array<double, 3> out{};
  for (std::size_t q = 1; q <= 3; ++q) {
    // Nearest rank: ceil(q/4 * n), 1-based.
    const std::size_t rank = (q * n + 3) / 4;
    out[q - 1] = values[rank - 1];
  }
  return out;
}

GroupingScheme quartile_scheme(
    std::span<const std::optional<std::string>> image_cbgs,
    std::span<const CensusBlockGroup> cbgs, QuartileAttribute attribute) {
  std::map<std::string, double, std::less<>> by_id;
  for (const auto& c : cbgs) {
    if (auto v = quartile_value(c, attribute)) by_id.emplace(c.cbg_id, *v);
  }
  std::vector<double> image_values;
  image_values.reserve(image_cbgs.size());
  for (const auto& id : image_cbgs) {
    if (!id) continue;
    auto it = by_id.find(*id);
    if (it != by_id.end()) image_values.push_back(it->second);
  }
  const auto b = quartile_boundaries(std::move(image_values));

  GroupingScheme scheme;
  scheme.name = attribute == QuartileAttribute::kMedianIncome ? "income_quartile"
                                                              : "density_quartile";
  scheme.weight_source = WeightSource::kCbgAttribute;
  scheme.boundaries.assign(b.begin(), b.end());
  std::array<bool, 4> used{};
  for (const auto& [id, v] : by_id) {
    std::size_t q = 3;
    for (std::size_t k = 0; k < 3; ++k) {
      if (v <= b[k]) {
        q = k;
        break;
      }
    }
    used[q] = true;
    scheme.membership.emplace(id, "Q" + std::to_string(q + 1));
  }
  for (std::size_t q = 0; q < 4; ++q) {
    if (used[q]) scheme.values.push_back("Q" + std::to_string(q + 1));
  }
  scheme.degenerate = scheme.values.size() < 4;
  return scheme;
}

WeightMap group_weights(std::span<const CensusBlockGroup> cbgs,
                        const GroupingScheme& scheme, std::string_view group,
                        const std::set<std::string>& analysis_set) {
  WeightMap weights;
  double total = 0.0;
  for (const auto& c : cbgs) {
    if (!analysis_set.contains(c.cbg_id)) continue;
    const std::int64_t n = group_population(c, scheme, group);
    if (n <= 0) continue;
    weights[c.cbg_id] = static_cast<double>(n);
    total += static_cast<double>(n);
  }
  if (total <= 0.0) {
    throw PreconditionError("group '" + std::string(group) + "' of scheme '" +
                            scheme.name +
                            "' has no population in the analysis set");
  }
  for (auto& [id, w] : weights) w /= total;
  return weights;
}

double group_estimate(std::span<const CbgPrevalence> prevalences,
                      const WeightMap& weights) {
  double total = 0.0;
  for (const auto& p : prevalences) {
    auto it = weights.find(p.cbg_id);
    if (it != weights.end()) total += it->second;
  }
  if (total <= 0.0) {
    throw PreconditionError("group estimate: weights and prevalences share no block group");
  }
  double estimate = 0.0;
  for (const auto& p : prevalences) {
    auto it = weights.find(p.cbg_id);
    if (it != weights.end()) estimate += (it->second / total) * p.corrected_rate;
  }
  return estimate;
}

DisparityEvaluator::DisparityEvaluator(const GroupingScheme& scheme,
                                       std::span<const CensusBlockGroup> cbgs,
                                       std::optional<ZoneType> zone_filter)
    : scheme_name_(scheme.name),
      zone_filter_(zone_filter),
      degenerate_(scheme.degenerate),
      groups_(scheme.values) {
  ids_.reserve(cbgs.size());
  group_entries_.resize(groups_.size());
  for (std::size_t slot = 0; slot < cbgs.size(); ++slot) {
    const CensusBlockGroup& c = cbgs[slot];
    ids_.push_back(c.cbg_id);
    if (!in_zone(c, zone_filter_)) continue;
    const auto s = static_cast<std::uint32_t>(slot);
    city_.push_back({s, c.total_population()});
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const std::int64_t n = group_population(c, scheme, groups_[g]);
      if (n > 0) group_entries_[g].push_back({s, n});
    }
  }
}

DisparityTable DisparityEvaluator::evaluate(std::span<const double> rates) const {
  if (rates.size() != ids_.size()) {
    throw PreconditionError("rate vector does not match the census table");
  }
  struct Sum {
    double estimate = 0.0;
    std::int64_t population = 0;
    std::size_t n_cbgs = 0;
  };
  // Weights are normalized before summing so the result matches
  // group_weights + group_estimate term for term.
  auto weighted = [&](const std::vector<Entry>& entries) {
    Sum s;
    for (const Entry& e : entries) {
      if (std::isnan(rates[e.slot]) || e.population <= 0) continue;
      s.population += e.population;
      ++s.n_cbgs;
    }
    if (s.population == 0) return s;
    const double total = static_cast<double>(s.population);
    for (const Entry& e : entries) {
      if (std::isnan(rates[e.slot]) || e.population <= 0) continue;
      s.estimate += (static_cast<double>(e.population) / total) * rates[e.slot];
    }
    return s;
  };

  DisparityTable table;
  table.scheme = scheme_name_;
  table.zone_filter = zone_filter_;
  table.degenerate = degenerate_;
  for (const Entry& e : city_) {
    if (std::isnan(rates[e.slot])) {
      ++table.n_cbgs_without_data;
    } else {
      ++table.n_cbgs_analyzed;
    }
  }
  const Sum city = weighted(city_);
  if (city.population == 0) {
    throw PreconditionError("scheme '" + scheme_name_ +
                            "': no population in the analysis set");
  }
  if (!(city.estimate > 0.0)) {
    throw PreconditionError("scheme '" + scheme_name_ +
                            "': city average deployment is zero");
  }
  table.city_average = city.estimate;
  table.rows.push_back({std::string(kCityAverageGroup), city.estimate,
                        city.estimate / city.estimate, std::nullopt,
                        std::nullopt, city.n_cbgs, city.population});
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const Sum s = weighted(group_entries_[g]);
    if (s.population == 0) {
      table.unsupported_groups.push_back(groups_[g]);
      continue;
    }
    table.rows.push_back({groups_[g], s.estimate, s.estimate / city.estimate,
                          std::nullopt, std::nullopt, s.n_cbgs, s.population});
  }
  return table;
}

std::vector<double> rates_by_slot(const DisparityEvaluator& evaluator,
                                  const PrevalenceTable& prevalence) {
  std::map<std::string_view, double> by_id;
  for (const auto& row : prevalence.rows) by_id.emplace(row.cbg_id, row.corrected_rate);
  std::vector<double> rates(evaluator.n_slots(), kMissing);
  for (std::size_t slot = 0; slot < rates.size(); ++slot) {
    auto it = by_id.find(evaluator.cbg_ids()[slot]);
    if (it != by_id.end()) rates[slot] = it->second;
  }
  return rates;
}

DisparityTable relative_disparities(const GroupingScheme& scheme,
                                    std::span<const CensusBlockGroup> cbgs,
                                    const PrevalenceTable& prevalence,
                                    std::optional<ZoneType> zone_filter) {
  const DisparityEvaluator evaluator(scheme, cbgs, zone_filter);
  return evaluator.evaluate(rates_by_slot(evaluator, prevalence));
}

CorrelationResult external_correlation(
    const std::map<std::string, std::pair<double, double>>& cbg_stats) {
  const std::size_t n = cbg_stats.size();
  if (n < 3) {
    throw PreconditionError("correlation needs at least 3 block groups, got " +
                            std::to_string(n));
  }
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& [id, xy] : cbg_stats) {
    mean_x += xy.first;
    mean_y += xy.second;
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (const auto& [id, xy] : cbg_stats) {
    const double dx = xy.first - mean_x;
    const double dy = xy.second - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw PreconditionError("correlation undefined: a variable has zero variance");
  }
  CorrelationResult result;
  result.n = n;
  result.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(n - 2);
  const double one_minus_r2 = 1.0 - result.r * result.r;
  if (one_minus_r2 <= 0.0) {
    result.p_value = 0.0;
    return result;
  }
  const double t = std::fabs(result.r) * std::sqrt(dof / one_minus_r2);
  const boost::math::students_t dist(dof);
  result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
  return result;
}

}  // namespace deployaudit
