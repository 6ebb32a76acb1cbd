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

#include "deployaudit/classifier_eval.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include "deployaudit/errors.h"

namespace deployaudit {
namespace {

std::size_t count_positive(std::span<const LabeledRecord> labeled) {
  return static_cast<std::size_t>(std::count_if(
      labeled.begin(), labeled.end(), [](const auto& r) { return r.label; }));
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion_counts(std::span<const LabeledRecord> labeled,
                                 double threshold) {
  ConfusionCounts c;
  for (const auto& r : labeled) {
    const bool pred = r.detection.predicted_positive(threshold);
    if (pred && r.label) {
      ++c.true_positive;
    } else if (pred) {
      ++c.false_positive;
    } else if (r.label) {
      ++c.false_negative;
    } else {
      ++c.true_negative;
    }
  }
  return c;
}

double roc_auc(std::span<const LabeledRecord> labeled) {
  const std::size_t n = labeled.size();
  const std::size_t n_pos = count_positive(labeled);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw PreconditionError("AUC needs at least one positive and one negative label");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labeled[a].detection.score < labeled[b].detection.score;
  });
  // Sum of positive mid-ranks, kept in half units so it stays an integer.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && labeled[order[j]].detection.score ==
                        labeled[order[i]].detection.score) {
      ++j;
    }
    const std::uint64_t twice_mid_rank = (i + 1) + j;  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labeled[order[k]].label) twice_rank_sum += twice_mid_rank;
    }
    i = j;
  }
  const std::uint64_t twice_u =
      twice_rank_sum - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
  return (static_cast<double>(twice_u) / 2.0) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(std::span<const LabeledRecord> labeled) {
  const std::size_t n_pos = count_positive(labeled);
  if (n_pos == 0) {
    throw PreconditionError("average precision needs at least one positive label");
  }
  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labeled[a].detection.score > labeled[b].detection.score;
  });
  double sum = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!labeled[order[k]].label) continue;
    ++tp;
    sum += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(n_pos);
}

MetricsReport binary_metrics(std::span<const LabeledRecord> labeled,
                             double threshold) {
  MetricsReport m;
  m.threshold = threshold;
  m.n = labeled.size();
  m.n_positive = count_positive(labeled);
  m.auc = roc_auc(labeled);
  m.average_precision = average_precision(labeled);
  m.counts = confusion_counts(labeled, threshold);
  const auto& c = m.counts;
  m.precision = ratio(c.true_positive, c.true_positive + c.false_positive);
  m.recall = ratio(c.true_positive, c.true_positive + c.false_negative);
  return m;
}

double select_threshold(std::span<const LabeledRecord> labeled) {
  const std::size_t n_pos = count_positive(labeled);
  if (n_pos == 0) {
    throw PreconditionError("threshold selection needs at least one positive label");
  }
  std::vector<std::size_t> order(labeled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labeled[a].detection.score > labeled[b].detection.score;
  });
  // F1 = 2TP / (2TP + FP + FN), compared as exact fractions.
  std::uint64_t best_num = 0;
  std::uint64_t best_den = 1;
  double best = labeled[order.front()].detection.score;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double score = labeled[order[i]].detection.score;
    while (i < order.size() && labeled[order[i]].detection.score == score) {
      labeled[order[i]].label ? ++tp : ++fp;
      ++i;
    }
    const std::uint64_t num = 2 * tp;
    const std::uint64_t den = 2 * tp + fp + (n_pos - tp);
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best = score;
    }
  }
  return best;
}

ClassifierErrorModel estimate_error_model(std::span<const LabeledRecord> labeled,
                                          double threshold) {
  const ConfusionCounts c = confusion_counts(labeled, threshold);
  ClassifierErrorModel m;
  m.threshold = threshold;
  m.n_pos_pred = c.true_positive + c.false_positive;
  m.n_neg_pred = c.true_negative + c.false_negative;
  if (m.n_pos_pred == 0) {
    throw PreconditionError("error model: no record scores at or above the threshold");
  }
  if (m.n_neg_pred == 0) {
    throw PreconditionError("error model: no record scores below the threshold");
  }
  m.precision = ratio(c.true_positive, m.n_pos_pred);
  m.false_omission_rate = ratio(c.false_negative, m.n_neg_pred);
  m.se_precision = std::sqrt(m.precision * (1.0 - m.precision) /
                             static_cast<double>(m.n_pos_pred));
  m.se_for = std::sqrt(m.false_omission_rate * (1.0 - m.false_omission_rate) /
                       static_cast<double>(m.n_neg_pred));
  return m;
}

ClassifierErrorModel fixed_error_model(double precision,
                                       double false_omission_rate,
                                       double threshold) {
  if (!(precision >= 0.0 && precision <= 1.0) ||
      !(false_omission_rate >= 0.0 && false_omission_rate <= 1.0)) {
    throw PreconditionError("precision and false omission rate must lie in [0, 1]");
  }
  ClassifierErrorModel m;
  m.threshold = threshold;
  m.precision = precision;
  m.false_omission_rate = false_omission_rate;
  return m;
}

double bernoulli_half_width(double rate, std::size_t n) {
  if (n == 0) return 0.0;
  return kZ95 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(n));
}

std::string_view to_string(PredictionSide side) {
  return side == PredictionSide::kPositive ? "positive_predictions"
                                           : "negative_predictions";
}

namespace {

std::set<std::string> subgroup_names(const SubgroupFlags& flags) {
  std::set<std::string> names;
  for (const auto& [id, groups] : flags) {
    for (const auto& [name, value] : groups) names.insert(name);
  }
  return names;
}

const bool* lookup_flag(const SubgroupFlags& flags, const std::string& image_id,
                        const std::string& subgroup) {
  auto it = flags.find(image_id);
  if (it == flags.end()) return nullptr;
  auto jt = it->second.find(subgroup);
  return jt == it->second.end() ? nullptr : &jt->second;
}

}  // namespace

CalibrationAudit calibration_audit(std::span<const LabeledRecord> labeled,
                                   double threshold,
                                   const SubgroupFlags& flags) {
  const auto names = subgroup_names(flags);
  if (names.empty()) throw PreconditionError("calibration audit: no subgroups given");

  CalibrationAudit audit;
  for (const std::string& name : names) {
    // [side][stratum] -> (n, label-1 count); side 0 = positive predictions,
    // stratum 0 = flag true.
    std::size_t n[2][2] = {};
    std::size_t hits[2][2] = {};
    for (const auto& r : labeled) {
      const bool* flag = lookup_flag(flags, r.detection.image_id, name);
      if (flag == nullptr) continue;
      const int side = r.detection.predicted_positive(threshold) ? 0 : 1;
      const int stratum = *flag ? 0 : 1;
      ++n[side][stratum];
      if (r.label) ++hits[side][stratum];
    }
    bool any_flag = false;
    for (int side = 0; side < 2; ++side) {
      SubgroupCalibrationRow rows[2];
      for (int stratum = 0; stratum < 2; ++stratum) {
        auto& row = rows[stratum];
        row.subgroup = name;
        row.side = side == 0 ? PredictionSide::kPositive : PredictionSide::kNegative;
        row.stratum = stratum == 0;
        row.n = n[side][stratum];
        row.insufficient = row.n == 0;
        row.rate = ratio(hits[side][stratum], row.n);
        row.half_width = bernoulli_half_width(row.rate, row.n);
      }
      const bool disjoint =
          !rows[0].insufficient && !rows[1].insufficient &&
          std::fabs(rows[0].rate - rows[1].rate) >
              rows[0].half_width + rows[1].half_width;
      for (auto& row : rows) {
        row.flagged = disjoint;
        audit.rows.push_back(row);
      }
      any_flag = any_flag || disjoint;
    }
    if (any_flag) audit.flagged_subgroups.push_back(name);
  }
  return audit;
}

std::vector<SubgroupMetricsRow> subgroup_metrics(
    std::span<const LabeledRecord> labeled, double threshold,
    const SubgroupFlags& flags) {
  const auto names = subgroup_names(flags);
  if (names.empty()) throw PreconditionError("subgroup metrics: no subgroups given");

  std::vector<SubgroupMetricsRow> out;
  for (const std::string& name : names) {
    for (bool stratum : {true, false}) {
      std::vector<LabeledRecord> subset;
      for (const auto& r : labeled) {
        const bool* flag = lookup_flag(flags, r.detection.image_id, name);
        if (flag != nullptr && *flag == stratum) subset.push_back(r);
      }
      SubgroupMetricsRow row;
      row.subgroup = name;
      row.stratum = stratum;
      row.n = subset.size();
      row.n_positive = count_positive(subset);
      row.insufficient = row.n_positive == 0 || row.n_positive == row.n;
      if (!row.insufficient) {
        const MetricsReport m = binary_metrics(subset, threshold);
        row.auc = m.auc;
        row.average_precision = m.average_precision;
        row.precision = m.precision;
        row.recall = m.recall;
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

SubgroupFlags derive_subgroup_flags(
    std::span<const LabeledRecord> labeled,
    std::span<const std::optional<std::string>> assignments,
    std::span<const CensusBlockGroup> cbgs, const LocalClock& clock,
    std::string_view focus_borough) {
  if (assignments.size() != labeled.size()) {
    throw PreconditionError("subgroup flags: assignments not aligned with records");
  }
  std::map<std::string_view, const CensusBlockGroup*> by_id;
  bool has_focus = false;
  for (const auto& c : cbgs) {
    by_id.emplace(c.cbg_id, &c);
    has_focus = has_focus || c.borough == focus_borough;
  }
  std::vector<const CensusBlockGroup*> home(labeled.size(), nullptr);
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!assignments[i]) continue;
    auto it = by_id.find(*assignments[i]);
    if (it != by_id.end()) home[i] = it->second;
  }

  using Attribute = std::optional<double> (*)(const CensusBlockGroup&);
  const std::pair<const char*, Attribute> attributes[] = {
      {"pct_white_above_median",
       [](const CensusBlockGroup& c) -> std::optional<double> {
         if (c.total_population() <= 0) return std::nullopt;
         return static_cast<double>(c.population("white")) / c.total_population();
       }},
      {"pct_black_above_median",
       [](const CensusBlockGroup& c) -> std::optional<double> {
         if (c.total_population() <= 0) return std::nullopt;
         return static_cast<double>(c.population("black")) / c.total_population();
       }},
      {"density_above_median",
       [](const CensusBlockGroup& c) -> std::optional<double> {
         return c.population_density;
       }},
      {"income_above_median",
       [](const CensusBlockGroup& c) -> std::optional<double> {
         return c.median_income;
       }},
  };

  SubgroupFlags flags;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    auto& f = flags[labeled[i].detection.image_id];
    f["daytime"] = clock.is_daytime(labeled[i].detection.timestamp);
    f["weekend"] = clock.is_weekend(labeled[i].detection.timestamp);
    if (home[i] != nullptr && has_focus) {
      f["in_" + std::string(focus_borough)] = home[i]->borough == focus_borough;
    }
  }
  for (const auto& [name, value_of] : attributes) {
    std::vector<double> values;
    for (const auto* c : home) {
      if (c == nullptr) continue;
      if (auto v = value_of(*c)) values.push_back(*v);
    }
    if (values.empty()) continue;
    const double median = median_of(std::move(values));
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      if (home[i] == nullptr) continue;
      if (auto v = value_of(*home[i])) {
        flags[labeled[i].detection.image_id][name] = *v > median;
      }
    }
  }
  return flags;
}

}  // namespace deployaudit
