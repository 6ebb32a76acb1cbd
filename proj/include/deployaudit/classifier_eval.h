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

#ifndef DEPLOYAUDIT_CLASSIFIER_EVAL_H_
#define DEPLOYAUDIT_CLASSIFIER_EVAL_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deployaudit/clock.h"
#include "deployaudit/types.h"

namespace deployaudit {

// Scores at or above the threshold are positive predictions.

struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
};

ConfusionCounts confusion_counts(std::span<const LabeledRecord> labeled,
                                 double threshold);

struct MetricsReport {
  double threshold = 0.0;
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;
  double auc = 0.0;
  double average_precision = 0.0;
  std::size_t n = 0;
  std::size_t n_positive = 0;
  ConfusionCounts counts;
};

// Probability that a random positive outscores a random negative, ties
// counting one half. Computed from mid-ranks. Throws PreconditionError when
// either class is absent.
double roc_auc(std::span<const LabeledRecord> labeled);

// Non-interpolated average precision: mean over positives of the precision
// at that positive's rank, ranks by descending score with ties kept in input
// order. Throws PreconditionError when no positive is present.
double average_precision(std::span<const LabeledRecord> labeled);

MetricsReport binary_metrics(std::span<const LabeledRecord> labeled,
                             double threshold);

// Observed score maximizing F1; equal F1 resolves to the larger score.
// Throws PreconditionError if there is no positive label.
double select_threshold(std::span<const LabeledRecord> labeled);

// Pr(y=1 | positive prediction) and Pr(y=1 | negative prediction) with their
// Bernoulli standard errors sqrt(p(1-p)/n).
struct ClassifierErrorModel {
  double threshold = 0.0;
  double precision = 0.0;
  double false_omission_rate = 0.0;
  std::size_t n_pos_pred = 0;
  std::size_t n_neg_pred = 0;
  double se_precision = 0.0;
  double se_for = 0.0;
};

// Throws PreconditionError when either prediction side is empty.
ClassifierErrorModel estimate_error_model(std::span<const LabeledRecord> labeled,
                                          double threshold);

// Builds a model from externally supplied rates (e.g. --precision/--for);
// counts and standard errors are left at zero.
ClassifierErrorModel fixed_error_model(double precision,
                                       double false_omission_rate,
                                       double threshold);

inline constexpr double kZ95 = 1.96;

// 1.96 * sqrt(p(1-p)/n); zero when n == 0.
double bernoulli_half_width(double rate, std::size_t n);

enum class PredictionSide { kPositive, kNegative };
std::string_view to_string(PredictionSide side);

// image_id -> subgroup name -> membership ("above median", "weekend", ...).
using SubgroupFlags = std::map<std::string, std::map<std::string, bool>>;

struct SubgroupCalibrationRow {
  std::string subgroup;
  PredictionSide side = PredictionSide::kPositive;
  bool stratum = false;  // the subgroup flag value
  double rate = 0.0;     // fraction of label 1 among these predictions
  double half_width = 0.0;
  std::size_t n = 0;
  bool insufficient = false;  // n == 0
  bool flagged = false;       // the two strata's intervals are disjoint
};

struct CalibrationAudit {
  std::vector<SubgroupCalibrationRow> rows;  // subgroup, side, stratum order
  std::vector<std::string> flagged_subgroups;
};

// For every subgroup, side and stratum: label rate and 1.96 * Bernoulli SE.
// A side is flagged when both strata have data and their intervals do not
// overlap. Records missing from `flags` (or lacking a subgroup) are skipped
// for that subgroup. Throws PreconditionError on an empty flag map.
CalibrationAudit calibration_audit(std::span<const LabeledRecord> labeled,
                                   double threshold,
                                   const SubgroupFlags& flags);

struct SubgroupMetricsRow {
  std::string subgroup;
  bool stratum = false;
  std::size_t n = 0;
  std::size_t n_positive = 0;
  bool insufficient = false;  // a class is missing, metrics left at zero
  double auc = 0.0;
  double average_precision = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

std::vector<SubgroupMetricsRow> subgroup_metrics(
    std::span<const LabeledRecord> labeled, double threshold,
    const SubgroupFlags& flags);

// Standard audit strata for labeled images, derived from each image's block
// group and local time:
//   pct_white_above_median, pct_black_above_median, density_above_median,
//   income_above_median   (medians taken over the labeled images themselves)
//   in_<borough>          (only when that borough exists in the census)
//   daytime, weekend
// Unassigned images only get the time-based flags; a missing income leaves
// income_above_median unset for that image.
SubgroupFlags derive_subgroup_flags(
    std::span<const LabeledRecord> labeled,
    std::span<const std::optional<std::string>> assignments,
    std::span<const CensusBlockGroup> cbgs, const LocalClock& clock,
    std::string_view focus_borough = "Manhattan");

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_CLASSIFIER_EVAL_H_
