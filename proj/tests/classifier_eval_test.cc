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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "deployaudit/errors.h"
#include "oracles.h"

namespace deployaudit {
namespace {

using oracle::make_labeled;

TEST(ClassifierEval, HandFixture) {
  const auto data = make_labeled({0.9, 0.8, 0.4, 0.3}, {1, 0, 1, 0});
  const MetricsReport m = binary_metrics(data, 0.5);
  EXPECT_DOUBLE_EQ(m.auc, 0.75);
  EXPECT_NEAR(m.average_precision, (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_EQ(m.counts.true_positive, 1u);
  EXPECT_EQ(m.counts.false_positive, 1u);
  EXPECT_EQ(m.counts.false_negative, 1u);
  EXPECT_EQ(m.counts.true_negative, 1u);
}

TEST(ClassifierEval, PerfectSeparation) {
  const auto data = make_labeled({0.95, 0.9, 0.2, 0.1}, {1, 1, 0, 0});
  EXPECT_EQ(roc_auc(data), 1.0);
  EXPECT_EQ(average_precision(data), 1.0);
}

TEST(ClassifierEval, AllTiedScoresGiveHalfAuc) {
  const auto data = make_labeled({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1});
  EXPECT_EQ(roc_auc(data), 0.5);
}

TEST(ClassifierEval, TiesInAveragePrecisionFollowInputOrder) {
  // Negative listed first among the tie: positive sits at rank 2.
  EXPECT_DOUBLE_EQ(average_precision(make_labeled({0.5, 0.5}, {0, 1})), 0.5);
  EXPECT_DOUBLE_EQ(average_precision(make_labeled({0.5, 0.5}, {1, 0})), 1.0);
}

TEST(ClassifierEval, SingleClassIsAnError) {
  const auto pos = make_labeled({0.9, 0.1}, {1, 1});
  const auto neg = make_labeled({0.9, 0.1}, {0, 0});
  EXPECT_THROW(roc_auc(pos), PreconditionError);
  EXPECT_THROW(roc_auc(neg), PreconditionError);
  EXPECT_THROW(binary_metrics(neg, 0.5), PreconditionError);
  EXPECT_THROW(select_threshold(neg), PreconditionError);
}

TEST(ClassifierEval, AucAndApMatchBruteForce) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto data = oracle::random_labeled(gen, 20 + trial * 47);
    if (std::none_of(data.begin(), data.end(), [](auto& r) { return r.label; }) ||
        std::all_of(data.begin(), data.end(), [](auto& r) { return r.label; })) {
      continue;
    }
    EXPECT_EQ(roc_auc(data), oracle::auc(data)) << "trial " << trial;
    EXPECT_NEAR(average_precision(data), oracle::average_precision(data), 1e-12);
  }
}

TEST(ClassifierEval, PrecisionRecallMatchThresholdSweep) {
  std::mt19937_64 gen(11);
  const auto data = oracle::random_labeled(gen, 500);
  for (double t = 0.0; t <= 1.0; t += 0.02) {
    const auto c = oracle::counts_at(data, t);
    const MetricsReport m = binary_metrics(data, t);
    const double precision =
        c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fp);
    EXPECT_NEAR(m.precision, precision, 1e-12) << t;
    EXPECT_NEAR(m.recall, static_cast<double>(c.tp) / (c.tp + c.fn), 1e-12) << t;
  }
}

TEST(ClassifierEval, ThresholdExample) {
  EXPECT_EQ(select_threshold(make_labeled({0.9, 0.8, 0.4}, {1, 1, 0})), 0.8);
  EXPECT_EQ(select_threshold(make_labeled({0.7, 0.3, 0.2}, {1, 0, 0})), 0.7);
}

TEST(ClassifierEval, ThresholdTieGoesToLargerScore) {
  // t=0.9: TP1 FN1 -> F1 2/3. t=0.5: TP2 FP2 -> F1 4/6 = 2/3 as well.
  const auto data = make_labeled({0.9, 0.8, 0.7, 0.5}, {1, 0, 0, 1});
  EXPECT_EQ(select_threshold(data), oracle::best_threshold(data));
  EXPECT_EQ(select_threshold(data), 0.9);
}

TEST(ClassifierEval, ThresholdMatchesExhaustiveSweep) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto data = oracle::random_labeled(gen, 30 + trial * 3, 20);
    if (std::none_of(data.begin(), data.end(), [](auto& r) { return r.label; })) continue;
    EXPECT_EQ(select_threshold(data), oracle::best_threshold(data)) << trial;
  }
}

TEST(ClassifierEval, ErrorModelCounts) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    scores.push_back(0.9);
    labels.push_back(i < 8);
  }
  for (int i = 0; i < 100; ++i) {
    scores.push_back(0.1);
    labels.push_back(i == 0);
  }
  const auto m = estimate_error_model(make_labeled(scores, labels), 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_NEAR(m.se_precision, 0.1265, 5e-5);
  EXPECT_DOUBLE_EQ(m.false_omission_rate, 0.01);
  EXPECT_NEAR(m.se_for, std::sqrt(0.01 * 0.99 / 100), 1e-15);
  EXPECT_EQ(m.n_pos_pred, 10u);
  EXPECT_EQ(m.n_neg_pred, 100u);
}

TEST(ClassifierEval, ErrorModelPerfectClassifier) {
  const auto m = estimate_error_model(make_labeled({0.9, 0.8, 0.2}, {1, 1, 0}), 0.5);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.false_omission_rate, 0.0);
  EXPECT_THROW(estimate_error_model(make_labeled({0.9, 0.8}, {1, 0}), 0.5),
               PreconditionError);
}

TEST(ClassifierEval, ErrorModelReproducesPrevalence) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto data = oracle::random_labeled(gen, 100 + trial * 13);
    const double t = 0.5;
    const auto c = oracle::counts_at(data, t);
    if (c.tp + c.fp == 0 || c.tn + c.fn == 0) continue;
    const auto m = estimate_error_model(data, t);
    const double n = static_cast<double>(data.size());
    const double lhs = (m.n_pos_pred / n) * m.precision + (m.n_neg_pred / n) * m.false_omission_rate;
    EXPECT_NEAR(lhs, (c.tp + c.fn) / n, 1e-12);
  }
}

SubgroupFlags split_flags(const std::vector<LabeledRecord>& data,
                          const std::vector<bool>& in) {
  SubgroupFlags flags;
  for (std::size_t i = 0; i < data.size(); ++i) {
    flags[data[i].detection.image_id]["split"] = in[i];
  }
  return flags;
}

TEST(CalibrationAudit, MaximalSeparationIsFlagged) {
  std::vector<double> scores(100, 0.9);
  std::vector<int> labels(100);
  std::vector<bool> in(100);
  for (int i = 0; i < 100; ++i) {
    in[i] = i < 50;
    labels[i] = i < 50;
  }
  const auto data = make_labeled(scores, labels);
  const auto audit = calibration_audit(data, 0.5, split_flags(data, in));
  ASSERT_EQ(audit.flagged_subgroups, std::vector<std::string>{"split"});
  // Positive side flagged, negative side has no data.
  ASSERT_EQ(audit.rows.size(), 4u);
  EXPECT_TRUE(audit.rows[0].flagged);
  EXPECT_EQ(audit.rows[0].rate, 1.0);
  EXPECT_EQ(audit.rows[1].rate, 0.0);
  EXPECT_TRUE(audit.rows[2].insufficient);
  EXPECT_FALSE(audit.rows[2].flagged);
}

TEST(CalibrationAudit, IdenticalStrataAreNotFlagged) {
  // Each stratum: 20 positives predicted with 18 true, 80 negatives with 2.
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<bool> in;
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 20; ++i) {
      scores.push_back(0.9);
      labels.push_back(i < 18);
      in.push_back(s == 0);
    }
    for (int i = 0; i < 80; ++i) {
      scores.push_back(0.1);
      labels.push_back(i < 2);
      in.push_back(s == 0);
    }
  }
  const auto data = make_labeled(scores, labels);
  const auto audit = calibration_audit(data, 0.5, split_flags(data, in));
  EXPECT_TRUE(audit.flagged_subgroups.empty());
  for (const auto& row : audit.rows) {
    EXPECT_FALSE(row.flagged);
    EXPECT_NEAR(row.half_width, bernoulli_half_width(row.rate, row.n), 0);
  }
  EXPECT_DOUBLE_EQ(audit.rows[0].rate, 0.9);
  EXPECT_DOUBLE_EQ(audit.rows[0].half_width, 1.96 * std::sqrt(0.9 * 0.1 / 20));
}

TEST(CalibrationAudit, OrderInvariant) {
  std::mt19937_64 gen(9);
  auto data = oracle::random_labeled(gen, 400);
  std::vector<bool> in(data.size());
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = (i % 3) == 0;
  const auto flags = split_flags(data, in);
  const auto before = calibration_audit(data, 0.5, flags);
  std::shuffle(data.begin(), data.end(), gen);
  const auto after = calibration_audit(data, 0.5, flags);
  ASSERT_EQ(before.rows.size(), after.rows.size());
  for (std::size_t i = 0; i < before.rows.size(); ++i) {
    EXPECT_EQ(before.rows[i].rate, after.rows[i].rate);
    EXPECT_EQ(before.rows[i].n, after.rows[i].n);
    EXPECT_EQ(before.rows[i].flagged, after.rows[i].flagged);
  }
}

TEST(CalibrationAudit, EmptyFlagsIsAnError) {
  const auto data = make_labeled({0.9, 0.1}, {1, 0});
  EXPECT_THROW(calibration_audit(data, 0.5, {}), PreconditionError);
}

TEST(SubgroupMetrics, DegradedStratumHasLowerAuc) {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> noise(0.0, 0.35);
  std::bernoulli_distribution coin(0.3);
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<bool> in;
  for (int i = 0; i < 2000; ++i) {
    const bool degraded = i % 2 == 1;
    const int y = coin(gen);
    double s = (y ? 0.75 : 0.25) + (degraded ? noise(gen) : 0.3 * noise(gen));
    scores.push_back(std::clamp(s, 0.0, 1.0));
    labels.push_back(y);
    in.push_back(!degraded);
  }
  const auto data = make_labeled(scores, labels);
  const auto rows = subgroup_metrics(data, 0.5, split_flags(data, in));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].stratum);
  EXPECT_GT(rows[0].auc, rows[1].auc + 0.05);
}

TEST(SubgroupMetrics, IdenticalStrataGiveEqualAuc) {
  // Same records duplicated into two strata.
  std::mt19937_64 gen(4);
  auto half = oracle::random_labeled(gen, 300);
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<bool> in;
  for (int s = 0; s < 2; ++s) {
    for (const auto& r : half) {
      scores.push_back(r.detection.score);
      labels.push_back(r.label);
      in.push_back(s == 0);
    }
  }
  const auto data = make_labeled(scores, labels);
  const auto rows = subgroup_metrics(data, 0.5, split_flags(data, in));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].auc, rows[1].auc);
  EXPECT_EQ(rows[0].average_precision, rows[1].average_precision);
}

TEST(SubgroupFlagsTest, TimeFlagsUseLocalClock) {
  auto data = make_labeled({0.9, 0.1}, {1, 0});
  // 2020-06-06 is a Saturday. 15:00 UTC = 10:00 local; 03:00 UTC Monday = 22:00 Sunday.
  data[0].detection.timestamp = 1591455600;
  data[1].detection.timestamp = 1591585200;
  const std::vector<std::optional<std::string>> none(2);
  const auto flags = derive_subgroup_flags(data, none, {}, LocalClock());
  EXPECT_TRUE(flags.at("r0").at("daytime"));
  EXPECT_TRUE(flags.at("r0").at("weekend"));
  EXPECT_FALSE(flags.at("r1").at("daytime"));
  EXPECT_TRUE(flags.at("r1").at("weekend"));
  EXPECT_EQ(flags.at("r0").count("income_above_median"), 0u);
}

}  // namespace
}  // namespace deployaudit
