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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "deployaudit/errors.h"
#include "oracles.h"

namespace deployaudit {
namespace {

const ClassifierErrorModel kModel = fixed_error_model(0.9, 0.01, 0.5);

CensusBlockGroup cbg(std::string id, std::map<std::string, std::int64_t> pops,
                     ZoneType zone = ZoneType::kResidential, std::string borough = "B") {
  CensusBlockGroup c;
  c.cbg_id = std::move(id);
  for (auto& [g, n] : pops) c.populations[g] = n;
  c.zone_type = zone;
  c.borough = std::move(borough);
  return c;
}

PrevalenceTable prevalence(const CbgCountMap& counts,
                           const ClassifierErrorModel& model = kModel) {
  return cbg_prevalence(counts, model);
}

TEST(Prevalence, HandArithmetic) {
  const auto table = prevalence({{"a", {50, 5}}});
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(table.rows[0].raw_rate, 0.1);
  EXPECT_NEAR(table.rows[0].corrected_rate, 0.099, 1e-15);
}

TEST(Prevalence, PerfectClassifierIsRaw) {
  const auto table = prevalence({{"a", {70, 9}}}, fixed_error_model(1.0, 0.0, 0.5));
  EXPECT_EQ(table.rows[0].corrected_rate, table.rows[0].raw_rate);
}

TEST(Prevalence, AllNegativeIsFor) {
  EXPECT_DOUBLE_EQ(prevalence({{"a", {20, 0}}}).rows[0].corrected_rate, 0.01);
}

TEST(Prevalence, EmptyBlockGroupsAreExcluded) {
  const auto table = cbg_prevalence({{"a", {0, 0}}, {"b", {3, 1}}, {"c", {1, 1}}}, kModel, 2);
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0].cbg_id, "b");
  EXPECT_EQ(table.excluded, (std::vector<std::string>{"a", "c"}));
}

TEST(Prevalence, BoundedByForAndPrecision) {
  for (std::size_t k = 0; k <= 40; ++k) {
    const double r = prevalence({{"a", {40, k}}}).rows[0].corrected_rate;
    EXPECT_GE(r, 0.01 - 1e-15);
    EXPECT_LE(r, 0.9 + 1e-15);
  }
}

TEST(Weights, Examples) {
  const std::vector<CensusBlockGroup> cbgs = {cbg("a", {{"total", 100}, {"g", 100}, {"h", 0}}),
                                              cbg("b", {{"total", 300}, {"g", 100}, {"h", 50}})};
  const auto scheme = population_scheme("s", {"g", "h", "total"});
  const std::set<std::string> both = {"a", "b"};
  const auto g = group_weights(cbgs, scheme, "g", both);
  EXPECT_EQ(g.at("a"), 0.5);
  EXPECT_EQ(g.at("b"), 0.5);
  const auto h = group_weights(cbgs, scheme, "h", both);
  EXPECT_EQ(h.size(), 1u);
  EXPECT_EQ(h.at("b"), 1.0);
  const auto total = group_weights(cbgs, scheme, "total", both);
  EXPECT_EQ(total.at("a"), 0.25);
  EXPECT_EQ(total.at("b"), 0.75);
  try {
    group_weights(cbgs, scheme, "h", {"a"});
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("'h'"), std::string::npos);
  }
}

TEST(GroupEstimate, Examples) {
  const auto table = prevalence({{"a", {50, 5}}, {"b", {50, 10}}});
  EXPECT_NEAR(table.rows[1].corrected_rate, 0.188, 1e-15);
  EXPECT_NEAR(group_estimate(table.rows, {{"a", 0.5}, {"b", 0.5}}), 0.1435, 1e-15);
  EXPECT_NEAR(group_estimate(table.rows, {{"b", 1.0}}), 0.188, 1e-15);
  // Weight on a block group without a rate is dropped and the rest renormalized.
  EXPECT_NEAR(group_estimate(table.rows, {{"a", 0.25}, {"zz", 0.75}}), 0.099, 1e-15);
  EXPECT_THROW(group_estimate(table.rows, {{"zz", 1.0}}), PreconditionError);
}

TEST(Disparities, TwoBlockGroupFixture) {
  const std::vector<CensusBlockGroup> cbgs = {
      cbg("A", {{"total", 100}, {"g1", 100}, {"g2", 0}}),
      cbg("B", {{"total", 100}, {"g1", 0}, {"g2", 100}})};
  const auto table = relative_disparities(population_scheme("s", {"g1", "g2"}), cbgs,
                                          prevalence({{"A", {50, 5}}, {"B", {50, 10}}}),
                                          std::nullopt);
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.rows[0].group_value, "all");
  EXPECT_EQ(table.rows[0].relative_rate, 1.0);
  EXPECT_NEAR(table.city_average, 0.1435, 1e-15);
  EXPECT_NEAR(table.rows[1].relative_rate, 0.099 / 0.1435, 1e-12);
  EXPECT_NEAR(table.rows[2].relative_rate, 0.188 / 0.1435, 1e-12);
  EXPECT_NEAR(table.rows[1].relative_rate, 0.690, 5e-4);
  EXPECT_NEAR(table.rows[2].relative_rate, 1.310, 5e-4);
}

TEST(Disparities, UniformRatesGiveOne) {
  std::vector<CensusBlockGroup> cbgs;
  CbgCountMap counts;
  for (int i = 0; i < 12; ++i) {
    const std::string id = "c" + std::to_string(i);
    cbgs.push_back(cbg(id, {{"total", 100 + i}, {"white", 10 * i}, {"black", 120 - 10 * i}},
                       ZoneType::kResidential, i % 2 ? "X" : "Y"));
    counts[id] = {20, 4};
  }
  for (const auto& scheme : {population_scheme("race", {"white", "black"}),
                             attribute_scheme(cbgs, CbgAttribute::kBorough)}) {
    const auto table = relative_disparities(scheme, cbgs, prevalence(counts), std::nullopt);
    for (const auto& row : table.rows) EXPECT_NEAR(row.relative_rate, 1.0, 1e-14);
  }
}

// Random census tables against the direct weighted-average formula.
TEST(Disparities, MatchOracleOnRandomTables) {
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> pop(0, 500);
  std::uniform_int_distribution<int> images(0, 60);
  std::uniform_int_distribution<int> zone(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<CensusBlockGroup> cbgs;
    CbgCountMap counts;
    for (int i = 0; i < 40; ++i) {
      const std::string id = "c" + std::to_string(i);
      const int w = pop(gen), b = pop(gen);
      cbgs.push_back(cbg(id, {{"total", w + b + 1}, {"white", w}, {"black", b}},
                         static_cast<ZoneType>(zone(gen))));
      const std::size_t n = images(gen);
      counts[id] = {n, n == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, n)(gen)};
    }
    const auto prev = prevalence(counts);
    std::map<std::string, double> rate;
    for (const auto& row : prev.rows) rate[row.cbg_id] = row.corrected_rate;
    for (auto filter : {std::optional<ZoneType>{}, std::optional(ZoneType::kResidential)}) {
      const auto table = relative_disparities(population_scheme("race", {"white", "black"}),
                                              cbgs, prev, filter);
      auto oracle_rate = [&](const std::string& group) {
        std::vector<double> p, r;
        for (const auto& c : cbgs) {
          if (filter && c.zone_type != *filter) continue;
          if (!rate.contains(c.cbg_id)) continue;
          p.push_back(static_cast<double>(c.population(group)));
          r.push_back(rate[c.cbg_id]);
        }
        return oracle::weighted_rate(p, r);
      };
      const double city = oracle_rate("total");
      EXPECT_NEAR(table.city_average, city, 1e-14);
      EXPECT_NEAR(table.rows[1].relative_rate, oracle_rate("white") / city, 1e-12);
      EXPECT_NEAR(table.rows[2].relative_rate, oracle_rate("black") / city, 1e-12);
      EXPECT_EQ(table.rows[0].relative_rate, 1.0);
    }
  }
}

TEST(Disparities, ResidentialFilterRestrictsCityAverage) {
  const std::vector<CensusBlockGroup> cbgs = {
      cbg("r", {{"total", 100}, {"g", 100}}, ZoneType::kResidential),
      cbg("m", {{"total", 100}, {"g", 0}}, ZoneType::kManufacturing)};
  const auto prev = prevalence({{"r", {10, 1}}, {"m", {10, 9}}});
  const auto scheme = population_scheme("s", {"g"});
  const auto all = relative_disparities(scheme, cbgs, prev, std::nullopt);
  const auto res = relative_disparities(scheme, cbgs, prev, ZoneType::kResidential);
  EXPECT_LT(all.rows[1].relative_rate, 1.0);
  EXPECT_EQ(res.rows[1].relative_rate, 1.0);
  EXPECT_EQ(res.n_cbgs_analyzed, 1u);
}

TEST(Disparities, ZeroCityAverageIsAnError) {
  const std::vector<CensusBlockGroup> cbgs = {cbg("a", {{"total", 10}})};
  const auto prev = cbg_prevalence({{"a", {10, 0}}}, fixed_error_model(1.0, 0.0, 0.5));
  EXPECT_THROW(relative_disparities(population_scheme("s", {"x"}), cbgs, prev, std::nullopt),
               PreconditionError);
}

TEST(Disparities, UnsupportedGroupsAndMissingData) {
  const std::vector<CensusBlockGroup> cbgs = {cbg("a", {{"total", 10}, {"g", 5}}),
                                              cbg("b", {{"total", 10}, {"h", 5}})};
  const auto table = relative_disparities(population_scheme("s", {"g", "h"}), cbgs,
                                          prevalence({{"a", {10, 2}}}), std::nullopt);
  EXPECT_EQ(table.unsupported_groups, std::vector<std::string>{"h"});
  EXPECT_EQ(table.n_cbgs_without_data, 1u);
  EXPECT_EQ(table.rows.size(), 2u);
}

TEST(Properties, MonotoneInPredictedPositives) {
  std::mt19937_64 gen(30);
  std::uniform_int_distribution<int> pop(1, 200);
  std::vector<CensusBlockGroup> cbgs;
  CbgCountMap counts;
  for (int i = 0; i < 15; ++i) {
    const std::string id = "c" + std::to_string(i);
    cbgs.push_back(cbg(id, {{"total", 400}, {"white", pop(gen)}, {"black", pop(gen)}}));
    counts[id] = {30, static_cast<std::size_t>(i)};
  }
  const auto scheme = population_scheme("race", {"white", "black"});
  const auto base = relative_disparities(scheme, cbgs, prevalence(counts), std::nullopt);
  for (auto& [id, c] : counts) {
    auto bumped = counts;
    ++bumped[id].n_pred_pos;
    const auto next = relative_disparities(scheme, cbgs, prevalence(bumped), std::nullopt);
    for (std::size_t r = 0; r < base.rows.size(); ++r) {
      EXPECT_GE(next.rows[r].absolute_rate, base.rows[r].absolute_rate);
    }
  }
}

TEST(Properties, WeightedMeanBounds) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> pop(0, 100);
  std::uniform_int_distribution<std::size_t> pos(0, 50);
  std::vector<CensusBlockGroup> cbgs;
  CbgCountMap counts;
  for (int i = 0; i < 30; ++i) {
    const std::string id = "c" + std::to_string(i);
    cbgs.push_back(cbg(id, {{"total", 200}, {"g", pop(gen)}}));
    counts[id] = {50, pos(gen)};
  }
  const auto prev = prevalence(counts);
  const auto table = relative_disparities(population_scheme("s", {"g"}), cbgs, prev, std::nullopt);
  double lo = 1, hi = 0;
  for (std::size_t i = 0; i < cbgs.size(); ++i) {
    if (cbgs[i].population("g") == 0) continue;
    lo = std::min(lo, prev.rows[i].corrected_rate);
    hi = std::max(hi, prev.rows[i].corrected_rate);
  }
  EXPECT_GE(table.rows[1].absolute_rate, lo);
  EXPECT_LE(table.rows[1].absolute_rate, hi);
}

// Repeated binomial draws at a known rate: corrected mean is within 3 Monte
// Carlo SEs of the truth, raw mean is not.
TEST(Properties, CorrectionIsUnbiased) {
  const double precision = 0.8, for_rate = 0.02, truth = 0.1;
  const double q = (truth - for_rate) / (precision - for_rate);
  const auto model = fixed_error_model(precision, for_rate, 0.5);
  std::mt19937_64 gen(99);
  std::binomial_distribution<std::size_t> draw(200, q);
  const int reps = 4000;
  double sum = 0, sum_sq = 0, raw_sum = 0;
  for (int i = 0; i < reps; ++i) {
    const auto row = cbg_prevalence({{"a", {200, draw(gen)}}}, model).rows[0];
    sum += row.corrected_rate;
    sum_sq += row.corrected_rate * row.corrected_rate;
    raw_sum += row.raw_rate;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
  EXPECT_LT(std::fabs(mean - truth), 3 * se);
  EXPECT_GT(std::fabs(raw_sum / reps - truth), 10 * se);
}

TEST(Quartiles, NearestRank) {
  EXPECT_EQ(quartile_boundaries({8, 7, 6, 5, 4, 3, 2, 1}), (std::array<double, 3>{2, 4, 6}));
  EXPECT_EQ(quartile_boundaries({1, 2, 3, 4}), (std::array<double, 3>{1, 2, 3}));
  EXPECT_THROW(quartile_boundaries({1, 2, 3}), PreconditionError);
}

TEST(Quartiles, SchemeUsesImageLevelValues) {
  std::vector<CensusBlockGroup> cbgs;
  std::vector<std::optional<std::string>> images;
  for (int i = 1; i <= 8; ++i) {
    auto c = cbg("c" + std::to_string(i), {{"total", 10}});
    c.median_income = i;
    cbgs.push_back(c);
    images.push_back(c.cbg_id);
  }
  cbgs.push_back(cbg("none", {{"total", 10}}));  // missing income
  images.push_back("none");
  images.push_back(std::nullopt);
  const auto scheme = quartile_scheme(images, cbgs, QuartileAttribute::kMedianIncome);
  EXPECT_EQ(scheme.boundaries, (std::vector<double>{2, 4, 6}));
  EXPECT_FALSE(scheme.degenerate);
  EXPECT_EQ(scheme.membership.at("c2"), "Q1");
  EXPECT_EQ(scheme.membership.at("c3"), "Q2");
  EXPECT_EQ(scheme.membership.at("c6"), "Q3");
  EXPECT_EQ(scheme.membership.at("c7"), "Q4");
  EXPECT_FALSE(scheme.membership.contains("none"));

  // Seven extra images in c8: 15 values, ranks 4, 8, 12.
  for (int k = 0; k < 7; ++k) images.push_back("c8");
  const auto shifted = quartile_scheme(images, cbgs, QuartileAttribute::kMedianIncome);
  EXPECT_EQ(shifted.boundaries, (std::vector<double>{4, 8, 8}));
}

TEST(Quartiles, DegenerateWhenAllEqual) {
  std::vector<CensusBlockGroup> cbgs;
  std::vector<std::optional<std::string>> images;
  for (int i = 0; i < 5; ++i) {
    auto c = cbg("c" + std::to_string(i), {{"total", 10}});
    c.population_density = 42;
    cbgs.push_back(c);
    images.push_back(c.cbg_id);
  }
  const auto scheme = quartile_scheme(images, cbgs, QuartileAttribute::kPopulationDensity);
  EXPECT_TRUE(scheme.degenerate);
  EXPECT_EQ(scheme.values, std::vector<std::string>{"Q1"});
  EXPECT_THROW(quartile_scheme(std::span(images).first(3), cbgs,
                               QuartileAttribute::kPopulationDensity),
               PreconditionError);
}

TEST(Correlation, Examples) {
  const auto perfect = external_correlation({{"a", {1, 3}}, {"b", {2, 5}}, {"c", {3, 7}}, {"d", {4, 9}}});
  EXPECT_NEAR(perfect.r, 1.0, 1e-15);

  const auto r = external_correlation({{"a", {1, 2}}, {"b", {2, 4}}, {"c", {3, 6.1}}});
  EXPECT_NEAR(r.r, oracle::pearson({1, 2, 3}, {2, 4, 6.1}), 1e-12);
  // One degree of freedom: t is Cauchy, p = 1 - (2/pi) atan|t|.
  const double t = r.r / std::sqrt(1 - r.r * r.r);
  EXPECT_NEAR(r.p_value, 1.0 - 2.0 / std::numbers::pi * std::atan(std::fabs(t)), 1e-12);

  EXPECT_THROW(external_correlation({{"a", {1, 2}}, {"b", {2, 3}}}), PreconditionError);
  EXPECT_THROW(external_correlation({{"a", {1, 2}}, {"b", {1, 3}}, {"c", {1, 4}}}),
               PreconditionError);
}

TEST(Correlation, TwoDegreesOfFreedom) {
  // t with 2 dof has survival 1/2 (1 - t / sqrt(t^2 + 2)).
  const auto r = external_correlation({{"a", {1, 1}}, {"b", {2, 3}}, {"c", {3, 2}}, {"d", {4, 5}}});
  EXPECT_NEAR(r.r, oracle::pearson({1, 2, 3, 4}, {1, 3, 2, 5}), 1e-12);
  const double t = r.r * std::sqrt(2.0 / (1 - r.r * r.r));
  EXPECT_NEAR(r.p_value, 1.0 - t / std::sqrt(t * t + 2.0), 1e-12);
}

}  // namespace
}  // namespace deployaudit
