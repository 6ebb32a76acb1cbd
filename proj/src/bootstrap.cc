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

#include "deployaudit/bootstrap.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "deployaudit/errors.h"
#include "deployaudit/rng.h"
#include "json.hpp"

namespace deployaudit {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct SlotCounts {
  std::int64_t n_images = 0;
  std::int64_t n_pred_pos = 0;
};

std::int64_t draw_binomial(Philox4x32& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  boost::random::binomial_distribution<std::int64_t, double> dist(n, p);
  return dist(rng);
}

// Per-CBG resampling with replacement: the positive count of n draws from a
// block group with k positives is Binomial(n, k/n).
std::vector<SlotCounts> resample_stratified(Philox4x32& rng,
                                            std::span<const SlotCounts> observed) {
  std::vector<SlotCounts> out(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const auto& c = observed[i];
    out[i].n_images = c.n_images;
    if (c.n_images > 0) {
      out[i].n_pred_pos =
          draw_binomial(rng, c.n_images,
                        static_cast<double>(c.n_pred_pos) / static_cast<double>(c.n_images));
    }
  }
  return out;
}

// Pooled resampling: N draws over the (cbg, prediction) cells is a
// multinomial, sampled as a chain of conditional binomials.
std::vector<SlotCounts> resample_pooled(Philox4x32& rng,
                                        std::span<const SlotCounts> observed) {
  std::int64_t total = 0;
  for (const auto& c : observed) total += c.n_images;
  std::vector<SlotCounts> out(observed.size());
  std::int64_t draws_left = total;
  std::int64_t mass_left = total;
  for (std::size_t i = 0; i < observed.size() && draws_left > 0; ++i) {
    const std::int64_t cells[2] = {observed[i].n_pred_pos,
                                   observed[i].n_images - observed[i].n_pred_pos};
    std::int64_t got[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
      if (cells[k] == 0) continue;
      got[k] = mass_left == cells[k]
                   ? draws_left
                   : draw_binomial(rng, draws_left,
                                   static_cast<double>(cells[k]) /
                                       static_cast<double>(mass_left));
      draws_left -= got[k];
      mass_left -= cells[k];
    }
    out[i].n_pred_pos = got[0];
    out[i].n_images = got[0] + got[1];
  }
  return out;
}

struct SchemePlan {
  DisparityEvaluator evaluator;
  DisparityTable point;
};

}  // namespace

std::string_view to_string(ResampleUnit unit) {
  return unit == ResampleUnit::kImages ? "images" : "images_and_validation";
}

std::optional<ResampleUnit> parse_resample_unit(std::string_view text) {
  if (text == "images") return ResampleUnit::kImages;
  if (text == "images_and_validation") return ResampleUnit::kImagesAndValidation;
  return std::nullopt;
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  // Deviations are taken from the first value so that a constant sample
  // gives exactly zero instead of rounding residue from the mean.
  const double shift = values.front();
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v - shift;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - shift - mean) * (v - shift - mean);
  return std::sqrt(ss / (n - 1.0));
}

BootstrapResult bootstrap_disparities(const BootstrapInputs& inputs,
                                      std::span<const GroupingScheme> schemes,
                                      const BootstrapConfig& config) {
  if (config.n_replicates < 2) {
    throw PreconditionError("bootstrap needs at least 2 replicates");
  }
  const bool resample_validation =
      config.resample_unit == ResampleUnit::kImagesAndValidation;
  if (resample_validation && inputs.validation.empty()) {
    throw PreconditionError(
        "resampling the validation set requires labeled validation records");
  }

  // Point estimates and the per-slot observed counts.
  const PrevalenceTable prevalence =
      cbg_prevalence(inputs.counts, inputs.error_model, inputs.min_images);
  std::vector<SchemePlan> plans;
  plans.reserve(schemes.size());
  for (const auto& scheme : schemes) {
    DisparityEvaluator evaluator(scheme, inputs.cbgs, inputs.zone_filter);
    DisparityTable point = evaluator.evaluate(rates_by_slot(evaluator, prevalence));
    plans.push_back({std::move(evaluator), std::move(point)});
  }
  std::vector<SlotCounts> observed(inputs.cbgs.size());
  for (std::size_t slot = 0; slot < inputs.cbgs.size(); ++slot) {
    auto it = inputs.counts.find(inputs.cbgs[slot].cbg_id);
    if (it != inputs.counts.end()) {
      observed[slot] = {static_cast<std::int64_t>(it->second.n_images),
                        static_cast<std::int64_t>(it->second.n_pred_pos)};
    }
  }
  const auto min_images =
      static_cast<std::int64_t>(std::max<std::size_t>(inputs.min_images, 1));

  BootstrapResult result;
  result.n_replicates = config.n_replicates;
  result.diagnostics.resize(config.n_replicates);

  auto run_replicate = [&](std::size_t r) {
    ReplicateDiagnostic& diag = result.diagnostics[r];
    diag.replicate = r;
    Philox4x32 rng(config.seed, r);
    ClassifierErrorModel model = inputs.error_model;
    try {
      if (resample_validation) {
        const std::size_t m = inputs.validation.size();
        boost::random::uniform_int_distribution<std::size_t> pick(0, m - 1);
        std::vector<LabeledRecord> sample;
        sample.reserve(m);
        for (std::size_t i = 0; i < m; ++i) sample.push_back(inputs.validation[pick(rng)]);
        model = estimate_error_model(sample, inputs.error_model.threshold);
      }
      diag.precision = model.precision;
      diag.false_omission_rate = model.false_omission_rate;

      const auto counts = config.stratified_by_cbg ? resample_stratified(rng, observed)
                                                   : resample_pooled(rng, observed);
      std::vector<double> rates(counts.size(), kMissing);
      for (std::size_t slot = 0; slot < counts.size(); ++slot) {
        if (counts[slot].n_images < min_images) continue;
        rates[slot] = corrected_rate(static_cast<double>(counts[slot].n_pred_pos) /
                                         static_cast<double>(counts[slot].n_images),
                                     model);
      }
      for (const SchemePlan& plan : plans) {
        const DisparityTable table = plan.evaluator.evaluate(rates);
        std::vector<double> rel;
        std::vector<double> abs;
        for (const auto& row : plan.point.rows) {
          auto it = std::find_if(table.rows.begin(), table.rows.end(),
                                 [&](const auto& t) { return t.group_value == row.group_value; });
          if (it == table.rows.end()) {
            throw PreconditionError("group '" + row.group_value + "' of scheme '" +
                                    table.scheme + "' lost all support");
          }
          rel.push_back(it->relative_rate);
          abs.push_back(it->absolute_rate);
        }
        diag.relative.push_back(std::move(rel));
        diag.absolute.push_back(std::move(abs));
      }
    } catch (const PreconditionError& e) {
      diag.failed = true;
      diag.reason = e.what();
      diag.relative.clear();
      diag.absolute.clear();
    }
  };

  unsigned threads = config.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.n_replicates));
  if (threads <= 1) {
    for (std::size_t r = 0; r < config.n_replicates; ++r) run_replicate(r);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t r = t; r < config.n_replicates; r += threads) run_replicate(r);
      });
    }
  }

  for (const auto& d : result.diagnostics) {
    if (d.failed) ++result.n_failed;
  }
  const double allowed = config.max_failure_fraction *
                         static_cast<double>(config.n_replicates);
  if (static_cast<double>(result.n_failed) > allowed) {
    std::string reason;
    for (const auto& d : result.diagnostics) {
      if (d.failed) {
        reason = d.reason;
        break;
      }
    }
    throw PreconditionError("bootstrap: " + std::to_string(result.n_failed) + " of " +
                            std::to_string(config.n_replicates) +
                            " replicates failed (first: " + reason + ")");
  }

  for (std::size_t s = 0; s < plans.size(); ++s) {
    DisparityTable table = plans[s].point;
    for (std::size_t row = 0; row < table.rows.size(); ++row) {
      std::vector<double> rel;
      std::vector<double> abs;
      for (const auto& d : result.diagnostics) {
        if (d.failed) continue;
        rel.push_back(d.relative[s][row]);
        abs.push_back(d.absolute[s][row]);
      }
      table.rows[row].ci_half_width = kZ95 * sample_sd(rel);
      table.rows[row].absolute_ci_half_width = kZ95 * sample_sd(abs);
    }
    result.tables.push_back(std::move(table));
  }
  return result;
}

void write_diagnostics_jsonl(std::ostream& out, const BootstrapResult& result) {
  for (const auto& d : result.diagnostics) {
    nlohmann::ordered_json row;
    row["replicate"] = d.replicate;
    row["failed"] = d.failed;
    if (d.failed) {
      row["reason"] = d.reason;
    } else {
      row["precision"] = d.precision;
      row["false_omission_rate"] = d.false_omission_rate;
      nlohmann::ordered_json schemes = nlohmann::ordered_json::object();
      for (std::size_t s = 0; s < result.tables.size() && s < d.relative.size(); ++s) {
        nlohmann::ordered_json groups = nlohmann::ordered_json::object();
        const auto& rows = result.tables[s].rows;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          groups[rows[i].group_value] = d.relative[s][i];
        }
        schemes[result.tables[s].scheme] = std::move(groups);
      }
      row["relative"] = std::move(schemes);
    }
    out << row.dump() << '\n';
  }
}

}  // namespace deployaudit
