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

#ifndef DEPLOYAUDIT_BOOTSTRAP_H_
#define DEPLOYAUDIT_BOOTSTRAP_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deployaudit/classifier_eval.h"
#include "deployaudit/estimator.h"
#include "deployaudit/types.h"

namespace deployaudit {

enum class ResampleUnit {
  kImages,                // analysis images only; error model held fixed
  kImagesAndValidation,   // also resample the labeled set and re-estimate it
};

std::string_view to_string(ResampleUnit unit);
std::optional<ResampleUnit> parse_resample_unit(std::string_view text);

struct BootstrapConfig {
  std::size_t n_replicates = 1000;
  std::uint64_t seed = 0;
  ResampleUnit resample_unit = ResampleUnit::kImages;
  // Resample within each block group (image counts fixed) rather than from
  // the pooled image set.
  bool stratified_by_cbg = true;
  unsigned threads = 0;  // 0 = hardware concurrency
  double max_failure_fraction = 0.01;
};

struct BootstrapInputs {
  std::span<const CensusBlockGroup> cbgs;
  CbgCountMap counts;
  ClassifierErrorModel error_model;
  // Required for kImagesAndValidation; the model is re-estimated at
  // error_model.threshold.
  std::span<const LabeledRecord> validation;
  std::size_t min_images = 1;
  std::optional<ZoneType> zone_filter;
};

struct ReplicateDiagnostic {
  std::size_t replicate = 0;
  bool failed = false;
  std::string reason;
  double precision = 0.0;
  double false_omission_rate = 0.0;
  // [scheme][row] relative rates, rows as in the point-estimate tables.
  std::vector<std::vector<double>> relative;
  std::vector<std::vector<double>> absolute;
};

struct BootstrapResult {
  std::vector<DisparityTable> tables;  // point estimates with CIs filled
  std::size_t n_replicates = 0;
  std::size_t n_failed = 0;
  std::vector<ReplicateDiagnostic> diagnostics;
};

// Replicate r draws from Philox4x32(seed, r) only, so results are identical
// for any thread count. Each row's ci_half_width is 1.96 times the (n-1)
// standard deviation of its relative rate over successful replicates, and
// absolute_ci_half_width the same for the absolute rate. A replicate fails
// when a reported group loses all support or the error model cannot be
// re-estimated; more than max_failure_fraction failures is an error.
BootstrapResult bootstrap_disparities(const BootstrapInputs& inputs,
                                      std::span<const GroupingScheme> schemes,
                                      const BootstrapConfig& config);

// Sample standard deviation with the n-1 denominator; 0 for fewer than two.
double sample_sd(std::span<const double> values);

// One JSON object per replicate.
void write_diagnostics_jsonl(std::ostream& out, const BootstrapResult& result);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_BOOTSTRAP_H_
