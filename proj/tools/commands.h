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

#ifndef DEPLOYAUDIT_TOOLS_COMMANDS_H_
#define DEPLOYAUDIT_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "deployaudit/classifier_eval.h"
#include "deployaudit/estimator.h"
#include "deployaudit/ingest.h"
#include "deployaudit/synth.h"
#include "run_config.h"

namespace deployaudit::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,         // bad flags or subcommand
  kSchemaError = 3,   // malformed or invalid input files
  kPrecondition = 4,  // inputs valid but insufficient (no labels, one class, ...)
  kRuntimeError = 5,  // anything else, e.g. unwritable output directory
};

struct ValidateResult {
  ClassifierErrorModel error_model;  // from the validation split
  MetricsReport metrics;             // on the test split when given
  CalibrationAudit calibration;
  std::vector<SubgroupMetricsRow> subgroup_metrics;
};

// Writes metrics.{json,csv}, error_model.json, calibration.{csv,json} and
// subgroup_metrics.csv into config.out.
ValidateResult cmd_validate(const RunConfig& config, std::ostream& log);

// Writes disparities.{csv,json} and prevalence.csv (plus bootstrap.jsonl and
// assignments.csv when requested) into config.out.
std::vector<DisparityTable> cmd_disparities(const RunConfig& config,
                                            std::ostream& log);

// Writes coverage.json, cbg_counts.csv, weekday_hour.csv and assignments.csv.
CoverageReport cmd_coverage(const RunConfig& config, std::ostream& log);

WorldFiles cmd_synth(const WorldSpec& spec, const std::filesystem::path& out,
                     std::ostream& log);

// Full command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace deployaudit::cli

#endif  // DEPLOYAUDIT_TOOLS_COMMANDS_H_
