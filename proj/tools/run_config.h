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

#ifndef DEPLOYAUDIT_TOOLS_RUN_CONFIG_H_
#define DEPLOYAUDIT_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deployaudit/bootstrap.h"
#include "deployaudit/ingest.h"

namespace deployaudit {

// Everything a pipeline run needs. Loaded from a JSON file (paths relative to
// that file) and then overridden field by field from command-line flags.
struct RunConfig {
  std::optional<std::filesystem::path> detections;
  std::optional<std::filesystem::path> labels;       // validation split
  std::optional<std::filesystem::path> test_labels;  // held-out split
  std::optional<std::filesystem::path> census;
  std::optional<std::filesystem::path> geometry;
  std::optional<std::filesystem::path> error_model;  // error_model.json
  std::optional<RecordFormat> record_format;         // default: by extension

  // nullopt means "auto": the F1-maximizing score on the labels.
  std::optional<double> threshold;
  std::optional<double> precision;
  std::optional<double> false_omission_rate;

  std::vector<std::string> schemes = {"race", "borough", "zone_type",
                                      "density_quartile", "income_quartile"};
  bool residential_only = false;
  std::size_t min_images = 1;
  BootstrapConfig bootstrap;
  bool bootstrap_diagnostics = false;
  bool write_assignments = false;

  std::int64_t utc_offset_seconds = -5 * 3600;
  std::optional<TimeWindow> window;
  HourMode hour_mode = HourMode::kCalendar;
  std::string focus_borough = "Manhattan";
  unsigned threads = 0;

  std::filesystem::path out = "out";
};

// Throws SchemaError for malformed JSON or unknown values.
RunConfig load_run_config(const std::filesystem::path& path);

// Referenced files must exist; "auto" threshold requires labels.
void check_paths(const RunConfig& config);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_TOOLS_RUN_CONFIG_H_
