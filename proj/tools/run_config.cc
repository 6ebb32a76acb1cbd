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

#include "run_config.h"

#include <fstream>

#include "deployaudit/errors.h"
#include "json.hpp"

namespace deployaudit {
namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw SchemaError(path.string() + ": config must be an object");
  const auto base = path.parent_path();
  RunConfig c;
  try {
    auto get_path = [&](const char* key, std::optional<std::filesystem::path>& field) {
      if (doc.contains(key)) field = resolve(base, doc[key].get<std::string>());
    };
    get_path("detections", c.detections);
    get_path("labels", c.labels);
    get_path("test_labels", c.test_labels);
    get_path("census", c.census);
    get_path("geometry", c.geometry);
    get_path("error_model", c.error_model);
    if (doc.contains("format")) {
      c.record_format = parse_record_format(doc["format"].get<std::string>());
      if (!c.record_format) throw SchemaError(path.string() + ": format must be csv or jsonl");
    }
    if (doc.contains("threshold")) {
      const auto& t = doc["threshold"];
      if (t.is_string() && t.get<std::string>() == "auto") {
        c.threshold.reset();
      } else if (t.is_number()) {
        c.threshold = t.get<double>();
      } else {
        throw SchemaError(path.string() + ": threshold must be a number or \"auto\"");
      }
    }
    if (doc.contains("precision")) c.precision = doc["precision"].get<double>();
    if (doc.contains("false_omission_rate")) {
      c.false_omission_rate = doc["false_omission_rate"].get<double>();
    }
    if (doc.contains("schemes")) c.schemes = doc["schemes"].get<std::vector<std::string>>();
    c.residential_only = doc.value("residential_only", c.residential_only);
    c.min_images = doc.value("min_images", c.min_images);
    c.write_assignments = doc.value("write_assignments", c.write_assignments);
    c.focus_borough = doc.value("focus_borough", c.focus_borough);
    c.threads = doc.value("threads", c.threads);
    if (doc.contains("utc_offset_hours")) {
      c.utc_offset_seconds =
          static_cast<std::int64_t>(doc["utc_offset_hours"].get<double>() * 3600.0);
    }
    if (doc.contains("window")) {
      c.window = TimeWindow{doc["window"].at("start").get<std::int64_t>(),
                            doc["window"].at("end").get<std::int64_t>()};
    }
    if (doc.contains("hour_mode")) {
      auto mode = parse_hour_mode(doc["hour_mode"].get<std::string>());
      if (!mode) throw SchemaError(path.string() + ": hour_mode must be calendar or hour_of_week");
      c.hour_mode = *mode;
    }
    if (doc.contains("bootstrap")) {
      const auto& b = doc["bootstrap"];
      c.bootstrap.n_replicates = b.value("replicates", c.bootstrap.n_replicates);
      c.bootstrap.seed = b.value("seed", c.bootstrap.seed);
      c.bootstrap.stratified_by_cbg = b.value("stratified_by_cbg", c.bootstrap.stratified_by_cbg);
      c.bootstrap_diagnostics = b.value("diagnostics", c.bootstrap_diagnostics);
      if (b.contains("resample_unit")) {
        auto unit = parse_resample_unit(b["resample_unit"].get<std::string>());
        if (!unit) {
          throw SchemaError(path.string() +
                            ": resample_unit must be images or images_and_validation");
        }
        c.bootstrap.resample_unit = *unit;
      }
    }
    if (doc.contains("out")) c.out = resolve(base, doc["out"].get<std::string>());
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return c;
}

void check_paths(const RunConfig& config) {
  for (const auto* p : {&config.detections, &config.labels, &config.test_labels,
                        &config.census, &config.geometry, &config.error_model}) {
    if (*p && !std::filesystem::exists(**p)) {
      throw PreconditionError("input file '" + (*p)->string() + "' does not exist");
    }
  }
}

}  // namespace deployaudit
