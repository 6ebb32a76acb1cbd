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

#ifndef DEPLOYAUDIT_REPORT_H_
#define DEPLOYAUDIT_REPORT_H_

#include <filesystem>
#include <ostream>
#include <span>

#include "deployaudit/classifier_eval.h"
#include "deployaudit/estimator.h"
#include "deployaudit/ingest.h"

// Flat, plot-ready CSV and JSON renderings of every report type.
namespace deployaudit {

void write_metrics_json(std::ostream& out, const MetricsReport& metrics);
void write_metrics_csv(std::ostream& out, const MetricsReport& metrics);

void write_error_model_json(std::ostream& out, const ClassifierErrorModel& model);
ClassifierErrorModel read_error_model_json(const std::filesystem::path& path);

// subgroup,side,stratum,rate,half_width,n,insufficient,flagged
void write_calibration_csv(std::ostream& out, const CalibrationAudit& audit);
void write_calibration_json(std::ostream& out, const CalibrationAudit& audit);

// subgroup,stratum,n,n_positive,auc,average_precision,precision,recall,insufficient
void write_subgroup_metrics_csv(std::ostream& out,
                                std::span<const SubgroupMetricsRow> rows);

// scheme,group,absolute_rate,relative_rate,ci_half_width,n_cbgs,population
// (ci_half_width empty when not bootstrapped)
void write_disparities_csv(std::ostream& out,
                           std::span<const DisparityTable> tables);
void write_disparities_json(std::ostream& out,
                            std::span<const DisparityTable> tables);

void write_coverage_json(std::ostream& out, const CoverageReport& report);
// cbg_id,n_images
void write_cbg_counts_csv(std::ostream& out, const CoverageReport& report);
// weekday,hour,n_images  (weekday 0 = Sunday, local time)
void write_weekday_hour_csv(std::ostream& out, const CoverageReport& report);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_REPORT_H_
