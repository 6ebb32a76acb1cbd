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

#include "deployaudit/report.h"

#include <fstream>

#include "deployaudit/csv.h"
#include "deployaudit/errors.h"
#include "json.hpp"

namespace deployaudit {
namespace {

using nlohmann::ordered_json;

std::string num(double v) { return csv::format_double(v); }

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

void write_metrics_json(std::ostream& out, const MetricsReport& m) {
  ordered_json doc = {{"threshold", m.threshold},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"auc", m.auc},
                      {"average_precision", m.average_precision},
                      {"n", m.n},
                      {"n_positive", m.n_positive},
                      {"true_positive", m.counts.true_positive},
                      {"false_positive", m.counts.false_positive},
                      {"true_negative", m.counts.true_negative},
                      {"false_negative", m.counts.false_negative}};
  out << doc.dump(2) << '\n';
}

void write_metrics_csv(std::ostream& out, const MetricsReport& m) {
  out << "threshold,precision,recall,auc,average_precision,n,n_positive\n"
      << num(m.threshold) << ',' << num(m.precision) << ',' << num(m.recall) << ','
      << num(m.auc) << ',' << num(m.average_precision) << ',' << m.n << ','
      << m.n_positive << '\n';
}

void write_error_model_json(std::ostream& out, const ClassifierErrorModel& m) {
  ordered_json doc = {{"threshold", m.threshold},
                      {"precision", m.precision},
                      {"false_omission_rate", m.false_omission_rate},
                      {"n_pos_pred", m.n_pos_pred},
                      {"n_neg_pred", m.n_neg_pred},
                      {"se_precision", m.se_precision},
                      {"se_for", m.se_for}};
  out << doc.dump(2) << '\n';
}

ClassifierErrorModel read_error_model_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  try {
    const auto doc = nlohmann::json::parse(in);
    ClassifierErrorModel m;
    m.threshold = doc.at("threshold").get<double>();
    m.precision = doc.at("precision").get<double>();
    m.false_omission_rate = doc.at("false_omission_rate").get<double>();
    m.n_pos_pred = doc.value("n_pos_pred", std::size_t{0});
    m.n_neg_pred = doc.value("n_neg_pred", std::size_t{0});
    m.se_precision = doc.value("se_precision", 0.0);
    m.se_for = doc.value("se_for", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_calibration_csv(std::ostream& out, const CalibrationAudit& audit) {
  out << "subgroup,side,stratum,rate,half_width,n,insufficient,flagged\n";
  for (const auto& r : audit.rows) {
    out << csv::escape(r.subgroup) << ',' << to_string(r.side) << ','
        << (r.stratum ? 1 : 0) << ',' << num(r.rate) << ',' << num(r.half_width) << ','
        << r.n << ',' << (r.insufficient ? 1 : 0) << ',' << (r.flagged ? 1 : 0) << '\n';
  }
}

void write_calibration_json(std::ostream& out, const CalibrationAudit& audit) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : audit.rows) {
    rows.push_back({{"subgroup", r.subgroup},
                    {"side", to_string(r.side)},
                    {"stratum", r.stratum},
                    {"rate", r.rate},
                    {"half_width", r.half_width},
                    {"n", r.n},
                    {"insufficient", r.insufficient},
                    {"flagged", r.flagged}});
  }
  ordered_json doc = {{"rows", std::move(rows)},
                      {"flagged_subgroups", audit.flagged_subgroups}};
  out << doc.dump(2) << '\n';
}

void write_subgroup_metrics_csv(std::ostream& out,
                                std::span<const SubgroupMetricsRow> rows) {
  out << "subgroup,stratum,n,n_positive,auc,average_precision,precision,recall,"
         "insufficient\n";
  for (const auto& r : rows) {
    out << csv::escape(r.subgroup) << ',' << (r.stratum ? 1 : 0) << ',' << r.n << ','
        << r.n_positive << ',' << num(r.auc) << ',' << num(r.average_precision) << ','
        << num(r.precision) << ',' << num(r.recall) << ',' << (r.insufficient ? 1 : 0)
        << '\n';
  }
}

void write_disparities_csv(std::ostream& out,
                           std::span<const DisparityTable> tables) {
  out << "scheme,group,absolute_rate,relative_rate,ci_half_width,n_cbgs,population\n";
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      out << csv::escape(t.scheme) << ',' << csv::escape(r.group_value) << ','
          << num(r.absolute_rate) << ',' << num(r.relative_rate) << ',';
      if (r.ci_half_width) out << num(*r.ci_half_width);
      out << ',' << r.n_cbgs << ',' << r.population << '\n';
    }
  }
}

void write_disparities_json(std::ostream& out,
                            std::span<const DisparityTable> tables) {
  ordered_json doc = ordered_json::array();
  for (const auto& t : tables) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : t.rows) {
      rows.push_back({{"group", r.group_value},
                      {"absolute_rate", r.absolute_rate},
                      {"relative_rate", r.relative_rate},
                      {"ci_half_width", optional_number(r.ci_half_width)},
                      {"absolute_ci_half_width", optional_number(r.absolute_ci_half_width)},
                      {"n_cbgs", r.n_cbgs},
                      {"population", r.population}});
    }
    doc.push_back({{"scheme", t.scheme},
                   {"zone_filter", t.zone_filter ? ordered_json(to_string(*t.zone_filter))
                                                 : ordered_json(nullptr)},
                   {"city_average", t.city_average},
                   {"n_cbgs_analyzed", t.n_cbgs_analyzed},
                   {"n_cbgs_without_data", t.n_cbgs_without_data},
                   {"degenerate", t.degenerate},
                   {"unsupported_groups", t.unsupported_groups},
                   {"rows", std::move(rows)}});
  }
  out << doc.dump(2) << '\n';
}

void write_coverage_json(std::ostream& out, const CoverageReport& r) {
  ordered_json doc = {{"total_records", r.total_records},
                      {"duplicates_removed", r.duplicates_removed},
                      {"unassigned_records", r.unassigned_records},
                      {"records_outside_window", r.records_outside_window},
                      {"n_cbgs", r.n_cbgs},
                      {"cbgs_with_images", r.cbgs_with_images},
                      {"cbgs_with_images_fraction", r.cbgs_with_images_fraction},
                      {"mean_images_per_cbg", r.mean_images_per_cbg},
                      {"hour_mode", to_string(r.hour_mode)},
                      {"hours_in_window", r.hours_in_window},
                      {"hours_with_records", r.hours_with_records},
                      {"hours_covered", r.hours_covered},
                      {"cbgs_without_images", r.cbgs_without_images}};
  out << doc.dump(2) << '\n';
}

void write_cbg_counts_csv(std::ostream& out, const CoverageReport& r) {
  out << "cbg_id,n_images\n";
  for (const auto& [id, n] : r.per_cbg_counts) out << csv::escape(id) << ',' << n << '\n';
}

void write_weekday_hour_csv(std::ostream& out, const CoverageReport& r) {
  out << "weekday,hour,n_images\n";
  for (int d = 0; d < 7; ++d) {
    for (int h = 0; h < 24; ++h) {
      out << d << ',' << h << ',' << r.weekday_hour_counts[d][h] << '\n';
    }
  }
}

}  // namespace deployaudit
