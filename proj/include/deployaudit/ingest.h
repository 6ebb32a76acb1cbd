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

#ifndef DEPLOYAUDIT_INGEST_H_
#define DEPLOYAUDIT_INGEST_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deployaudit/clock.h"
#include "deployaudit/csv.h"
#include "deployaudit/errors.h"
#include "deployaudit/types.h"

namespace deployaudit {

// Record files are CSV with a header row or JSON Lines with named fields:
//   detections: image_id,lat,lng,timestamp,score
//   labels:     image_id,lat,lng,timestamp,score,label   (label in {0,1})
enum class RecordFormat { kCsv, kJsonl };

std::string_view to_string(RecordFormat format);
std::optional<RecordFormat> parse_record_format(std::string_view text);
// ".jsonl"/".ndjson" map to kJsonl, everything else to kCsv.
RecordFormat record_format_for(const std::filesystem::path& path);

// Streams records one at a time so arbitrarily large files never sit in
// memory as text. Structural problems (missing columns) throw SchemaError
// from the constructor; per-row problems surface through next().
class RecordReader {
 public:
  enum class Status { kRecord, kInvalid, kEnd };

  RecordReader(std::istream& in, RecordFormat format, std::string source,
               bool expect_label);

  // On kRecord `out` is filled; on kInvalid issue() describes the row.
  Status next(LabeledRecord& out);
  const RowIssue& issue() const { return issue_; }

 private:
  Status next_csv(LabeledRecord& out);
  Status next_jsonl(LabeledRecord& out);
  Status invalid(std::string message);

  csv::LineReader lines_;
  RecordFormat format_;
  std::string source_;
  bool expect_label_;
  std::string line_;
  std::vector<std::size_t> columns_;  // csv: image_id,lat,lng,timestamp,score[,label]
  std::size_t n_header_fields_ = 0;
  RowIssue issue_;
};

// Row-level problems are collected across the whole file and raised together
// as one ValidationError (at most kMaxReportedIssues are kept).
inline constexpr std::size_t kMaxReportedIssues = 50;

std::vector<DetectionRecord> read_detections(std::istream& in,
                                             RecordFormat format,
                                             std::string_view source);
std::vector<DetectionRecord> load_detections(const std::filesystem::path& path,
                                             RecordFormat format);
std::vector<LabeledRecord> read_labels(std::istream& in, RecordFormat format,
                                       std::string_view source);
std::vector<LabeledRecord> load_labels(const std::filesystem::path& path,
                                       RecordFormat format);

void write_detections(std::ostream& out,
                      std::span<const DetectionRecord> records,
                      RecordFormat format);
void write_labels(std::ostream& out, std::span<const LabeledRecord> records,
                  RecordFormat format);

// Census table: cbg_id,borough,neighborhood,zone_type,median_income,
// pop_density,pop_<group>... One pop_ column per group; pop_total is required.
// An empty (or "NA") median_income means missing.
std::vector<CensusBlockGroup> read_census(std::istream& in,
                                          std::string_view source);
std::vector<CensusBlockGroup> load_census(const std::filesystem::path& path);
void write_census(std::ostream& out, std::span<const CensusBlockGroup> cbgs);

// GeoJSON FeatureCollection of Polygon/MultiPolygon features, each carrying a
// `cbg_id` property. Only structure is checked here; ring validity is checked
// when the spatial index is built.
std::map<std::string, MultiPolygon> read_geometry(std::istream& in,
                                                  std::string_view source);
std::map<std::string, MultiPolygon> load_geometry(
    const std::filesystem::path& path);
void write_geometry(std::ostream& out, std::span<const CensusBlockGroup> cbgs);

// Moves each census row's geometry in. A census row with no feature is a
// GeometryError; features with no census row are ignored and counted.
std::size_t attach_geometry(std::vector<CensusBlockGroup>& cbgs,
                            std::map<std::string, MultiPolygon> geometry);

struct DedupResult {
  std::vector<DetectionRecord> records;
  std::size_t removed = 0;
};

// Keeps one record per (latitude, longitude, timestamp): the one with the
// smallest image_id. Survivors keep their input order.
DedupResult deduplicate(std::vector<DetectionRecord> records);

// Half-open [start, end) in UTC seconds.
struct TimeWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

enum class HourMode {
  kCalendar,    // distinct clock hours inside the window
  kHourOfWeek,  // distinct local (weekday, hour) slots the window spans
};

std::string_view to_string(HourMode mode);
std::optional<HourMode> parse_hour_mode(std::string_view text);

struct CoverageOptions {
  TimeWindow window;
  HourMode hour_mode = HourMode::kCalendar;
  LocalClock clock;
  std::size_t duplicates_removed = 0;
};

struct CoverageReport {
  std::size_t total_records = 0;
  std::size_t duplicates_removed = 0;
  std::size_t unassigned_records = 0;
  std::size_t records_outside_window = 0;
  std::size_t n_cbgs = 0;
  std::size_t cbgs_with_images = 0;
  double cbgs_with_images_fraction = 0.0;
  // Assigned images divided by every block group in the census set.
  double mean_images_per_cbg = 0.0;
  HourMode hour_mode = HourMode::kCalendar;
  std::size_t hours_in_window = 0;
  std::size_t hours_with_records = 0;
  double hours_covered = 0.0;
  std::map<std::string, std::size_t> per_cbg_counts;  // zeros included
  std::vector<std::string> cbgs_without_images;
  // [local weekday 0=Sunday][local hour], records inside the window only.
  std::array<std::array<std::size_t, 24>, 7> weekday_hour_counts{};
};

// `assignments` is aligned with `records`; nullopt marks a record that fell
// outside every block group.
CoverageReport coverage_report(
    std::span<const DetectionRecord> records,
    std::span<const std::optional<std::string>> assignments,
    std::span<const CensusBlockGroup> cbgs, const CoverageOptions& options);

}  // namespace deployaudit

#endif  // DEPLOYAUDIT_INGEST_H_
