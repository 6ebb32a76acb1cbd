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

#include "deployaudit/ingest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

#include "json.hpp"

namespace deployaudit {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 6> kRecordFields = {
    "image_id", "lat", "lng", "timestamp", "score", "label"};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  return in;
}

// Shared range checks; returns an empty string when the record is valid.
std::string check_record(const DetectionRecord& r) {
  if (r.image_id.empty()) return "empty image_id";
  if (!(r.latitude >= -90.0 && r.latitude <= 90.0)) {
    return "lat " + csv::format_double(r.latitude) + " outside [-90, 90]";
  }
  if (!(r.longitude >= -180.0 && r.longitude <= 180.0)) {
    return "lng " + csv::format_double(r.longitude) + " outside [-180, 180]";
  }
  if (!(r.score >= 0.0 && r.score <= 1.0)) {  // also rejects NaN
    return "score " + csv::format_double(r.score) + " outside [0, 1]";
  }
  return {};
}

template <typename Record>
std::vector<Record> collect(RecordReader& reader, std::string_view source) {
  std::vector<Record> out;
  std::vector<RowIssue> issues;
  std::size_t n_issues = 0;
  LabeledRecord rec;
  for (;;) {
    const auto status = reader.next(rec);
    if (status == RecordReader::Status::kEnd) break;
    if (status == RecordReader::Status::kInvalid) {
      if (issues.size() < kMaxReportedIssues) issues.push_back(reader.issue());
      ++n_issues;
      continue;
    }
    if constexpr (std::is_same_v<Record, LabeledRecord>) {
      out.push_back(std::move(rec));
    } else {
      out.push_back(std::move(rec.detection));
    }
  }
  if (n_issues > 0) {
    if (n_issues > issues.size()) {
      issues.push_back({0, std::to_string(n_issues - issues.size()) +
                               " further invalid row(s) not listed"});
    }
    throw ValidationError(std::string(source), std::move(issues));
  }
  return out;
}

void write_record_csv(std::ostream& out, const DetectionRecord& r) {
  out << csv::escape(r.image_id) << ',' << csv::format_double(r.latitude)
      << ',' << csv::format_double(r.longitude) << ',' << r.timestamp << ','
      << csv::format_double(r.score);
}

void write_record_json(std::ostream& out, const DetectionRecord& r) {
  out << "{\"image_id\":" << json(r.image_id).dump()
      << ",\"lat\":" << csv::format_double(r.latitude)
      << ",\"lng\":" << csv::format_double(r.longitude)
      << ",\"timestamp\":" << r.timestamp
      << ",\"score\":" << csv::format_double(r.score);
}

Ring parse_ring(const json& coords, const std::string& cbg_id,
                std::string_view source) {
  if (!coords.is_array()) {
    throw SchemaError(std::string(source) + ": ring of '" + cbg_id +
                      "' is not an array");
  }
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() ||
        !pos[1].is_number()) {
      throw SchemaError(std::string(source) + ": bad position in '" + cbg_id +
                        "'");
    }
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const json& coords, const std::string& cbg_id,
                      std::string_view source) {
  if (!coords.is_array()) {
    throw SchemaError(std::string(source) + ": polygon of '" + cbg_id +
                      "' is not an array");
  }
  Polygon poly;
  for (const auto& ring : coords) poly.rings.push_back(parse_ring(ring, cbg_id, source));
  return poly;
}

json ring_to_json(const Ring& ring) {
  json out = json::array();
  for (const Vertex& v : ring) out.push_back(json::array({v.x, v.y}));
  return out;
}

}  // namespace

std::string_view to_string(RecordFormat format) {
  return format == RecordFormat::kCsv ? "csv" : "jsonl";
}

std::optional<RecordFormat> parse_record_format(std::string_view text) {
  if (text == "csv") return RecordFormat::kCsv;
  if (text == "jsonl") return RecordFormat::kJsonl;
  return std::nullopt;
}

RecordFormat record_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") return RecordFormat::kJsonl;
  return RecordFormat::kCsv;
}

RecordReader::RecordReader(std::istream& in, RecordFormat format,
                           std::string source, bool expect_label)
    : lines_(in),
      format_(format),
      source_(std::move(source)),
      expect_label_(expect_label) {
  if (format_ != RecordFormat::kCsv) return;
  if (!lines_.next(line_)) {
    throw SchemaError(source_ + ": empty file, expected a header row");
  }
  auto fields = csv::split_line(line_);
  if (!fields) throw SchemaError(source_ + ": malformed header row");
  const csv::Header header(std::move(*fields));
  n_header_fields_ = header.size();
  const std::size_t n = expect_label_ ? 6 : 5;
  for (std::size_t i = 0; i < n; ++i) {
    columns_.push_back(header.require(kRecordFields[i], source_));
  }
}

RecordReader::Status RecordReader::invalid(std::string message) {
  issue_ = {lines_.line_number(), std::move(message)};
  return Status::kInvalid;
}

RecordReader::Status RecordReader::next(LabeledRecord& out) {
  return format_ == RecordFormat::kCsv ? next_csv(out) : next_jsonl(out);
}

RecordReader::Status RecordReader::next_csv(LabeledRecord& out) {
  do {
    if (!lines_.next(line_)) return Status::kEnd;
  } while (line_.empty());

  auto fields = csv::split_line(line_);
  if (!fields) return invalid("unterminated quote");
  if (fields->size() != n_header_fields_) {
    return invalid("expected " + std::to_string(n_header_fields_) +
                   " fields, found " + std::to_string(fields->size()));
  }
  const auto& f = *fields;
  DetectionRecord& r = out.detection;
  r.image_id = f[columns_[0]];
  const auto lat = csv::parse_double(f[columns_[1]]);
  if (!lat) return invalid("lat is not a number: '" + f[columns_[1]] + "'");
  const auto lng = csv::parse_double(f[columns_[2]]);
  if (!lng) return invalid("lng is not a number: '" + f[columns_[2]] + "'");
  const auto ts = csv::parse_int(f[columns_[3]]);
  if (!ts) return invalid("timestamp is not an integer: '" + f[columns_[3]] + "'");
  const auto score = csv::parse_double(f[columns_[4]]);
  if (!score) return invalid("score is not a number: '" + f[columns_[4]] + "'");
  r.latitude = *lat;
  r.longitude = *lng;
  r.timestamp = *ts;
  r.score = *score;
  if (auto problem = check_record(r); !problem.empty()) return invalid(problem);
  out.label = false;
  if (expect_label_) {
    const std::string& label = f[columns_[5]];
    if (label != "0" && label != "1") {
      return invalid("label must be 0 or 1, found '" + label + "'");
    }
    out.label = label == "1";
  }
  return Status::kRecord;
}

RecordReader::Status RecordReader::next_jsonl(LabeledRecord& out) {
  do {
    if (!lines_.next(line_)) return Status::kEnd;
  } while (line_.find_first_not_of(" \t") == std::string::npos);

  json row;
  try {
    row = json::parse(line_);
  } catch (const json::parse_error& e) {
    return invalid(std::string("invalid JSON: ") + e.what());
  }
  if (!row.is_object()) return invalid("row is not a JSON object");
  const std::size_t n = expect_label_ ? 6 : 5;
  for (std::size_t i = 0; i < n; ++i) {
    if (!row.contains(kRecordFields[i])) {
      throw SchemaError(source_ + ": line " +
                        std::to_string(lines_.line_number()) +
                        ": missing required field '" +
                        std::string(kRecordFields[i]) + "'");
    }
  }
  DetectionRecord& r = out.detection;
  const json& id = row["image_id"];
  if (id.is_string()) {
    r.image_id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    r.image_id = id.dump();
  } else {
    return invalid("image_id must be a string");
  }
  if (!row["lat"].is_number()) return invalid("lat is not a number");
  if (!row["lng"].is_number()) return invalid("lng is not a number");
  if (!row["score"].is_number()) return invalid("score is not a number");
  if (!row["timestamp"].is_number_integer()) {
    return invalid("timestamp is not an integer");
  }
  r.latitude = row["lat"].get<double>();
  r.longitude = row["lng"].get<double>();
  r.timestamp = row["timestamp"].get<std::int64_t>();
  r.score = row["score"].get<double>();
  if (auto problem = check_record(r); !problem.empty()) return invalid(problem);
  out.label = false;
  if (expect_label_) {
    const json& label = row["label"];
    if (label.is_boolean()) {
      out.label = label.get<bool>();
    } else if (label.is_number_integer() &&
               (label.get<std::int64_t>() == 0 || label.get<std::int64_t>() == 1)) {
      out.label = label.get<std::int64_t>() == 1;
    } else {
      return invalid("label must be 0 or 1, found " + label.dump());
    }
  }
  return Status::kRecord;
}

std::vector<DetectionRecord> read_detections(std::istream& in,
                                             RecordFormat format,
                                             std::string_view source) {
  RecordReader reader(in, format, std::string(source), false);
  return collect<DetectionRecord>(reader, source);
}

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path,
                                             RecordFormat format) {
  auto in = open_input(path);
  return read_detections(in, format, path.string());
}

std::vector<LabeledRecord> read_labels(std::istream& in, RecordFormat format,
                                       std::string_view source) {
  RecordReader reader(in, format, std::string(source), true);
  return collect<LabeledRecord>(reader, source);
}

std::vector<LabeledRecord> load_labels(const std::filesystem::path& path,
                                       RecordFormat format) {
  auto in = open_input(path);
  return read_labels(in, format, path.string());
}

void write_detections(std::ostream& out,
                      std::span<const DetectionRecord> records,
                      RecordFormat format) {
  if (format == RecordFormat::kCsv) {
    out << "image_id,lat,lng,timestamp,score\n";
    for (const auto& r : records) {
      write_record_csv(out, r);
      out << '\n';
    }
  } else {
    for (const auto& r : records) {
      write_record_json(out, r);
      out << "}\n";
    }
  }
}

void write_labels(std::ostream& out, std::span<const LabeledRecord> records,
                  RecordFormat format) {
  if (format == RecordFormat::kCsv) {
    out << "image_id,lat,lng,timestamp,score,label\n";
    for (const auto& r : records) {
      write_record_csv(out, r.detection);
      out << ',' << (r.label ? 1 : 0) << '\n';
    }
  } else {
    for (const auto& r : records) {
      write_record_json(out, r.detection);
      out << ",\"label\":" << (r.label ? 1 : 0) << "}\n";
    }
  }
}

std::vector<CensusBlockGroup> read_census(std::istream& in,
                                          std::string_view source) {
  const std::string src(source);
  csv::LineReader lines(in);
  std::string line;
  if (!lines.next(line)) throw SchemaError(src + ": empty census file");
  auto names = csv::split_line(line);
  if (!names) throw SchemaError(src + ": malformed header row");
  const csv::Header header(std::move(*names));
  const std::size_t c_id = header.require("cbg_id", src);
  const std::size_t c_borough = header.require("borough", src);
  const std::size_t c_hood = header.require("neighborhood", src);
  const std::size_t c_zone = header.require("zone_type", src);
  const std::size_t c_income = header.require("median_income", src);
  const std::size_t c_density = header.require("pop_density", src);
  header.require("pop_" + std::string(kTotalPopulation), src);
  std::vector<std::pair<std::string, std::size_t>> pop_columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header.names()[i];
    if (name.starts_with("pop_") && name != "pop_density") {
      pop_columns.emplace_back(name.substr(4), i);
    }
  }

  std::vector<CensusBlockGroup> out;
  std::vector<RowIssue> issues;
  std::set<std::string, std::less<>> seen;
  auto fail = [&](std::string message) {
    if (issues.size() < kMaxReportedIssues) {
      issues.push_back({lines.line_number(), std::move(message)});
    }
  };
  while (lines.next(line)) {
    if (line.empty()) continue;
    auto fields = csv::split_line(line);
    if (!fields || fields->size() != header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields");
      continue;
    }
    const auto& f = *fields;
    CensusBlockGroup cbg;
    cbg.cbg_id = f[c_id];
    if (cbg.cbg_id.empty()) {
      fail("empty cbg_id");
      continue;
    }
    if (!seen.insert(cbg.cbg_id).second) {
      fail("duplicate cbg_id '" + cbg.cbg_id + "'");
      continue;
    }
    cbg.borough = f[c_borough];
    cbg.neighborhood = f[c_hood];
    const auto zone = parse_zone_type(f[c_zone]);
    if (!zone) {
      fail("unknown zone_type '" + f[c_zone] + "'");
      continue;
    }
    cbg.zone_type = *zone;
    if (!f[c_income].empty() && f[c_income] != "NA") {
      cbg.median_income = csv::parse_double(f[c_income]);
      if (!cbg.median_income || !std::isfinite(*cbg.median_income)) {
        fail("median_income is not a number: '" + f[c_income] + "'");
        continue;
      }
    }
    const auto density = csv::parse_double(f[c_density]);
    if (!density || !(*density >= 0.0) || std::isinf(*density)) {
      fail("pop_density must be a non-negative number");
      continue;
    }
    cbg.population_density = *density;
    bool ok = true;
    for (const auto& [group, col] : pop_columns) {
      const auto n = csv::parse_int(f[col]);
      if (!n || *n < 0) {
        fail("pop_" + group + " must be a non-negative integer, found '" +
             f[col] + "'");
        ok = false;
        break;
      }
      cbg.populations.emplace(group, *n);
    }
    if (ok) out.push_back(std::move(cbg));
  }
  if (!issues.empty()) throw ValidationError(src, std::move(issues));
  return out;
}

std::vector<CensusBlockGroup> load_census(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_census(in, path.string());
}

void write_census(std::ostream& out, std::span<const CensusBlockGroup> cbgs) {
  std::set<std::string> groups;
  for (const auto& c : cbgs) {
    for (const auto& [g, n] : c.populations) groups.insert(g);
  }
  groups.insert(std::string(kTotalPopulation));
  out << "cbg_id,borough,neighborhood,zone_type,median_income,pop_density";
  for (const auto& g : groups) out << ",pop_" << g;
  out << '\n';
  for (const auto& c : cbgs) {
    out << csv::escape(c.cbg_id) << ',' << csv::escape(c.borough) << ','
        << csv::escape(c.neighborhood) << ',' << to_string(c.zone_type) << ',';
    if (c.median_income) out << csv::format_double(*c.median_income);
    out << ',' << csv::format_double(c.population_density);
    for (const auto& g : groups) out << ',' << c.population(g);
    out << '\n';
  }
}

std::map<std::string, MultiPolygon> read_geometry(std::istream& in,
                                                  std::string_view source) {
  const std::string src(source);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(src + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw SchemaError(src + ": expected a GeoJSON FeatureCollection");
  }
  std::map<std::string, MultiPolygon> out;
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const std::string where = src + ": feature " + std::to_string(index++);
    if (!feature.is_object() || !feature.contains("properties") ||
        !feature["properties"].is_object() ||
        !feature["properties"].contains("cbg_id")) {
      throw SchemaError(where + ": missing property 'cbg_id'");
    }
    const json& id = feature["properties"]["cbg_id"];
    std::string cbg_id;
    if (id.is_string()) {
      cbg_id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      cbg_id = id.dump();
    } else {
      throw SchemaError(where + ": cbg_id must be a string");
    }
    if (!feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw SchemaError(where + ": missing geometry");
    }
    const json& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (!geom.contains("coordinates")) {
      throw SchemaError(where + ": geometry has no coordinates");
    }
    MultiPolygon shape;
    if (type == "Polygon") {
      shape.push_back(parse_polygon(geom["coordinates"], cbg_id, src));
    } else if (type == "MultiPolygon") {
      if (!geom["coordinates"].is_array()) {
        throw SchemaError(where + ": MultiPolygon coordinates not an array");
      }
      for (const auto& poly : geom["coordinates"]) {
        shape.push_back(parse_polygon(poly, cbg_id, src));
      }
    } else {
      throw SchemaError(where + ": unsupported geometry type '" + type + "'");
    }
    if (!out.emplace(cbg_id, std::move(shape)).second) {
      throw SchemaError(where + ": duplicate cbg_id '" + cbg_id + "'");
    }
  }
  return out;
}

std::map<std::string, MultiPolygon> load_geometry(
    const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_geometry(in, path.string());
}

void write_geometry(std::ostream& out, std::span<const CensusBlockGroup> cbgs) {
  json features = json::array();
  for (const auto& c : cbgs) {
    json coords = json::array();
    for (const Polygon& poly : c.geometry) {
      json rings = json::array();
      for (const Ring& ring : poly.rings) rings.push_back(ring_to_json(ring));
      coords.push_back(std::move(rings));
    }
    json geometry;
    if (c.geometry.size() == 1) {
      geometry = {{"type", "Polygon"}, {"coordinates", coords[0]}};
    } else {
      geometry = {{"type", "MultiPolygon"}, {"coordinates", coords}};
    }
    features.push_back({{"type", "Feature"},
                        {"properties", {{"cbg_id", c.cbg_id}}},
                        {"geometry", std::move(geometry)}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  out << doc.dump() << '\n';
}

std::size_t attach_geometry(std::vector<CensusBlockGroup>& cbgs,
                            std::map<std::string, MultiPolygon> geometry) {
  for (auto& c : cbgs) {
    auto it = geometry.find(c.cbg_id);
    if (it == geometry.end()) {
      throw GeometryError(c.cbg_id, "no feature in the geometry file");
    }
    c.geometry = std::move(it->second);
    geometry.erase(it);
  }
  return geometry.size();
}

DedupResult deduplicate(std::vector<DetectionRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    const auto& r = records[i];
    return std::tie(r.latitude, r.longitude, r.timestamp, r.image_id);
  };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  std::vector<char> keep(records.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& r = records[order[k]];
    if (k == 0) {
      keep[order[k]] = 1;
      continue;
    }
    const auto& prev = records[order[k - 1]];
    const bool same = r.latitude == prev.latitude &&
                      r.longitude == prev.longitude &&
                      r.timestamp == prev.timestamp;
    if (!same) keep[order[k]] = 1;
  }

  DedupResult result;
  result.records.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) result.records.push_back(std::move(records[i]));
  }
  result.removed = records.size() - result.records.size();
  return result;
}

std::string_view to_string(HourMode mode) {
  return mode == HourMode::kCalendar ? "calendar" : "hour_of_week";
}

std::optional<HourMode> parse_hour_mode(std::string_view text) {
  if (text == "calendar") return HourMode::kCalendar;
  if (text == "hour_of_week") return HourMode::kHourOfWeek;
  return std::nullopt;
}

CoverageReport coverage_report(
    std::span<const DetectionRecord> records,
    std::span<const std::optional<std::string>> assignments,
    std::span<const CensusBlockGroup> cbgs, const CoverageOptions& options) {
  const TimeWindow& w = options.window;
  if (w.end <= w.start) {
    throw PreconditionError("coverage window is empty");
  }
  if (assignments.size() != records.size()) {
    throw PreconditionError("coverage: " + std::to_string(assignments.size()) +
                            " assignments for " +
                            std::to_string(records.size()) + " records");
  }

  CoverageReport report;
  report.total_records = records.size();
  report.duplicates_removed = options.duplicates_removed;
  report.n_cbgs = cbgs.size();
  report.hour_mode = options.hour_mode;
  for (const auto& c : cbgs) report.per_cbg_counts.emplace(c.cbg_id, 0);

  std::size_t assigned = 0;
  for (const auto& a : assignments) {
    if (!a) {
      ++report.unassigned_records;
      continue;
    }
    auto it = report.per_cbg_counts.find(*a);
    if (it == report.per_cbg_counts.end()) {
      ++report.unassigned_records;
      continue;
    }
    ++it->second;
    ++assigned;
  }
  for (const auto& [id, n] : report.per_cbg_counts) {
    if (n > 0) {
      ++report.cbgs_with_images;
    } else {
      report.cbgs_without_images.push_back(id);
    }
  }
  if (report.n_cbgs > 0) {
    report.cbgs_with_images_fraction =
        static_cast<double>(report.cbgs_with_images) / report.n_cbgs;
    report.mean_images_per_cbg = static_cast<double>(assigned) / report.n_cbgs;
  }

  const LocalClock& clock = options.clock;
  const std::int64_t first_hour = floor_div(w.start, 3600);
  const std::int64_t last_hour = floor_div(w.end - 1, 3600);
  std::set<std::int64_t> hours_seen;
  for (const auto& r : records) {
    if (r.timestamp < w.start || r.timestamp >= w.end) {
      ++report.records_outside_window;
      continue;
    }
    ++report.weekday_hour_counts[clock.weekday(r.timestamp)][clock.hour(r.timestamp)];
    if (options.hour_mode == HourMode::kCalendar) {
      hours_seen.insert(floor_div(r.timestamp, 3600));
    } else {
      hours_seen.insert(clock.hour_of_week(r.timestamp));
    }
  }

  if (options.hour_mode == HourMode::kCalendar) {
    report.hours_in_window = static_cast<std::size_t>(last_hour - first_hour + 1);
  } else {
    std::set<int> slots;
    for (std::int64_t h = first_hour; h <= last_hour && slots.size() < 168; ++h) {
      slots.insert(clock.hour_of_week(std::max(h * 3600, w.start)));
    }
    report.hours_in_window = slots.size();
  }
  report.hours_with_records = hours_seen.size();
  report.hours_covered = static_cast<double>(report.hours_with_records) /
                         static_cast<double>(report.hours_in_window);
  return report;
}

}  // namespace deployaudit
