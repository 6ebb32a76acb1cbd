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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "deployaudit/errors.h"
#include "oracles.h"

namespace deployaudit {
namespace {

DetectionRecord rec(std::string id, double lat, double lng, std::int64_t ts,
                    double score = 0.5) {
  return {std::move(id), lat, lng, ts, score};
}

std::vector<DetectionRecord> parse(const std::string& text,
                                   RecordFormat format = RecordFormat::kCsv) {
  std::istringstream in(text);
  return read_detections(in, format, "test");
}

TEST(Ingest, ReadsValidCsv) {
  const auto records = parse(
      "image_id,lat,lng,timestamp,score\n"
      "a,40.7,-74.0,1590969600,0.1\n"
      "b,40.8,-73.9,1590969601,1\n"
      "c,40.6,-74.1,1590969602,0\n");
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[1], rec("b", 40.8, -73.9, 1590969601, 1.0));
}

TEST(Ingest, ColumnOrderAndExtraColumnsAreAllowed) {
  const auto records = parse(
      "score,extra,timestamp,lng,lat,image_id\r\n"
      "0.25,x,5,-74,40,\"id,1\"\r\n");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0], rec("id,1", 40, -74, 5, 0.25));
}

TEST(Ingest, OutOfRangeScoreCitesRow) {
  try {
    parse("image_id,lat,lng,timestamp,score\na,40,-74,0,0.5\nb,40,-74,0,1.3\n");
    FAIL() << "accepted score 1.3";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_EQ(e.issues()[0].line, 3u);
    EXPECT_NE(e.issues()[0].message.find("score"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Ingest, RowErrorsAreCollected) {
  try {
    parse(
        "image_id,lat,lng,timestamp,score\n"
        "a,91,-74,0,0.5\n"
        "b,40,-181,0,0.5\n"
        ",40,-74,0,0.5\n"
        "d,40,-74,1.5,0.5\n"
        "e,40,-74,0,nan\n"
        "f,40,-74\n");
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.issues().size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(e.issues()[i].line, i + 2);
  }
}

TEST(Ingest, MissingColumnIsSchemaError) {
  try {
    parse("image_id,lat,timestamp,score\na,40,0,0.5\n");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("'lng'"), std::string::npos);
  }
  EXPECT_THROW(parse("{\"image_id\":\"a\",\"lat\":1,\"lng\":2,\"score\":0.5}\n",
                     RecordFormat::kJsonl),
               SchemaError);
}

TEST(Ingest, JsonlRecords) {
  const auto records = parse(
      "{\"image_id\":\"a\",\"lat\":40.5,\"lng\":-74,\"timestamp\":7,\"score\":0.5}\n"
      "\n"
      "{\"lng\":-73,\"lat\":41,\"score\":1,\"timestamp\":8,\"image_id\":\"b\"}\n",
      RecordFormat::kJsonl);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[1], rec("b", 41, -73, 8, 1));
  EXPECT_THROW(parse("{\"image_id\":\"a\",\"lat\":40.5,\"lng\":-74,\"timestamp\":7,\"score\":2}\n",
                     RecordFormat::kJsonl),
               ValidationError);
}

TEST(Ingest, Labels) {
  std::istringstream good("image_id,lat,lng,timestamp,score,label\na,1,2,3,0.5,1\nb,1,2,3,0.5,0\n");
  const auto labels = read_labels(good, RecordFormat::kCsv, "labels");
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_TRUE(labels[0].label);
  EXPECT_FALSE(labels[1].label);
  std::istringstream bad("image_id,lat,lng,timestamp,score,label\na,1,2,3,0.5,2\n");
  EXPECT_THROW(read_labels(bad, RecordFormat::kCsv, "labels"), ValidationError);
  std::istringstream missing("image_id,lat,lng,timestamp,score\na,1,2,3,0.5\n");
  EXPECT_THROW(read_labels(missing, RecordFormat::kCsv, "labels"), SchemaError);
}

TEST(Ingest, RoundTrip) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<LabeledRecord> labeled;
  for (int i = 0; i < 500; ++i) {
    labeled.push_back({rec("img \"" + std::to_string(i) + "\"", 40 + u(gen), -74 + u(gen),
                           1590969600 + i * 37, u(gen)),
                       u(gen) < 0.3});
  }
  std::vector<DetectionRecord> detections;
  for (const auto& l : labeled) detections.push_back(l.detection);
  for (auto format : {RecordFormat::kCsv, RecordFormat::kJsonl}) {
    std::stringstream a, b;
    write_detections(a, detections, format);
    EXPECT_EQ(read_detections(a, format, "rt"), detections);
    write_labels(b, labeled, format);
    const auto back = read_labels(b, format, "rt");
    EXPECT_EQ(back, labeled);
  }
}

TEST(Ingest, StreamsLargeFile) {
  const auto path = std::filesystem::temp_directory_path() / "deployaudit_large.csv";
  constexpr std::size_t n = 1000000;
  {
    std::ofstream out(path);
    out << "image_id,lat,lng,timestamp,score\n";
    for (std::size_t i = 0; i < n; ++i) {
      out << 'i' << i << ",40.7,-74.0," << 1590969600 + i << ",0.5\n";
    }
  }
  std::ifstream in(path);
  RecordReader reader(in, RecordFormat::kCsv, path.string(), false);
  LabeledRecord r;
  std::size_t count = 0;
  while (reader.next(r) == RecordReader::Status::kRecord) ++count;
  EXPECT_EQ(count, n);
  EXPECT_EQ(load_detections(path, RecordFormat::kCsv).size(), n);
  std::filesystem::remove(path);
}

TEST(Dedup, IdenticalKeysKeepSmallestId) {
  const auto result = deduplicate({rec("z", 1, 2, 3), rec("a", 1, 2, 3)});
  ASSERT_EQ(result.records.size(), 1u);
  EXPECT_EQ(result.records[0].image_id, "a");
  EXPECT_EQ(result.removed, 1u);
}

TEST(Dedup, DifferentTimestampsAreKept) {
  const auto result = deduplicate({rec("a", 1, 2, 3), rec("b", 1, 2, 4)});
  EXPECT_EQ(result.records.size(), 2u);
  EXPECT_EQ(result.removed, 0u);
}

TEST(Dedup, MatchesKeyGroupingOracle) {
  std::mt19937_64 gen(6);
  std::uniform_int_distribution<int> small(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<DetectionRecord> records;
    for (int i = 0; i < 60; ++i) {
      records.push_back(rec("id" + std::to_string(small(gen) * 100 + i), small(gen),
                            small(gen), small(gen)));
    }
    std::map<std::tuple<double, double, std::int64_t>, std::string> keep;
    for (const auto& r : records) {
      auto key = std::tuple(r.latitude, r.longitude, r.timestamp);
      auto [it, fresh] = keep.emplace(key, r.image_id);
      if (!fresh && r.image_id < it->second) it->second = r.image_id;
    }
    const auto result = deduplicate(records);
    EXPECT_EQ(result.records.size(), keep.size());
    EXPECT_EQ(result.records.size() + result.removed, records.size());
    for (const auto& r : result.records) {
      EXPECT_EQ(keep.at({r.latitude, r.longitude, r.timestamp}), r.image_id);
    }
    const auto again = deduplicate(result.records);
    EXPECT_EQ(again.records, result.records);
    EXPECT_EQ(again.removed, 0u);
  }
}

TEST(Dedup, FiveRecordsTwoPairs) {
  const auto result = deduplicate({rec("a", 1, 1, 1), rec("b", 1, 1, 1), rec("c", 2, 2, 2),
                                   rec("d", 2, 2, 2), rec("e", 3, 3, 3)});
  EXPECT_EQ(result.records.size(), 3u);
  EXPECT_EQ(result.removed, 2u);
}

const char* kCensus =
    "cbg_id,borough,neighborhood,zone_type,median_income,pop_density,pop_total,pop_black,pop_white\n"
    "c1,Manhattan,Gramercy,residential,85000,30000.5,1000,200,600\n"
    "c2,Queens,Astoria,commercial,NA,1200,500,100,300\n"
    "c3,Queens,Astoria,manufacturing,,0,0,0,0\n";

TEST(Census, Parses) {
  std::istringstream in(kCensus);
  const auto cbgs = read_census(in, "census");
  ASSERT_EQ(cbgs.size(), 3u);
  EXPECT_EQ(cbgs[0].borough, "Manhattan");
  EXPECT_EQ(cbgs[0].zone_type, ZoneType::kResidential);
  EXPECT_EQ(cbgs[0].median_income, 85000.0);
  EXPECT_EQ(cbgs[0].population("black"), 200);
  EXPECT_EQ(cbgs[0].total_population(), 1000);
  EXPECT_EQ(cbgs[1].median_income, std::nullopt);
  EXPECT_EQ(cbgs[2].median_income, std::nullopt);
  EXPECT_EQ(cbgs[1].population("asian"), 0);

  std::stringstream out;
  write_census(out, cbgs);
  const auto again = read_census(out, "again");
  ASSERT_EQ(again.size(), 3u);
  EXPECT_EQ(again[0].populations, cbgs[0].populations);
  EXPECT_EQ(again[1].median_income, std::nullopt);
}

TEST(Census, Errors) {
  std::istringstream no_total("cbg_id,borough,neighborhood,zone_type,median_income,pop_density,pop_black\n");
  EXPECT_THROW(read_census(no_total, "c"), SchemaError);
  std::istringstream bad(
      "cbg_id,borough,neighborhood,zone_type,median_income,pop_density,pop_total\n"
      "a,B,N,residential,1,1,-5\n"
      "b,B,N,swamp,1,1,5\n"
      "a2,B,N,other,1,nan,5\n"
      "c,B,N,other,1,1,5\n"
      "c,B,N,other,1,1,5\n");
  try {
    read_census(bad, "c");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.issues().size(), 4u);
  }
}

TEST(Geometry, RoundTripAndAttach) {
  std::istringstream census_in(kCensus);
  auto cbgs = read_census(census_in, "census");
  cbgs[0].geometry = {Polygon{{oracle::rect(0, 0, 1, 1)}}};
  cbgs[1].geometry = {Polygon{{oracle::rect(1, 0, 2, 1), oracle::rect(1.2, 0.2, 1.4, 0.4)}},
                      Polygon{{oracle::rect(5, 5, 6, 6)}}};
  cbgs[2].geometry = {Polygon{{oracle::rect(2, 0, 3, 1)}}};
  std::stringstream geo;
  write_geometry(geo, cbgs);
  auto shapes = read_geometry(geo, "geo");
  ASSERT_EQ(shapes.size(), 3u);
  EXPECT_EQ(shapes["c2"].size(), 2u);
  EXPECT_EQ(shapes["c2"][0].rings.size(), 2u);
  EXPECT_EQ(shapes["c2"][0].rings[1], cbgs[1].geometry[0].rings[1]);

  auto fresh = cbgs;
  for (auto& c : fresh) c.geometry.clear();
  shapes["extra"] = shapes["c1"];
  EXPECT_EQ(attach_geometry(fresh, shapes), 1u);
  EXPECT_EQ(fresh[2].geometry[0].rings[0], cbgs[2].geometry[0].rings[0]);
  shapes.erase("c3");
  try {
    attach_geometry(fresh, shapes);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.cbg_id(), "c3");
  }
}

TEST(Geometry, RejectsBadDocuments) {
  std::istringstream not_fc("{\"type\":\"Feature\"}");
  EXPECT_THROW(read_geometry(not_fc, "g"), SchemaError);
  std::istringstream no_id(
      R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},)"
      R"("geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]})");
  EXPECT_THROW(read_geometry(no_id, "g"), SchemaError);
}

std::vector<CensusBlockGroup> four_cbgs() {
  std::vector<CensusBlockGroup> cbgs(4);
  for (int i = 0; i < 4; ++i) cbgs[i].cbg_id = "c" + std::to_string(i);
  return cbgs;
}

TEST(Coverage, HalfTheBlockGroups) {
  std::vector<DetectionRecord> records;
  std::vector<std::optional<std::string>> assigned;
  for (int i = 0; i < 10; ++i) {
    records.push_back(rec("r" + std::to_string(i), 0, 0, 3600 * i));
    assigned.push_back(i < 7 ? "c0" : "c2");
  }
  CoverageOptions options;
  options.window = {0, 10 * 3600};
  const auto cbgs = four_cbgs();
  const auto report = coverage_report(records, assigned, cbgs, options);
  EXPECT_EQ(report.cbgs_with_images, 2u);
  EXPECT_EQ(report.cbgs_with_images_fraction, 0.5);
  EXPECT_EQ(report.mean_images_per_cbg, 2.5);
  EXPECT_EQ(report.per_cbg_counts.at("c0"), 7u);
  EXPECT_EQ(report.per_cbg_counts.at("c1"), 0u);
  EXPECT_EQ(report.cbgs_without_images, (std::vector<std::string>{"c1", "c3"}));
  EXPECT_EQ(report.hours_in_window, 10u);
  EXPECT_EQ(report.hours_covered, 1.0);
}

TEST(Coverage, ZeroRecords) {
  CoverageOptions options;
  options.window = {0, 86400};
  const auto cbgs = four_cbgs();
  const auto report = coverage_report({}, {}, cbgs, options);
  EXPECT_EQ(report.cbgs_with_images_fraction, 0.0);
  EXPECT_EQ(report.hours_covered, 0.0);
  EXPECT_EQ(report.mean_images_per_cbg, 0.0);
  EXPECT_EQ(report.cbgs_without_images.size(), 4u);
}

TEST(Coverage, EveryHourOfADay) {
  std::vector<DetectionRecord> records;
  const std::int64_t start = 1590969600;
  for (int h = 0; h < 24; ++h) records.push_back(rec("r" + std::to_string(h), 0, 0, start + h * 3600 + 59));
  records.push_back(rec("late", 0, 0, start + 86400));
  std::vector<std::optional<std::string>> assigned(records.size());
  const auto cbgs = four_cbgs();
  for (auto mode : {HourMode::kCalendar, HourMode::kHourOfWeek}) {
    CoverageOptions options;
    options.window = {start, start + 86400};
    options.hour_mode = mode;
    const auto report = coverage_report(records, assigned, cbgs, options);
    EXPECT_EQ(report.hours_in_window, 24u);
    EXPECT_EQ(report.hours_covered, 1.0);
    EXPECT_EQ(report.records_outside_window, 1u);
    EXPECT_EQ(report.unassigned_records, records.size());
  }
}

TEST(Coverage, HourOfWeekFoldsWeeks) {
  // Two weeks, records only in the first: calendar 50%, hour-of-week 100%.
  std::vector<DetectionRecord> records;
  const std::int64_t start = 1590969600;
  for (int h = 0; h < 168; ++h) records.push_back(rec("r" + std::to_string(h), 0, 0, start + h * 3600));
  std::vector<std::optional<std::string>> assigned(records.size());
  CoverageOptions options;
  options.window = {start, start + 2 * 168 * 3600};
  const auto cal = coverage_report(records, assigned, {}, options);
  EXPECT_EQ(cal.hours_covered, 0.5);
  options.hour_mode = HourMode::kHourOfWeek;
  const auto week = coverage_report(records, assigned, {}, options);
  EXPECT_EQ(week.hours_in_window, 168u);
  EXPECT_EQ(week.hours_covered, 1.0);
  std::size_t total = 0;
  for (const auto& day : week.weekday_hour_counts) {
    for (auto n : day) {
      EXPECT_EQ(n, 1u);
      total += n;
    }
  }
  EXPECT_EQ(total, 168u);
}

TEST(Coverage, EmptyWindowIsAnError) {
  CoverageOptions options;
  options.window = {10, 10};
  EXPECT_THROW(coverage_report({}, {}, {}, options), PreconditionError);
}

TEST(Clock, LocalFields) {
  const LocalClock ny;
  // 2020-06-01 00:00 UTC is Sunday 19:00 in New York standard time.
  EXPECT_EQ(ny.weekday(1590969600), 0);
  EXPECT_EQ(ny.hour(1590969600), 19);
  EXPECT_TRUE(ny.is_weekend(1590969600));
  EXPECT_FALSE(ny.is_daytime(1590969600));
  EXPECT_EQ(ny.hour(-1), 18);  // 1969-12-31 18:59:59 local
  EXPECT_EQ(LocalClock(0).weekday(0), 4);  // 1970-01-01 was a Thursday
}

}  // namespace
}  // namespace deployaudit
