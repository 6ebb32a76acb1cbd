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

#include "deployaudit/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "deployaudit/errors.h"
#include "deployaudit/estimator.h"
#include "deployaudit/rng.h"
#include "json.hpp"

namespace deployaudit {
namespace {

using nlohmann::ordered_json;

// Independent random streams per generation phase.
enum Stream : std::uint64_t {
  kCensusStream = 1,
  kRateStream = 2,
  kSamplingStream = 3,
  kImageStream = 4,
  kLabelStream = 5,
};

constexpr const char* kBoroughs[] = {"Staten Island", "Brooklyn", "Manhattan",
                                     "Queens", "Bronx"};
constexpr double kKmPerDegree = 111.32;

std::string cbg_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cbg_%06zu", index);
  return buf;
}

std::string image_name(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%08zu", prefix, index);
  return buf;
}

std::size_t n_cbgs(const WorldSpec& spec) { return spec.rows * spec.cols; }

void check_spec(const WorldSpec& spec) {
  const std::size_t n = n_cbgs(spec);
  if (n == 0) throw PreconditionError("synth: grid has no cells");
  if (!(spec.cell_degrees > 0.0)) throw PreconditionError("synth: cell size must be positive");
  auto check_size = [&](std::size_t size, const char* what) {
    if (size != 0 && size != n) {
      throw PreconditionError(std::string("synth: ") + what + " has " +
                              std::to_string(size) + " entries for " +
                              std::to_string(n) + " block groups");
    }
  };
  check_size(spec.true_rate.size(), "true_rate");
  check_size(spec.images_per_cbg.size(), "images_per_cbg");
  check_size(spec.sampling_intensity.size(), "sampling_intensity");
  check_size(spec.populations.size(), "populations");
  for (double r : spec.true_rate) {
    if (!(r >= 0.0 && r <= 1.0)) throw PreconditionError("synth: true_rate outside [0, 1]");
  }
  for (double w : spec.sampling_intensity) {
    if (!(w >= 0.0)) throw PreconditionError("synth: negative sampling intensity");
  }
  if (spec.min_population < 0 || spec.max_population < spec.min_population) {
    throw PreconditionError("synth: bad population range");
  }
  if (!(spec.rate_min >= 0.0 && spec.rate_max <= 1.0 && spec.rate_min <= spec.rate_max)) {
    throw PreconditionError("synth: bad rate range");
  }
  const auto& c = spec.classifier;
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) {
    throw PreconditionError("synth: threshold must lie in (0, 1)");
  }
  if (!(c.precision >= 0.0 && c.precision <= 1.0 && c.false_omission_rate >= 0.0 &&
        c.false_omission_rate <= 1.0)) {
    throw PreconditionError("synth: precision and false omission rate must lie in [0, 1]");
  }
  for (const auto& [index, shift] : spec.precision_shift) {
    if (index >= n) throw PreconditionError("synth: precision shift for unknown block group");
    const double p = c.precision - shift;
    if (!(p >= 0.0 && p <= 1.0)) {
      throw PreconditionError("synth: shifted precision outside [0, 1] in " + cbg_name(index));
    }
  }
  if (spec.window.end <= spec.window.start) throw PreconditionError("synth: empty time window");
}

double normal(Philox4x32& rng) {
  boost::random::normal_distribution<double> dist;
  return dist(rng);
}

double gamma(Philox4x32& rng, double shape) {
  boost::random::gamma_distribution<double> dist(shape);
  return dist(rng);
}

struct Rates {
  std::vector<double> true_rate;
  std::vector<double> station_distance;  // degrees
};

Rates world_rates(const WorldSpec& spec) {
  const std::size_t n = n_cbgs(spec);
  Philox4x32 rng(spec.seed, kRateStream);
  std::vector<std::pair<double, double>> stations;
  for (std::size_t s = 0; s < std::max<std::size_t>(spec.n_stations, 1); ++s) {
    const double r = uniform_unit(rng) * static_cast<double>(spec.rows);
    const double c = uniform_unit(rng) * static_cast<double>(spec.cols);
    stations.emplace_back(r, c);
  }
  const double scale = 0.25 * static_cast<double>(std::max(spec.rows, spec.cols));
  Rates out;
  out.true_rate.resize(n);
  out.station_distance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i / spec.cols) + 0.5;
    const double c = static_cast<double>(i % spec.cols) + 0.5;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& [sr, sc] : stations) d = std::min(d, std::hypot(r - sr, c - sc));
    out.station_distance[i] = d * spec.cell_degrees;
    const double noise = uniform_unit(rng);
    const double h = spec.station_effect * std::exp(-d / scale) +
                     (1.0 - spec.station_effect) * noise;
    out.true_rate[i] = spec.true_rate.empty()
                           ? spec.rate_min + (spec.rate_max - spec.rate_min) * h
                           : spec.true_rate[i];
  }
  return out;
}

std::vector<std::size_t> allocate_images(const WorldSpec& spec) {
  const std::size_t n = n_cbgs(spec);
  if (!spec.images_per_cbg.empty()) return spec.images_per_cbg;
  std::vector<double> weight = spec.sampling_intensity;
  if (weight.empty()) {
    Philox4x32 rng(spec.seed, kSamplingStream);
    weight.resize(n);
    for (auto& w : weight) w = std::exp(spec.sampling_skew * normal(rng));
  }
  const std::size_t base = spec.min_images_per_cbg;
  if (spec.total_images < base * n) {
    throw PreconditionError("synth: total_images below min_images_per_cbg * block groups");
  }
  const double total_weight = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<std::size_t> out(n, base);
  const std::size_t extra = spec.total_images - base * n;
  if (extra == 0) return out;
  if (!(total_weight > 0.0)) throw PreconditionError("synth: sampling intensity sums to zero");
  // Largest-remainder split of the extra images.
  std::vector<double> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = static_cast<double>(extra) * weight[i] / total_weight;
    const auto whole = static_cast<std::size_t>(std::floor(quota));
    out[i] += whole;
    assigned += whole;
    remainder[i] = quota - static_cast<double>(whole);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < extra; ++k, ++assigned) ++out[order[k % n]];
  return out;
}

// Score from Beta(a, b) restricted to [threshold, 1] (upper) or [0, threshold).
double truncated_beta(Philox4x32& rng, double a, double b, double threshold,
                      bool upper) {
  const double u = uniform_unit(rng);
  if (upper) {
    const double tail = boost::math::ibetac(a, b, threshold);
    if (tail <= 0.0) return threshold;
    const double s = boost::math::ibetac_inv(a, b, u * tail);
    return std::clamp(s, threshold, 1.0);
  }
  const double head = boost::math::ibeta(a, b, threshold);
  if (head <= 0.0) return std::nextafter(threshold, 0.0);
  double s = boost::math::ibeta_inv(a, b, u * head);
  if (s >= threshold) s = std::nextafter(threshold, 0.0);
  return std::max(s, 0.0);
}

struct ImageDraw {
  bool truth = false;
  double score = 0.0;
};

ImageDraw draw_image(Philox4x32& rng, double true_rate, double precision,
                     const ClassifierSpec& c) {
  const ScoreModel& m = c.scores;
  ImageDraw out;
  if (c.label_model == LabelModel::kScoreOnly) {
    out.truth = uniform_unit(rng) < true_rate;
    const double a = out.truth ? m.positive_alpha : m.negative_alpha;
    const double b = out.truth ? m.positive_beta : m.negative_beta;
    out.score = std::clamp(boost::math::ibeta_inv(a, b, uniform_unit(rng)), 0.0, 1.0);
    return out;
  }
  const double q = (true_rate - c.false_omission_rate) / (precision - c.false_omission_rate);
  const bool predicted = uniform_unit(rng) < q;
  out.truth = uniform_unit(rng) < (predicted ? precision : c.false_omission_rate);
  const double a = out.truth ? m.positive_alpha : m.negative_alpha;
  const double b = out.truth ? m.positive_beta : m.negative_beta;
  out.score = truncated_beta(rng, a, b, c.threshold, predicted);
  return out;
}

GeoPoint random_point(Philox4x32& rng, const WorldSpec& spec, std::size_t index) {
  const double row = static_cast<double>(index / spec.cols);
  const double col = static_cast<double>(index % spec.cols);
  const double fy = 0.02 + 0.96 * uniform_unit(rng);
  const double fx = 0.02 + 0.96 * uniform_unit(rng);
  return {spec.origin_latitude + (row + fy) * spec.cell_degrees,
          spec.origin_longitude + (col + fx) * spec.cell_degrees};
}

std::int64_t random_time(Philox4x32& rng, const TimeWindow& w) {
  boost::random::uniform_int_distribution<std::int64_t> dist(w.start, w.end - 1);
  return dist(rng);
}

double precision_at(const WorldSpec& spec, std::size_t index) {
  auto it = spec.precision_shift.find(index);
  return spec.classifier.precision - (it == spec.precision_shift.end() ? 0.0 : it->second);
}

// Population-weighted truth computed directly from the generating rates.
std::vector<TruthGroup> truth_table(const std::vector<CensusBlockGroup>& cbgs,
                                    const std::vector<double>& rates,
                                    const std::vector<std::string>& groups,
                                    auto&& population_of, bool residential_only) {
  auto weighted = [&](auto&& weight) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < cbgs.size(); ++i) {
      if (residential_only && cbgs[i].zone_type != ZoneType::kResidential) continue;
      const double w = static_cast<double>(weight(cbgs[i]));
      num += w * rates[i];
      den += w;
    }
    return std::pair{num, den};
  };
  std::vector<TruthGroup> out;
  const auto [city_num, city_den] =
      weighted([](const CensusBlockGroup& c) { return c.total_population(); });
  if (city_den <= 0.0) return out;
  const double city = city_num / city_den;
  out.push_back({std::string(kCityAverageGroup), city, 1.0});
  for (const auto& g : groups) {
    const auto [num, den] =
        weighted([&](const CensusBlockGroup& c) { return population_of(c, g); });
    if (den <= 0.0) continue;
    out.push_back({g, num / den, (num / den) / city});
  }
  return out;
}

}  // namespace

std::vector<CensusBlockGroup> generate_census(const WorldSpec& spec) {
  check_spec(spec);
  const std::size_t n = n_cbgs(spec);
  Philox4x32 rng(spec.seed, kCensusStream);
  std::vector<std::pair<double, double>> centers;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    centers.emplace_back(uniform_unit(rng) * static_cast<double>(spec.rows),
                         uniform_unit(rng) * static_cast<double>(spec.cols));
  }
  const double diag = std::hypot(static_cast<double>(spec.rows), static_cast<double>(spec.cols));
  boost::random::uniform_int_distribution<std::int64_t> total_dist(spec.min_population,
                                                                   spec.max_population);
  std::vector<CensusBlockGroup> cbgs(n);
  for (std::size_t i = 0; i < n; ++i) {
    CensusBlockGroup& c = cbgs[i];
    const std::size_t row = i / spec.cols;
    const std::size_t col = i % spec.cols;
    c.cbg_id = cbg_name(i);

    const double lat0 = spec.origin_latitude + static_cast<double>(row) * spec.cell_degrees;
    const double lng0 = spec.origin_longitude + static_cast<double>(col) * spec.cell_degrees;
    const double lat1 = lat0 + spec.cell_degrees;
    const double lng1 = lng0 + spec.cell_degrees;
    c.geometry = {Polygon{{Ring{{lng0, lat0}, {lng1, lat0}, {lng1, lat1}, {lng0, lat1}, {lng0, lat0}}}}};

    // Draw everything for this block group even when overridden, so explicit
    // populations do not shift the other attributes' streams.
    const std::int64_t total = total_dist(rng);
    std::vector<double> weight(spec.groups.size());
    double weight_sum = 0.0;
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
      const double d = std::hypot(static_cast<double>(row) + 0.5 - centers[g].first,
                                  static_cast<double>(col) + 0.5 - centers[g].second);
      weight[g] = std::exp(-spec.segregation * d / diag) * gamma(rng, 2.0);
      weight_sum += weight[g];
    }
    const double income_noise = normal(rng);
    const double missing_draw = uniform_unit(rng);
    const double zone_draw = uniform_unit(rng);

    if (spec.populations.empty()) {
      c.populations.emplace(std::string(kTotalPopulation), total);
      for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        const double share = 0.95 * weight[g] / weight_sum;
        c.populations.emplace(spec.groups[g],
                              static_cast<std::int64_t>(std::floor(share * static_cast<double>(total))));
      }
    } else {
      for (const auto& [g, count] : spec.populations[i]) c.populations.emplace(g, count);
      if (!c.populations.contains(kTotalPopulation)) {
        throw PreconditionError("synth: explicit populations for " + c.cbg_id +
                                " lack a total");
      }
    }
    const double white_share =
        c.total_population() > 0
            ? static_cast<double>(c.population("white")) / static_cast<double>(c.total_population())
            : 0.0;
    if (missing_draw >= spec.missing_income_fraction) {
      c.median_income = std::round(60000.0 * std::exp(0.8 * (white_share - 0.3) + 0.3 * income_noise));
    }
    const double km_lat = spec.cell_degrees * kKmPerDegree;
    const double km_lng = km_lat * std::cos(lat0 * M_PI / 180.0);
    c.population_density = static_cast<double>(c.total_population()) / (km_lat * km_lng);
    c.zone_type = zone_draw < 0.6   ? ZoneType::kResidential
                  : zone_draw < 0.8 ? ZoneType::kCommercial
                  : zone_draw < 0.9 ? ZoneType::kManufacturing
                                    : ZoneType::kOther;
    c.borough = kBoroughs[std::min<std::size_t>(4, col * 5 / spec.cols)];
    c.neighborhood = "NH-" + std::to_string(row / 2) + "-" + std::to_string(col / 2);
  }
  return cbgs;
}

std::vector<std::size_t> select_cbgs(const WorldSpec& spec,
                                     const SubgroupSelector& subgroup) {
  const auto cbgs = generate_census(spec);
  std::vector<std::size_t> out;
  auto above_median = [&](auto&& value_of) {
    std::vector<double> values;
    for (const auto& c : cbgs) {
      if (auto v = value_of(c)) values.push_back(*v);
    }
    if (values.empty()) return;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    const double median = m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
    for (std::size_t i = 0; i < cbgs.size(); ++i) {
      if (auto v = value_of(cbgs[i]); v && *v > median) out.push_back(i);
    }
  };
  switch (subgroup.attribute) {
    case SubgroupAttribute::kIncomeAboveMedian:
      above_median([](const CensusBlockGroup& c) { return c.median_income; });
      break;
    case SubgroupAttribute::kDensityAboveMedian:
      above_median([](const CensusBlockGroup& c) {
        return std::optional<double>(c.population_density);
      });
      break;
    case SubgroupAttribute::kBorough:
      for (std::size_t i = 0; i < cbgs.size(); ++i) {
        if (cbgs[i].borough == subgroup.value) out.push_back(i);
      }
      break;
    case SubgroupAttribute::kZoneType:
      for (std::size_t i = 0; i < cbgs.size(); ++i) {
        if (to_string(cbgs[i].zone_type) == subgroup.value) out.push_back(i);
      }
      break;
  }
  return out;
}

WorldSpec inject_miscalibration(const WorldSpec& spec,
                                const SubgroupSelector& subgroup, double delta) {
  if (delta == 0.0) return spec;
  WorldSpec out = spec;
  for (std::size_t index : select_cbgs(spec, subgroup)) {
    const double shift = out.precision_shift[index] + delta;
    const double precision = spec.classifier.precision - shift;
    if (!(precision >= 0.0 && precision <= 1.0)) {
      throw PreconditionError("miscalibration moves precision of " + cbg_name(index) +
                              " outside [0, 1]");
    }
    out.precision_shift[index] = shift;
  }
  return out;
}

SyntheticWorld generate(const WorldSpec& spec) {
  SyntheticWorld world;
  world.cbgs = generate_census(spec);
  const std::size_t n = world.cbgs.size();
  const Rates rates = world_rates(spec);
  const auto images = allocate_images(spec);
  const ClassifierSpec& cls = spec.classifier;

  if (cls.label_model == LabelModel::kCalibrated) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = rates.true_rate[i];
      const double prec = precision_at(spec, i);
      const double lo = std::min(cls.false_omission_rate, prec);
      const double hi = std::max(cls.false_omission_rate, prec);
      if (p < lo || p > hi || prec == cls.false_omission_rate) {
        throw PreconditionError("synth: true rate of " + world.cbgs[i].cbg_id +
                                " is outside [false omission rate, precision]");
      }
    }
  }

  world.truth.cbgs.resize(n);
  {
    Philox4x32 rng(spec.seed, kImageStream);
    std::size_t next_id = 0;
    for (std::size_t i = 0; i < n; ++i) {
      TruthCbg& t = world.truth.cbgs[i];
      t.cbg_id = world.cbgs[i].cbg_id;
      t.true_rate = rates.true_rate[i];
      t.precision = precision_at(spec, i);
      t.station_distance = rates.station_distance[i];
      t.n_images = images[i];
      for (std::size_t k = 0; k < images[i]; ++k) {
        const GeoPoint where = random_point(rng, spec, i);
        const std::int64_t when = random_time(rng, spec.window);
        const ImageDraw draw = draw_image(rng, t.true_rate, t.precision, cls);
        world.detections.push_back({image_name("img", next_id++), where.latitude,
                                    where.longitude, when, draw.score});
        world.detection_truth.push_back(draw.truth);
        if (draw.truth) ++t.n_true_positive;
        if (draw.score >= cls.threshold) ++t.n_pred_positive;
      }
    }
  }

  if (spec.n_labeled > 0) {
    Philox4x32 rng(spec.seed, kLabelStream);
    std::vector<double> cumulative(n);
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      running += static_cast<double>(images[i]);
      cumulative[i] = running;
    }
    if (!(running > 0.0)) throw PreconditionError("synth: labeled set needs images");
    for (std::size_t k = 0; k < spec.n_labeled; ++k) {
      const double u = uniform_unit(rng) * running;
      const std::size_t i = std::min<std::size_t>(
          n - 1, static_cast<std::size_t>(
                     std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()));
      const GeoPoint where = random_point(rng, spec, i);
      const std::int64_t when = random_time(rng, spec.window);
      const ImageDraw draw = draw_image(rng, rates.true_rate[i], precision_at(spec, i), cls);
      world.labels.push_back(
          {{image_name("lab", k), where.latitude, where.longitude, when, draw.score}, draw.truth});
    }
  }

  const auto by_column = [](const CensusBlockGroup& c, const std::string& g) {
    return c.population(g);
  };
  const auto by_borough = [](const CensusBlockGroup& c, const std::string& g) {
    return c.borough == g ? c.total_population() : 0;
  };
  const auto by_zone = [](const CensusBlockGroup& c, const std::string& g) {
    return std::string(to_string(c.zone_type)) == g ? c.total_population() : 0;
  };
  std::vector<std::string> boroughs;
  for (const auto& c : world.cbgs) {
    if (std::find(boroughs.begin(), boroughs.end(), c.borough) == boroughs.end()) {
      boroughs.push_back(c.borough);
    }
  }
  std::sort(boroughs.begin(), boroughs.end());
  const std::vector<std::string> zones = {"commercial", "manufacturing", "other", "residential"};
  auto& truth = world.truth.groups;
  truth["race"] = truth_table(world.cbgs, rates.true_rate, spec.groups, by_column, false);
  truth["race@residential"] =
      truth_table(world.cbgs, rates.true_rate, spec.groups, by_column, true);
  truth["borough"] = truth_table(world.cbgs, rates.true_rate, boroughs, by_borough, false);
  truth["zone_type"] = truth_table(world.cbgs, rates.true_rate, zones, by_zone, false);
  return world;
}

std::string truth_json(const SyntheticWorld& world, const WorldSpec& spec) {
  ordered_json doc;
  doc["seed"] = spec.seed;
  doc["classifier"] = {
      {"label_model", spec.classifier.label_model == LabelModel::kCalibrated ? "calibrated"
                                                                             : "score_only"},
      {"threshold", spec.classifier.threshold},
      {"precision", spec.classifier.precision},
      {"false_omission_rate", spec.classifier.false_omission_rate}};
  ordered_json cbgs = ordered_json::array();
  for (const auto& t : world.truth.cbgs) {
    cbgs.push_back({{"cbg_id", t.cbg_id},
                    {"true_rate", t.true_rate},
                    {"precision", t.precision},
                    {"station_distance", t.station_distance},
                    {"n_images", t.n_images},
                    {"n_true_positive", t.n_true_positive},
                    {"n_pred_positive", t.n_pred_positive}});
  }
  doc["cbgs"] = std::move(cbgs);
  ordered_json groups = ordered_json::object();
  for (const auto& [scheme, rows] : world.truth.groups) {
    ordered_json table = ordered_json::array();
    for (const auto& g : rows) {
      table.push_back({{"group", g.group},
                       {"absolute_rate", g.absolute_rate},
                       {"relative_rate", g.relative_rate}});
    }
    groups[scheme] = std::move(table);
  }
  doc["groups"] = std::move(groups);
  return doc.dump(2) + "\n";
}

WorldFiles write_world(const SyntheticWorld& world, const WorldSpec& spec,
                       const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  WorldFiles files{directory / "census.csv", directory / "geometry.geojson",
                   directory / "detections.csv", directory / "labels.csv",
                   directory / "truth.json"};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw AuditError("cannot write '" + p.string() + "'");
    return out;
  };
  {
    auto out = open(files.census);
    write_census(out, world.cbgs);
  }
  {
    auto out = open(files.geometry);
    write_geometry(out, world.cbgs);
  }
  {
    auto out = open(files.detections);
    write_detections(out, world.detections, RecordFormat::kCsv);
  }
  {
    auto out = open(files.labels);
    write_labels(out, world.labels, RecordFormat::kCsv);
  }
  {
    auto out = open(files.truth);
    out << truth_json(world, spec);
  }
  return files;
}

WorldTruth read_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    WorldTruth truth;
    for (const auto& c : doc.at("cbgs")) {
      truth.cbgs.push_back({c.at("cbg_id").get<std::string>(), c.at("true_rate").get<double>(),
                            c.at("precision").get<double>(),
                            c.at("station_distance").get<double>(),
                            c.at("n_images").get<std::size_t>(),
                            c.at("n_true_positive").get<std::size_t>(),
                            c.at("n_pred_positive").get<std::size_t>()});
    }
    for (const auto& [scheme, rows] : doc.at("groups").items()) {
      auto& table = truth.groups[scheme];
      for (const auto& g : rows) {
        table.push_back({g.at("group").get<std::string>(), g.at("absolute_rate").get<double>(),
                         g.at("relative_rate").get<double>()});
      }
    }
    return truth;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace deployaudit
