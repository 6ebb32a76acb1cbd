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

#include "commands.h"

#include <fstream>

#include "CLI11.hpp"
#include "deployaudit/bootstrap.h"
#include "deployaudit/csv.h"
#include "deployaudit/errors.h"
#include "deployaudit/geoindex.h"
#include "deployaudit/report.h"

namespace deployaudit::cli {
namespace {

std::ofstream open_output(const std::filesystem::path& dir, const char* name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw AuditError("cannot write '" + (dir / name).string() + "'");
  return out;
}

const std::filesystem::path& require(const std::optional<std::filesystem::path>& p,
                                     const char* what) {
  if (!p) throw PreconditionError(std::string("missing input: ") + what);
  return *p;
}

RecordFormat format_of(const RunConfig& c, const std::filesystem::path& p) {
  return c.record_format.value_or(record_format_for(p));
}

std::vector<CensusBlockGroup> load_city(const RunConfig& c) {
  auto cbgs = load_census(require(c.census, "census file (--census)"));
  attach_geometry(cbgs, load_geometry(require(c.geometry, "geometry file (--geometry)")));
  return cbgs;
}

std::vector<LabeledRecord> labels_of(const RunConfig& c,
                                     const std::optional<std::filesystem::path>& p) {
  return load_labels(*p, format_of(c, *p));
}

std::vector<std::optional<std::string>> assign_labeled(
    const SpatialIndex& index, std::span<const LabeledRecord> labeled, unsigned threads) {
  std::vector<DetectionRecord> records;
  records.reserve(labeled.size());
  for (const auto& r : labeled) records.push_back(r.detection);
  return assign_all(index, records, threads);
}

struct Detections {
  std::vector<DetectionRecord> records;
  std::size_t duplicates_removed = 0;
};

Detections load_deduplicated(const RunConfig& c) {
  const auto& path = require(c.detections, "detections file (--detections)");
  auto dedup = deduplicate(load_detections(path, format_of(c, path)));
  return {std::move(dedup.records), dedup.removed};
}

std::vector<GroupingScheme> build_schemes(
    const RunConfig& c, std::span<const CensusBlockGroup> cbgs,
    std::span<const std::optional<std::string>> assignments) {
  std::vector<GroupingScheme> schemes;
  for (const auto& name : c.schemes) {
    if (name == "race") {
      schemes.push_back(population_scheme(
          "race", std::vector<std::string>(kRaceGroups.begin(), kRaceGroups.end())));
    } else if (name == "borough") {
      schemes.push_back(attribute_scheme(cbgs, CbgAttribute::kBorough));
    } else if (name == "neighborhood") {
      schemes.push_back(attribute_scheme(cbgs, CbgAttribute::kNeighborhood));
    } else if (name == "zone_type") {
      schemes.push_back(attribute_scheme(cbgs, CbgAttribute::kZoneType));
    } else if (name == "income_quartile") {
      schemes.push_back(quartile_scheme(assignments, cbgs, QuartileAttribute::kMedianIncome));
    } else if (name == "density_quartile") {
      schemes.push_back(
          quartile_scheme(assignments, cbgs, QuartileAttribute::kPopulationDensity));
    } else if (name.starts_with("pop:")) {
      // Any census population columns, e.g. pop:white+black.
      std::vector<std::string> groups;
      std::size_t start = 4;
      while (start <= name.size()) {
        const std::size_t plus = std::min(name.find('+', start), name.size());
        if (plus > start) groups.push_back(name.substr(start, plus - start));
        start = plus + 1;
      }
      if (groups.empty()) throw PreconditionError("scheme '" + name + "' names no columns");
      schemes.push_back(population_scheme("population", std::move(groups)));
    } else {
      throw PreconditionError("unknown grouping scheme '" + name + "'");
    }
  }
  return schemes;
}

struct ResolvedModel {
  ClassifierErrorModel model;
  std::vector<LabeledRecord> validation;
};

// Precedence: explicit --precision/--for, then an error_model.json, then
// estimation from the validation labels.
ResolvedModel resolve_error_model(const RunConfig& c, std::ostream& log) {
  ResolvedModel out;
  if (c.precision || c.false_omission_rate) {
    if (!c.precision || !c.false_omission_rate) {
      throw PreconditionError("--precision and --for must be given together");
    }
    double threshold = 0.0;
    if (c.threshold) {
      threshold = *c.threshold;
    } else if (c.error_model) {
      threshold = read_error_model_json(*c.error_model).threshold;
    } else if (c.labels) {
      threshold = select_threshold(labels_of(c, c.labels));
    } else {
      throw PreconditionError("a threshold is required with --precision/--for");
    }
    out.model = fixed_error_model(*c.precision, *c.false_omission_rate, threshold);
    if (c.labels) out.validation = labels_of(c, c.labels);
    log << "error model: supplied precision " << out.model.precision << ", FOR "
        << out.model.false_omission_rate << " at threshold " << threshold << '\n';
    return out;
  }
  if (c.error_model) {
    out.model = read_error_model_json(*c.error_model);
    if (c.threshold && *c.threshold != out.model.threshold) {
      throw PreconditionError("threshold differs from the one in " + c.error_model->string());
    }
    if (c.labels) out.validation = labels_of(c, c.labels);
    log << "error model: read from " << c.error_model->string() << '\n';
    return out;
  }
  if (c.labels) {
    out.validation = labels_of(c, c.labels);
    const double threshold = c.threshold ? *c.threshold : select_threshold(out.validation);
    out.model = estimate_error_model(out.validation, threshold);
    log << "error model: estimated from " << out.validation.size()
        << " validation labels at threshold " << threshold << '\n';
    return out;
  }
  throw PreconditionError(
      "no classifier error model: run `deployaudit validate` and pass --error-model, "
      "give --labels, or pass --precision and --for");
}

void write_prevalence_csv(std::ostream& out, const PrevalenceTable& table) {
  out << "cbg_id,n_images,n_pred_pos,raw_rate,corrected_rate\n";
  for (const auto& r : table.rows) {
    out << csv::escape(r.cbg_id) << ',' << r.n_images << ',' << r.n_pred_pos << ','
        << csv::format_double(r.raw_rate) << ',' << csv::format_double(r.corrected_rate)
        << '\n';
  }
}

}  // namespace

ValidateResult cmd_validate(const RunConfig& c, std::ostream& log) {
  check_paths(c);
  if (!c.labels) throw PreconditionError("validate needs a labels file (--labels)");
  const auto validation = labels_of(c, c.labels);
  const double threshold = c.threshold ? *c.threshold : select_threshold(validation);
  ValidateResult result;
  result.error_model = estimate_error_model(validation, threshold);
  const auto evaluation = c.test_labels ? labels_of(c, c.test_labels) : validation;
  result.metrics = binary_metrics(evaluation, threshold);

  std::vector<CensusBlockGroup> cbgs;
  std::vector<std::optional<std::string>> assignments(evaluation.size());
  if (c.census && c.geometry) {
    cbgs = load_city(c);
    const auto index = SpatialIndex::build(cbgs);
    assignments = assign_labeled(index, evaluation, c.threads);
  }
  const auto flags = derive_subgroup_flags(evaluation, assignments, cbgs,
                                           LocalClock(c.utc_offset_seconds), c.focus_borough);
  result.calibration = calibration_audit(evaluation, threshold, flags);
  result.subgroup_metrics = subgroup_metrics(evaluation, threshold, flags);

  {
    auto out = open_output(c.out, "metrics.json");
    write_metrics_json(out, result.metrics);
  }
  {
    auto out = open_output(c.out, "metrics.csv");
    write_metrics_csv(out, result.metrics);
  }
  {
    auto out = open_output(c.out, "error_model.json");
    write_error_model_json(out, result.error_model);
  }
  {
    auto out = open_output(c.out, "calibration.csv");
    write_calibration_csv(out, result.calibration);
  }
  {
    auto out = open_output(c.out, "calibration.json");
    write_calibration_json(out, result.calibration);
  }
  {
    auto out = open_output(c.out, "subgroup_metrics.csv");
    write_subgroup_metrics_csv(out, result.subgroup_metrics);
  }

  const auto& m = result.metrics;
  log << "threshold " << threshold << ": precision " << m.precision << ", recall "
      << m.recall << ", AUC " << m.auc << ", AP " << m.average_precision << '\n';
  log << "error model: precision " << result.error_model.precision << " (se "
      << result.error_model.se_precision << "), FOR "
      << result.error_model.false_omission_rate << " (se " << result.error_model.se_for
      << ")\n";
  if (result.calibration.flagged_subgroups.empty()) {
    log << "calibration: no subgroup differences\n";
  } else {
    for (const auto& s : result.calibration.flagged_subgroups) {
      log << "calibration: FLAGGED " << s << '\n';
    }
  }
  return result;
}

std::vector<DisparityTable> cmd_disparities(const RunConfig& c, std::ostream& log) {
  check_paths(c);
  const auto resolved = resolve_error_model(c, log);
  const auto cbgs = load_city(c);
  const auto index = SpatialIndex::build(cbgs);
  const auto detections = load_deduplicated(c);
  const auto assignments = assign_all(index, detections.records, c.threads);
  const auto counts = count_by_cbg(detections.records, assignments, resolved.model.threshold);
  const auto schemes = build_schemes(c, cbgs, assignments);
  const std::optional<ZoneType> zone =
      c.residential_only ? std::optional(ZoneType::kResidential) : std::nullopt;
  const auto prevalence = cbg_prevalence(counts, resolved.model, c.min_images);

  std::vector<DisparityTable> tables;
  std::optional<BootstrapResult> boot;
  if (c.bootstrap.n_replicates > 0) {
    BootstrapInputs inputs{cbgs, counts, resolved.model, resolved.validation, c.min_images, zone};
    BootstrapConfig config = c.bootstrap;
    if (config.threads == 0) config.threads = c.threads;
    boot = bootstrap_disparities(inputs, schemes, config);
    tables = boot->tables;
  } else {
    for (const auto& s : schemes) tables.push_back(relative_disparities(s, cbgs, prevalence, zone));
  }

  {
    auto out = open_output(c.out, "disparities.csv");
    write_disparities_csv(out, tables);
  }
  {
    auto out = open_output(c.out, "disparities.json");
    write_disparities_json(out, tables);
  }
  {
    auto out = open_output(c.out, "prevalence.csv");
    write_prevalence_csv(out, prevalence);
  }
  if (boot && c.bootstrap_diagnostics) {
    auto out = open_output(c.out, "bootstrap.jsonl");
    write_diagnostics_jsonl(out, *boot);
  }
  if (c.write_assignments) {
    auto out = open_output(c.out, "assignments.csv");
    write_assignments(out, detections.records, assignments);
  }

  std::size_t unassigned = 0;
  for (const auto& a : assignments) unassigned += a ? 0 : 1;
  log << detections.records.size() << " images (" << detections.duplicates_removed
      << " duplicates removed, " << unassigned << " outside every block group)\n";
  for (const auto& t : tables) {
    log << t.scheme << (t.zone_filter ? " [residential]" : "") << ": " << t.n_cbgs_analyzed
        << " block groups, " << t.n_cbgs_without_data << " without images\n";
    for (const auto& r : t.rows) {
      log << "  " << r.group_value << "  " << r.relative_rate;
      if (r.ci_half_width) log << " +/- " << *r.ci_half_width;
      log << '\n';
    }
  }
  if (boot && boot->n_failed > 0) {
    log << "bootstrap: " << boot->n_failed << " of " << boot->n_replicates
        << " replicates failed and were dropped\n";
  }
  return tables;
}

CoverageReport cmd_coverage(const RunConfig& c, std::ostream& log) {
  check_paths(c);
  const auto cbgs = load_city(c);
  const auto index = SpatialIndex::build(cbgs);
  const auto detections = load_deduplicated(c);
  const auto assignments = assign_all(index, detections.records, c.threads);

  CoverageOptions options;
  options.hour_mode = c.hour_mode;
  options.clock = LocalClock(c.utc_offset_seconds);
  options.duplicates_removed = detections.duplicates_removed;
  if (c.window) {
    options.window = *c.window;
  } else if (!detections.records.empty()) {
    auto [lo, hi] = std::minmax_element(
        detections.records.begin(), detections.records.end(),
        [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    options.window = {lo->timestamp, hi->timestamp + 1};
  } else {
    // Nothing to span: report zero hours rather than inventing a window.
    options.window = {0, 1};
  }
  auto report = coverage_report(detections.records, assignments, cbgs, options);
  if (!c.window && detections.records.empty()) {
    report.hours_in_window = 0;
    report.hours_covered = 0.0;
  }

  {
    auto out = open_output(c.out, "coverage.json");
    write_coverage_json(out, report);
  }
  {
    auto out = open_output(c.out, "cbg_counts.csv");
    write_cbg_counts_csv(out, report);
  }
  {
    auto out = open_output(c.out, "weekday_hour.csv");
    write_weekday_hour_csv(out, report);
  }
  {
    auto out = open_output(c.out, "assignments.csv");
    write_assignments(out, detections.records, assignments);
  }
  log << report.total_records << " images, " << report.cbgs_with_images << " of "
      << report.n_cbgs << " block groups covered, " << report.hours_with_records << " of "
      << report.hours_in_window << " hours covered\n";
  return report;
}

WorldFiles cmd_synth(const WorldSpec& spec, const std::filesystem::path& out,
                     std::ostream& log) {
  const auto world = generate(spec);
  const auto files = write_world(world, spec, out);
  log << "wrote " << world.cbgs.size() << " block groups, " << world.detections.size()
      << " images and " << world.labels.size() << " labels to " << out.string() << '\n';
  return files;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Census-reweighted estimates of police vehicle deployment by group"};
  app.require_subcommand(1);

  std::string config_path;
  std::string threshold;
  std::string detections, labels, test_labels, census, geometry, error_model, format;
  std::string resample_unit, hour_mode, out_dir, schemes;
  double precision = 0.0, for_rate = 0.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::int64_t window_start = 0, window_end = 0;
  bool residential_only = false, diagnostics = false, pooled = false, assignments = false;

  std::vector<CLI::Option*> opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--detections", detections, "detections file (csv or jsonl)");
    sub->add_option("--labels", labels, "validation labels file");
    sub->add_option("--test-labels", test_labels, "held-out labels file");
    sub->add_option("--census", census, "census table (csv)");
    sub->add_option("--geometry", geometry, "block group GeoJSON");
    sub->add_option("--error-model", error_model, "error_model.json from validate");
    sub->add_option("--format", format, "record format: csv or jsonl");
    sub->add_option("--threshold", threshold, "score threshold or 'auto'");
    sub->add_option("--precision", precision, "classifier precision Pr(y=1|yhat=1)");
    sub->add_option("--for", for_rate, "false omission rate Pr(y=1|yhat=0)");
    sub->add_flag("--residential-only", residential_only, "restrict to residential zones");
    sub->add_option("--schemes", schemes, "comma-separated grouping schemes");
    sub->add_option("--replicates", replicates, "bootstrap replicates (0 disables)");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--resample-unit", resample_unit, "images | images_and_validation");
    sub->add_flag("--pooled", pooled, "resample images from the pooled set, not per CBG");
    sub->add_flag("--diagnostics", diagnostics, "write per-replicate bootstrap.jsonl");
    sub->add_flag("--write-assignments", assignments, "write assignments.csv");
    sub->add_option("--window-start", window_start, "coverage window start (UTC s)");
    sub->add_option("--window-end", window_end, "coverage window end (UTC s, exclusive)");
    sub->add_option("--hour-mode", hour_mode, "calendar | hour_of_week");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_option("--out", out_dir, "output directory");
  };
  CLI::App* validate = app.add_subcommand("validate", "classifier metrics and calibration audit");
  CLI::App* disparities = app.add_subcommand("disparities", "relative deployment by group");
  CLI::App* coverage = app.add_subcommand("coverage", "geographic and temporal coverage");
  for (auto* sub : {validate, disparities, coverage}) add_common(sub);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic city with known truth");
  WorldSpec spec;
  std::string synth_out = "synthetic";
  double miscalibrate_income = 0.0;
  bool score_only = false;
  synth->add_option("--rows", spec.rows, "grid rows");
  synth->add_option("--cols", spec.cols, "grid columns");
  synth->add_option("--images", spec.total_images, "total images");
  synth->add_option("--labeled", spec.n_labeled, "labeled images");
  synth->add_option("--seed", spec.seed, "random seed");
  synth->add_option("--precision", spec.classifier.precision, "classifier precision");
  synth->add_option("--for", spec.classifier.false_omission_rate, "false omission rate");
  synth->add_option("--threshold", spec.classifier.threshold, "score threshold");
  synth->add_option("--skew", spec.sampling_skew, "sampling intensity lognormal sigma");
  synth->add_option("--missing-income", spec.missing_income_fraction,
                    "fraction of block groups without an income");
  synth->add_option("--miscalibrate-income", miscalibrate_income,
                    "precision drop in above-median-income block groups");
  synth->add_flag("--score-only", score_only, "draw truth first (uncalibrated scores)");
  synth->add_option("--out", synth_out, "output directory");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (synth->parsed()) {
      if (score_only) spec.classifier.label_model = LabelModel::kScoreOnly;
      if (miscalibrate_income != 0.0) {
        spec = inject_miscalibration(
            spec, {SubgroupAttribute::kIncomeAboveMedian, ""}, miscalibrate_income);
      }
      cmd_synth(spec, synth_out, out);
      return kOk;
    }
    CLI::App* sub = validate->parsed() ? validate : disparities->parsed() ? disparities : coverage;
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    auto given = [&](const char* name) { return sub->count(name) > 0; };
    if (given("--detections")) config.detections = detections;
    if (given("--labels")) config.labels = labels;
    if (given("--test-labels")) config.test_labels = test_labels;
    if (given("--census")) config.census = census;
    if (given("--geometry")) config.geometry = geometry;
    if (given("--error-model")) config.error_model = error_model;
    if (given("--format")) {
      config.record_format = parse_record_format(format);
      if (!config.record_format) throw SchemaError("--format must be csv or jsonl");
    }
    if (given("--threshold")) {
      if (threshold == "auto") {
        config.threshold.reset();
      } else if (auto t = csv::parse_double(threshold)) {
        config.threshold = *t;
      } else {
        throw PreconditionError("--threshold must be a number or 'auto'");
      }
    }
    if (given("--precision")) config.precision = precision;
    if (given("--for")) config.false_omission_rate = for_rate;
    if (residential_only) config.residential_only = true;
    if (given("--schemes")) {
      config.schemes.clear();
      std::size_t start = 0;
      while (start <= schemes.size()) {
        const std::size_t comma = std::min(schemes.find(',', start), schemes.size());
        if (comma > start) config.schemes.push_back(schemes.substr(start, comma - start));
        start = comma + 1;
      }
    }
    if (given("--replicates")) config.bootstrap.n_replicates = replicates;
    if (given("--seed")) config.bootstrap.seed = seed;
    if (given("--resample-unit")) {
      auto unit = parse_resample_unit(resample_unit);
      if (!unit) throw PreconditionError("--resample-unit must be images or images_and_validation");
      config.bootstrap.resample_unit = *unit;
    }
    if (pooled) config.bootstrap.stratified_by_cbg = false;
    if (diagnostics) config.bootstrap_diagnostics = true;
    if (assignments) config.write_assignments = true;
    if (given("--window-start") || given("--window-end")) {
      if (!given("--window-start") || !given("--window-end")) {
        throw PreconditionError("--window-start and --window-end go together");
      }
      config.window = TimeWindow{window_start, window_end};
    }
    if (given("--hour-mode")) {
      auto mode = parse_hour_mode(hour_mode);
      if (!mode) throw PreconditionError("--hour-mode must be calendar or hour_of_week");
      config.hour_mode = *mode;
    }
    if (given("--threads")) config.threads = threads;
    if (given("--out")) config.out = out_dir;

    if (sub == validate) {
      cmd_validate(config, out);
    } else if (sub == disparities) {
      cmd_disparities(config, out);
    } else {
      cmd_coverage(config, out);
    }
    return kOk;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kSchemaError;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kSchemaError;
  } catch (const GeometryError& e) {
    err << "invalid geometry: " << e.what() << '\n';
    return kSchemaError;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace deployaudit::cli
