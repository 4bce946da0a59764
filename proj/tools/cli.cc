/*
 * Copyright 2026 The Cardforge Authors.
 *
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

#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "cardforge/audit.h"
#include "cardforge/card.h"
#include "cardforge/chart.h"
#include "cardforge/cohort.h"
#include "cardforge/error.h"
#include "cardforge/io.h"
#include "cardforge/rng.h"
#include "cardforge/synth.h"

namespace cardforge::cli {

namespace fs = std::filesystem;

struct Options {
  // Shared audit settings.
  double threshold = kDefaultThreshold;
  std::uint32_t bootstrap_n = 10'000;
  double ci_level = 0.95;
  std::uint64_t seed = 0;
  std::uint32_t min_subgroup = kDefaultMinSubgroupN;
  std::vector<std::string> metrics;
  std::string flag_policy = "ci_excludes_zero";
  std::string degenerate_policy = "drop_and_count";
  bool flag_unknown = false;

  // audit
  std::string cohort;
  std::string manifest;
  std::string card_meta;
  std::string out_dir;
  std::vector<std::string> formats{"card_json", "markdown", "html"};
  std::string chart_mode = "delta";
  bool strict = false;
  bool strict_bins = false;

  // render / validate / chart
  std::string card;
  std::string format = "markdown";
  std::string out_file;
  std::string chart_spec;
  std::string factor;
  std::string metric = "sensitivity";
  std::vector<std::string> hide;

  // synth / power
  std::string synth_spec;
  std::string value;
  std::vector<double> gaps{0.0, 0.1, 0.23};
  std::vector<std::uint64_t> sizes{500, 2000, 5000};
  std::uint32_t trials = 100;
};

namespace {

constexpr const char* kWorkersEnv = "CARDFORGE_WORKERS";

// Signals a usage problem detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned workers_from_env() {
  const char* text = std::getenv(kWorkersEnv);
  if (text == nullptr || *text == '\0') return 0;
  char* end = nullptr;
  const unsigned long value = std::strtoul(text, &end, 10);
  if (*end != '\0' || value > 1024) {
    throw UsageError(std::string(kWorkersEnv) + " must be an integer in [0, 1024]");
  }
  return static_cast<unsigned>(value);
}

AuditConfig audit_config(const Options& o) {
  AuditConfig config;
  config.threshold = o.threshold;
  config.min_subgroup_n = o.min_subgroup;
  if (!o.metrics.empty()) {
    config.metrics.clear();
    for (const auto& name : o.metrics) config.metrics.push_back(parse_metric_id(name));
  }
  config.flag_policy = parse_flag_policy(o.flag_policy);
  config.flag_unknown = o.flag_unknown;
  config.bootstrap.iterations = o.bootstrap_n;
  config.bootstrap.ci_level = o.ci_level;
  config.bootstrap.master_seed = o.seed;
  config.bootstrap.degenerate_policy = parse_degenerate_policy(o.degenerate_policy);
  config.bootstrap.workers = workers_from_env();
  validate(config);
  return config;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& warning : warnings) err << "warning: " << warning << "\n";
}

std::string interval_text(const std::optional<Interval>& ci) {
  if (!ci) return "none";
  if (!ci->defined) return "undefined";
  return "[" + signed4(ci->lo) + ", " + signed4(ci->hi) + "]";
}

int cmd_audit(const Options& o, std::ostream& out, std::ostream& err) {
  const AuditConfig config = audit_config(o);
  const ChartMode mode = parse_chart_mode(o.chart_mode);
  std::vector<RenderFormat> formats;
  for (const auto& f : o.formats) formats.push_back(parse_render_format(f));
  const CardMeta meta = parse_card_meta(read_text_file(o.card_meta));

  const CohortTable cohort =
      prepare_for_audit(ingest_cohort(o.cohort, o.manifest), o.strict_bins);
  const AuditResult audit = run_audit(cohort, config);
  const ModelCard card = build_card(meta, audit);

  const fs::path dir(o.out_dir);
  write_text_file(dir / "card.json", render(card, RenderFormat::kCardJson));
  for (RenderFormat format : formats) {
    if (format == RenderFormat::kCardJson) continue;
    write_text_file(dir / file_name(format), render(card, format));
  }
  std::size_t charts = 0;
  for (const auto& factor : audit.factors) {
    for (MetricId metric : config.metrics) {
      const ChartSpec spec = chart_spec(audit, factor.factor.name, metric, mode);
      write_text_file(dir / chart_path(factor.factor.name, metric), render_chart(spec));
      ++charts;
    }
  }

  for (const auto& factor : audit.factors) {
    for (const auto& s : factor.subgroups) {
      for (MetricId metric : config.metrics) {
        const std::size_t m = index(metric);
        if (!s.flagged[m]) continue;
        out << "FLAG " << s.factor << "=" << s.value << " " << to_string(metric)
            << " delta=" << signed4(s.delta[m].value())
            << " ci=" << interval_text(s.delta_ci[m]) << "\n";
      }
    }
  }
  out << "audited " << audit.overall.n << " records over "
      << audit.factors.size() << " factors; wrote card and " << charts
      << " charts to " << o.out_dir << "\n";
  print_warnings(audit.warnings, err);

  int code = kExitOk;
  for (const auto& v : validate_card(card, o.strict)) {
    err << format_violation(v) << "\n";
    if (v.level == Severity::kError) code = kExitViolations;
  }
  return code;
}

int cmd_render(const Options& o, std::ostream& out, std::ostream&) {
  const RenderFormat format = parse_render_format(o.format);
  const ModelCard card = parse_card_json(read_text_file(o.card));
  emit(o.out_file, render(card, format), out);
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream&) {
  const ModelCard card = parse_card_json(read_text_file(o.card));
  int code = kExitOk;
  for (const auto& v : validate_card(card, o.strict)) {
    out << format_violation(v) << "\n";
    if (v.level == Severity::kError) code = kExitViolations;
  }
  return code;
}

int cmd_chart(const Options& o, std::ostream& out, std::ostream&) {
  ChartSpec spec;
  if (!o.chart_spec.empty()) {
    if (!o.card.empty()) throw UsageError("use either --spec or --card, not both");
    spec = parse_chart_spec(read_text_file(o.chart_spec));
  } else {
    if (o.card.empty() || o.factor.empty()) {
      throw UsageError("chart needs --spec, or --card with --factor");
    }
    const ModelCard card = parse_card_json(read_text_file(o.card));
    spec = chart_spec(card.quantitative_analysis, o.factor,
                      parse_metric_id(o.metric), parse_chart_mode(o.chart_mode),
                      o.hide);
  }
  emit(o.out_file, render_chart(spec), out);
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out, std::ostream&) {
  const SynthSpec spec = parse_synth_spec(read_text_file(o.synth_spec));
  const CohortTable cohort = synth_cohort(spec);
  const std::string csv = serialize_cohort(cohort);
  const fs::path dir(o.out_dir);
  write_text_file(dir / "cohort.csv", csv);
  write_text_file(dir / "manifest.json", serialize_manifest(spec.manifest));
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(csv)));
  out << "rows " << cohort.size() << " cohort_fnv1a64 " << hash << "\n";
  return kExitOk;
}

int cmd_power(const Options& o, std::ostream& out, std::ostream&) {
  SynthSpec spec = parse_synth_spec(read_text_file(o.synth_spec));
  spec.seed = o.seed;
  PowerScanConfig config;
  config.factor = o.factor;
  config.value = o.value;
  config.metric = parse_metric_id(o.metric);
  config.audit = audit_config(o);
  const auto cells = power_scan(spec, o.gaps, o.sizes, o.trials, config);
  out << "gap\tblock_n\ttrials\tdetections\trate\n";
  for (const auto& cell : cells) {
    out << format_number(cell.gap) << "\t" << cell.block_n << "\t" << cell.trials
        << "\t" << cell.detections << "\t" << fixed4(cell.rate()) << "\n";
  }
  return kExitOk;
}

void add_audit_settings(CLI::App* app, Options& o) {
  app->add_option("--threshold", o.threshold,
                  "Decision threshold; a score at or above it is abnormal")
      ->capture_default_str();
  app->add_option("--bootstrap-n", o.bootstrap_n, "Bootstrap iterations")
      ->capture_default_str();
  app->add_option("--ci-level", o.ci_level, "Confidence level in (0,1)")
      ->capture_default_str();
  app->add_option("--seed", o.seed, "Master seed for all randomness")
      ->capture_default_str();
  app->add_option("--min-subgroup", o.min_subgroup,
                  "Subgroups smaller than this get no intervals or flags")
      ->capture_default_str();
  app->add_option("--metrics", o.metrics,
                  "Comma-separated metrics (default: all seven)")
      ->delimiter(',');
  app->add_option("--flag-policy", o.flag_policy,
                  "ci_excludes_zero or abs_gap_over:<tau>")
      ->capture_default_str();
  app->add_option("--degenerate-policy", o.degenerate_policy,
                  "drop_and_count or propagate_undefined")
      ->capture_default_str();
  app->add_flag("--flag-unknown", o.flag_unknown,
                "Allow the \"unknown\" subgroup to be flagged");
}

}  // namespace

void OptionsDeleter::operator()(Options* options) const { delete options; }

OptionsPtr make_options() { return OptionsPtr(new Options()); }

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>(
      "Subgroup bias audits of binary classifiers, rendered as model fact cards.\n"
      "Environment: CARDFORGE_WORKERS sets the bootstrap worker count "
      "(results do not depend on it).",
      "cardforge");
  app->require_subcommand(1);
  app->fallthrough(false);

  CLI::App* audit = app->add_subcommand("audit", "Audit a cohort and write the card");
  audit->add_option("--cohort", o.cohort, "Cohort table (CSV)")
      ->required()->check(CLI::ExistingFile);
  audit->add_option("--manifest", o.manifest, "Factor manifest (JSON)")
      ->required()->check(CLI::ExistingFile);
  audit->add_option("--card-meta", o.card_meta, "Card prose sections (JSON)")
      ->required()->check(CLI::ExistingFile);
  audit->add_option("--out", o.out_dir, "Output directory")->required();
  audit->add_option("--format", o.formats,
                    "Comma-separated renders besides card_json: markdown,html")
      ->delimiter(',');
  audit->add_option("--chart-mode", o.chart_mode, "delta or raw")
      ->capture_default_str();
  audit->add_flag("--strict", o.strict,
                  "Unacknowledged disparities are errors (exit 1)");
  audit->add_flag("--strict-bins", o.strict_bins,
                  "Non-numeric cells in binned factors are errors");
  add_audit_settings(audit, o);

  CLI::App* render = app->add_subcommand("render", "Render a card_json document");
  render->add_option("--card", o.card, "card_json file")
      ->required()->check(CLI::ExistingFile);
  render->add_option("--format", o.format, "card_json, markdown, or html")
      ->capture_default_str();
  render->add_option("--out", o.out_file, "Output file (default: stdout)");

  CLI::App* validate = app->add_subcommand("validate", "Validate a card_json document");
  validate->add_option("--card", o.card, "card_json file")
      ->required()->check(CLI::ExistingFile);
  validate->add_flag("--strict", o.strict,
                     "Report unacknowledged disparities as errors");

  CLI::App* chart = app->add_subcommand("chart", "Render one SVG chart");
  chart->add_option("--spec", o.chart_spec, "Chart spec (JSON)")
      ->check(CLI::ExistingFile);
  chart->add_option("--card", o.card, "card_json file to chart from")
      ->check(CLI::ExistingFile);
  chart->add_option("--factor", o.factor, "Factor to chart (with --card)");
  chart->add_option("--metric", o.metric, "Metric to chart (with --card)")
      ->capture_default_str();
  chart->add_option("--chart-mode", o.chart_mode, "delta or raw")
      ->capture_default_str();
  chart->add_option("--hide", o.hide, "Subgroup values to leave out")
      ->delimiter(',');
  chart->add_option("--out", o.out_file, "Output file (default: stdout)");

  CLI::App* synth = app->add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--spec", o.synth_spec, "Synth spec (JSON)")
      ->required()->check(CLI::ExistingFile);
  synth->add_option("--out", o.out_dir,
                    "Output directory for cohort.csv and manifest.json")
      ->required();

  CLI::App* power = app->add_subcommand("power", "Detection rates of injected gaps");
  power->add_option("--spec", o.synth_spec, "Synth spec template (JSON)")
      ->required()->check(CLI::ExistingFile);
  power->add_option("--factor", o.factor, "Factor of the injected subgroup")
      ->required();
  power->add_option("--value", o.value, "Value of the injected subgroup")
      ->required();
  power->add_option("--metric", o.metric, "sensitivity or specificity")
      ->capture_default_str();
  power->add_option("--gaps", o.gaps, "Comma-separated gap sizes")
      ->delimiter(',')->capture_default_str();
  power->add_option("--sizes", o.sizes, "Comma-separated records per block")
      ->delimiter(',')->capture_default_str();
  power->add_option("--trials", o.trials, "Trials per cell")
      ->capture_default_str();
  add_audit_settings(power, o);
  return app;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  auto options = make_options();
  auto app = build_app(*options);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app->parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = app.get();
    for (CLI::App* sub : app->get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "Run with --help for usage.\n";
    return kExitUsage;
  }

  const Options& o = *options;
  const std::string command = app->get_subcommands().front()->get_name();
  try {
    if (command == "audit") return cmd_audit(o, out, err);
    if (command == "render") return cmd_render(o, out, err);
    if (command == "validate") return cmd_validate(o, out, err);
    if (command == "chart") return cmd_chart(o, out, err);
    if (command == "synth") return cmd_synth(o, out, err);
    if (command == "power") return cmd_power(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kInvalidConfig: return kExitUsage;
      case ErrorCode::kInvalidCard: return kExitViolations;
      default: return kExitDataError;
    }
  }
  err << "error: unknown command " << command << "\n";
  return kExitUsage;
}

}  // namespace cardforge::cli
