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

#include "cardforge/card.h"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "cardforge/error.h"
#include "cardforge/io.h"
#include "json_codec.h"

namespace cardforge {
namespace {

using codec::Json;

constexpr std::array<FactorCategory, 5> kCategoryOrder = {
    FactorCategory::kSocioDemographic, FactorCategory::kAnatomic,
    FactorCategory::kDiseaseDependent, FactorCategory::kInstrumental,
    FactorCategory::kDataSource};

bool blank(std::string_view text) { return trim(text).empty(); }

std::string percent_label(double ci_level) {
  return format_number(ci_level * 100.0) + "%";
}

std::string metric_names(const std::vector<MetricId>& metrics) {
  std::string out;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (i) out += ", ";
    out += display_name(metrics[i]);
  }
  return out;
}

std::string value_text(MetricValue value) {
  switch (value.state()) {
    case MetricState::kDefined: return fixed4(value.value());
    case MetricState::kUndefined: return "undefined";
    case MetricState::kUnavailable: return "n/a";
  }
  return "";
}

std::string delta_text(MetricValue value) {
  if (!value.defined()) return value_text(value);
  return signed4(value.value());
}

std::string interval_text(const std::optional<Interval>& ci, bool signed_values) {
  if (!ci) return "";
  if (!ci->defined) return "[undefined]";
  auto f = signed_values ? signed4 : fixed4;
  return "[" + f(ci->lo) + ", " + f(ci->hi) + "]";
}

std::string factor_summary(const FactorDescriptor& factor) {
  std::string out = factor.name;
  if (factor.kind == FactorKind::kNumericBinned) {
    out += " (binned at ";
    for (std::size_t i = 0; i < factor.bin_edges.size(); ++i) {
      if (i) out += ", ";
      out += format_number(factor.bin_edges[i]);
    }
    out += ")";
  } else if (factor.kind == FactorKind::kFindingFlag) {
    out += " (finding flag)";
  }
  return out;
}

std::string flagged_metrics(const SubgroupReport& subgroup) {
  std::string out;
  for (MetricId metric : kAllMetrics) {
    if (!subgroup.flagged[index(metric)]) continue;
    if (!out.empty()) out += ", ";
    out += display_name(metric);
  }
  return out;
}

struct Flag {
  const SubgroupReport* subgroup;
  MetricId metric;
};

std::vector<Flag> collect_flags(const AuditResult& audit) {
  std::vector<Flag> flags;
  for (const auto& factor : audit.factors) {
    for (const auto& subgroup : factor.subgroups) {
      for (MetricId metric : kAllMetrics) {
        if (subgroup.flagged[index(metric)]) flags.push_back({&subgroup, metric});
      }
    }
  }
  return flags;
}

std::string flag_sentence(const Flag& flag) {
  const auto& s = *flag.subgroup;
  const std::size_t m = index(flag.metric);
  const MetricValue delta = s.delta[m];
  std::string out = s.factor + " = " + s.value + ": " +
                    std::string(display_name(flag.metric)) + " gap " +
                    delta_text(delta);
  if (s.delta_ci[m]) out += " " + interval_text(s.delta_ci[m], true);
  if (delta.defined()) {
    out += delta.value() < 0.0 ? " (unfavorable)" : " (favorable)";
  }
  return out;
}

std::string provenance_line(const Provenance& p) {
  std::string out = p.dataset_name;
  if (!p.dataset_version.empty()) out += " " + p.dataset_version;
  if (!p.date_range.empty()) out += ", " + p.date_range;
  return out;
}

// Bullet lines of each section, shared by the markdown and HTML renderers.
// Markdown emphasis (**label:**) is translated by the HTML renderer.
struct Bullet {
  std::string label;
  std::string text;
};

std::vector<Bullet> model_detail_bullets(const ModelDetails& d) {
  std::vector<Bullet> out;
  out.push_back({"Name", d.name});
  if (!d.version.empty()) out.push_back({"Version", d.version});
  if (!d.date.empty()) out.push_back({"Date", d.date});
  if (!d.architecture.empty()) out.push_back({"Architecture", d.architecture});
  for (const auto& line : d.description) out.push_back({"", line});
  return out;
}

std::vector<Bullet> factor_bullets(const FactorsSection& f) {
  std::vector<Bullet> out;
  for (const auto& group : f.groups) {
    std::string text;
    for (std::size_t i = 0; i < group.factors.size(); ++i) {
      if (i) text += ", ";
      text += factor_summary(group.factors[i]);
    }
    out.push_back({std::string(category_title(group.category)), text});
  }
  if (!f.not_studied.empty()) {
    std::string text;
    for (std::size_t i = 0; i < f.not_studied.size(); ++i) {
      if (i) text += ", ";
      text += f.not_studied[i];
    }
    out.push_back({"Relevant factors not studied", text});
  }
  return out;
}

std::vector<Bullet> metric_bullets(const MetricsDescription& m) {
  std::vector<Bullet> out;
  out.push_back({"Evaluation metrics", metric_names(m.metrics)});
  out.push_back({"Decision threshold",
                 fixed4(m.threshold) + " (score at or above is abnormal)"});
  out.push_back({"Computation",
                 "metrics are calculated from per-subgroup confusion matrices; "
                 "AUC is the Mann-Whitney statistic with ties counted as one "
                 "half"});
  out.push_back(
      {"Confidence intervals",
       "percentile bootstrap, " + std::to_string(m.bootstrap.iterations) +
           " resamples of the whole cohort, " +
           percent_label(m.bootstrap.ci_level) + " level, seed " +
           std::to_string(m.bootstrap.master_seed) + ", degenerate replicates " +
           std::string(to_string(m.bootstrap.degenerate_policy))});
  out.push_back({"Gap",
                 "ΔM = M(subgroup) - M(overall); a positive gap favors the "
                 "subgroup, a negative gap marks it unfavorable"});
  out.push_back({"Disparity flag", to_string(m.flag_policy)});
  out.push_back({"Minimum subgroup size",
                 std::to_string(m.min_subgroup_n) +
                     " (smaller subgroups are reported without intervals)"});
  for (const auto& note : m.notes) out.push_back({"", note});
  return out;
}

std::vector<Bullet> data_bullets(const TrainingEvalData& d,
                                 const Provenance& evaluated) {
  std::vector<Bullet> out;
  out.push_back({"Trained", d.training});
  out.push_back({"Evaluated", d.evaluation});
  if (!evaluated.dataset_name.empty()) {
    out.push_back({"Evaluation cohort", provenance_line(evaluated)});
  }
  if (!evaluated.description.empty()) out.push_back({"", evaluated.description});
  return out;
}

// ---------------------------------------------------------------- markdown

std::string md_escape_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out.push_back(c);
  }
  return out;
}

void md_bullets(std::ostringstream& out, const std::vector<Bullet>& bullets) {
  for (const auto& b : bullets) {
    out << "- ";
    if (!b.label.empty()) out << "**" << b.label << ":** ";
    out << b.text << "\n";
  }
}

void md_quantitative(std::ostringstream& out, const AuditResult& audit) {
  const auto& config = audit.config;
  const std::string ci_label = percent_label(config.bootstrap.ci_level) + " CI";
  out << "Overall: n = " << audit.overall.n << " (" << audit.overall.n_pos
      << " abnormal, " << audit.overall.n_neg << " normal)\n\n";
  out << "| Metric | Value | " << ci_label << " |\n|---|---|---|\n";
  for (MetricId metric : config.metrics) {
    out << "| " << display_name(metric) << " | "
        << value_text(audit.overall.get(metric)) << " | "
        << interval_text(audit.overall_ci[index(metric)], false) << " |\n";
  }

  out << "\n### Flagged disparities\n\n";
  const auto flags = collect_flags(audit);
  if (flags.empty()) out << "None.\n";
  for (const auto& flag : flags) out << "- " << flag_sentence(flag) << "\n";

  for (const auto& factor : audit.factors) {
    out << "\n### " << factor.factor.name << " ("
        << category_title(factor.factor.category) << ")\n\n";
    out << "Charts:";
    for (std::size_t i = 0; i < config.metrics.size(); ++i) {
      const MetricId metric = config.metrics[i];
      out << (i ? ", " : " ") << "[" << display_name(metric) << "]("
          << chart_path(factor.factor.name, metric) << ")";
    }
    out << "\n\n| Value | n |";
    for (MetricId metric : config.metrics) out << " " << display_name(metric) << " |";
    out << " Flags |\n|---|---|";
    for (std::size_t i = 0; i < config.metrics.size(); ++i) out << "---|";
    out << "---|\n";
    for (const auto& s : factor.subgroups) {
      out << "| " << md_escape_cell(s.value) << " | " << s.n << " |";
      for (MetricId metric : config.metrics) {
        const std::size_t m = index(metric);
        out << " " << value_text(s.metrics.get(metric)) << " (Δ "
            << delta_text(s.delta[m]);
        if (s.delta_ci[m]) out << " " << interval_text(s.delta_ci[m], true);
        out << ") |";
      }
      std::string flags_cell;
      if (s.suppressed) {
        flags_cell = "suppressed (n < " + std::to_string(config.min_subgroup_n) + ")";
      } else {
        flags_cell = flagged_metrics(s);
      }
      out << " " << flags_cell << " |\n";
    }
  }

  if (!audit.pathology_slices.empty()) {
    out << "\n### Pathology sensitivity\n\n";
    out << "| Finding | n | Sensitivity | " << ci_label
        << " | Excluded normals |\n|---|---|---|---|---|\n";
    for (const auto& slice : audit.pathology_slices) {
      out << "| " << md_escape_cell(slice.finding) << " | " << slice.n << " | "
          << value_text(slice.sensitivity) << " | "
          << interval_text(slice.ci, false) << " | " << slice.excluded_normals
          << " |\n";
    }
  }

  if (!audit.warnings.empty()) {
    out << "\n### Audit warnings\n\n";
    for (const auto& warning : audit.warnings) out << "- " << warning << "\n";
  }
}

std::string render_markdown(const ModelCard& card) {
  std::ostringstream out;
  out << "# Model Facts Card: " << card.model_details.name << "\n\n";
  out << "## " << kCardSectionTitles[0] << "\n\n";
  md_bullets(out, model_detail_bullets(card.model_details));
  out << "\n## " << kCardSectionTitles[1] << "\n\n"
      << card.intended_use << "\n";
  out << "\n## " << kCardSectionTitles[2] << "\n\n";
  md_bullets(out, factor_bullets(card.factors));
  out << "\n## " << kCardSectionTitles[3] << "\n\n";
  md_bullets(out, metric_bullets(card.metrics_description));
  out << "\n## " << kCardSectionTitles[4] << "\n\n";
  md_bullets(out, data_bullets(card.training_eval_data,
                               card.quantitative_analysis.manifest.provenance));
  out << "\n## " << kCardSectionTitles[5] << "\n\n";
  for (const auto& caveat : card.caveats_recommendations) {
    out << "- " << caveat << "\n";
  }
  out << "\n## " << kCardSectionTitles[6] << "\n\n";
  md_quantitative(out, card.quantitative_analysis);
  return out.str();
}

// -------------------------------------------------------------------- html

std::string html_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void html_bullets(std::ostringstream& out, const std::vector<Bullet>& bullets) {
  out << "<ul>\n";
  for (const auto& b : bullets) {
    out << "<li>";
    if (!b.label.empty()) out << "<strong>" << html_escape(b.label) << ":</strong> ";
    out << html_escape(b.text) << "</li>\n";
  }
  out << "</ul>\n";
}

void html_quantitative(std::ostringstream& out, const AuditResult& audit) {
  const auto& config = audit.config;
  const std::string ci_label = percent_label(config.bootstrap.ci_level) + " CI";
  out << "<p>Overall: n = " << audit.overall.n << " (" << audit.overall.n_pos
      << " abnormal, " << audit.overall.n_neg << " normal)</p>\n";
  out << "<table>\n<tr><th>Metric</th><th>Value</th><th>" << ci_label
      << "</th></tr>\n";
  for (MetricId metric : config.metrics) {
    out << "<tr><td>" << display_name(metric) << "</td><td>"
        << value_text(audit.overall.get(metric)) << "</td><td>"
        << interval_text(audit.overall_ci[index(metric)], false)
        << "</td></tr>\n";
  }
  out << "</table>\n";

  out << "<h3>Flagged disparities</h3>\n";
  const auto flags = collect_flags(audit);
  if (flags.empty()) {
    out << "<p>None.</p>\n";
  } else {
    out << "<ul>\n";
    for (const auto& flag : flags) {
      out << "<li>" << html_escape(flag_sentence(flag)) << "</li>\n";
    }
    out << "</ul>\n";
  }

  for (const auto& factor : audit.factors) {
    out << "<h3>" << html_escape(factor.factor.name) << " ("
        << category_title(factor.factor.category) << ")</h3>\n";
    out << "<table>\n<tr><th>Value</th><th>n</th>";
    for (MetricId metric : config.metrics) {
      out << "<th>" << display_name(metric) << "</th>";
    }
    out << "<th>Flags</th></tr>\n";
    for (const auto& s : factor.subgroups) {
      out << "<tr" << (s.any_flagged() ? " class=\"flagged\"" : "") << "><td>"
          << html_escape(s.value) << "</td><td>" << s.n << "</td>";
      for (MetricId metric : config.metrics) {
        const std::size_t m = index(metric);
        out << "<td>" << value_text(s.metrics.get(metric)) << "<br>Δ "
            << delta_text(s.delta[m]);
        if (s.delta_ci[m]) out << " " << interval_text(s.delta_ci[m], true);
        out << "</td>";
      }
      out << "<td>"
          << (s.suppressed ? "suppressed (n &lt; " +
                                 std::to_string(config.min_subgroup_n) + ")"
                           : html_escape(flagged_metrics(s)))
          << "</td></tr>\n";
    }
    out << "</table>\n<div class=\"charts\">\n";
    for (MetricId metric : config.metrics) {
      const std::string path = chart_path(factor.factor.name, metric);
      out << "<img src=\"" << html_escape(path) << "\" alt=\""
          << display_name(metric) << " by " << html_escape(factor.factor.name)
          << "\">\n";
    }
    out << "</div>\n";
  }

  if (!audit.pathology_slices.empty()) {
    out << "<h3>Pathology sensitivity</h3>\n<table>\n<tr><th>Finding</th>"
           "<th>n</th><th>Sensitivity</th><th>"
        << ci_label << "</th><th>Excluded normals</th></tr>\n";
    for (const auto& slice : audit.pathology_slices) {
      out << "<tr><td>" << html_escape(slice.finding) << "</td><td>"
          << slice.n << "</td><td>" << value_text(slice.sensitivity)
          << "</td><td>" << interval_text(slice.ci, false) << "</td><td>"
          << slice.excluded_normals << "</td></tr>\n";
    }
    out << "</table>\n";
  }

  if (!audit.warnings.empty()) {
    out << "<h3>Audit warnings</h3>\n<ul>\n";
    for (const auto& warning : audit.warnings) {
      out << "<li>" << html_escape(warning) << "</li>\n";
    }
    out << "</ul>\n";
  }
}

std::string render_html(const ModelCard& card) {
  std::ostringstream out;
  const std::string title = "Model Facts Card: " + card.model_details.name;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>" << html_escape(title) << "</title>\n"
      << "<style>body{font-family:sans-serif;max-width:1100px;margin:2em auto}"
         "table{border-collapse:collapse;margin:1em 0}"
         "td,th{border:1px solid #999;padding:4px 8px;font-size:13px}"
         "tr.flagged{background:#fdecea}.charts img{display:block;margin:8px 0}"
         "</style>\n</head>\n<body>\n";
  out << "<h1>" << html_escape(title) << "</h1>\n";
  out << "<h2>" << kCardSectionTitles[0] << "</h2>\n";
  html_bullets(out, model_detail_bullets(card.model_details));
  out << "<h2>" << kCardSectionTitles[1] << "</h2>\n<p>"
      << html_escape(card.intended_use) << "</p>\n";
  out << "<h2>" << kCardSectionTitles[2] << "</h2>\n";
  html_bullets(out, factor_bullets(card.factors));
  out << "<h2>" << kCardSectionTitles[3] << "</h2>\n";
  html_bullets(out, metric_bullets(card.metrics_description));
  out << "<h2>" << html_escape(kCardSectionTitles[4]) << "</h2>\n";
  html_bullets(out, data_bullets(card.training_eval_data,
                                 card.quantitative_analysis.manifest.provenance));
  out << "<h2>" << html_escape(kCardSectionTitles[5]) << "</h2>\n<ul>\n";
  for (const auto& caveat : card.caveats_recommendations) {
    out << "<li>" << html_escape(caveat) << "</li>\n";
  }
  out << "</ul>\n";
  out << "<h2>" << kCardSectionTitles[6] << "</h2>\n";
  html_quantitative(out, card.quantitative_analysis);
  out << "</body>\n</html>\n";
  return out.str();
}

// -------------------------------------------------------------- card_json

Json encode_card(const ModelCard& card) {
  Json j;
  j["schema_version"] = kCardSchemaVersion;
  const auto& d = card.model_details;
  j["model_details"] = {{"name", d.name},
                        {"version", d.version},
                        {"date", d.date},
                        {"architecture", d.architecture},
                        {"description", d.description}};
  j["intended_use"] = card.intended_use;
  Json groups = Json::array();
  for (const auto& group : card.factors.groups) {
    Json g;
    g["category"] = to_string(group.category);
    g["factors"] = Json::array();
    for (const auto& factor : group.factors) g["factors"].push_back(codec::encode(factor));
    groups.push_back(std::move(g));
  }
  j["factors"] = {{"groups", groups}, {"not_studied", card.factors.not_studied}};
  const auto& m = card.metrics_description;
  j["metrics_description"] = {{"metrics", codec::encode_metric_list(m.metrics)},
                              {"threshold", m.threshold},
                              {"bootstrap", codec::encode(m.bootstrap)},
                              {"min_subgroup_n", m.min_subgroup_n},
                              {"flag_policy", to_string(m.flag_policy)},
                              {"notes", m.notes}};
  const auto& t = card.training_eval_data;
  j["training_eval_data"] = {{"training", t.training},
                             {"evaluation", t.evaluation},
                             {"same_data", t.same_data}};
  j["caveats_recommendations"] = card.caveats_recommendations;
  j["quantitative_analysis"] = codec::encode(card.quantitative_analysis);
  return j;
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::string>>();
}

ModelCard decode_card(const Json& j) {
  ModelCard card;
  if (j.contains("model_details")) {
    const auto& d = j.at("model_details");
    card.model_details.name = d.value("name", "");
    card.model_details.version = d.value("version", "");
    card.model_details.date = d.value("date", "");
    card.model_details.architecture = d.value("architecture", "");
    card.model_details.description = string_list(d, "description");
  }
  card.intended_use = j.value("intended_use", "");
  if (j.contains("factors")) {
    const auto& f = j.at("factors");
    if (f.contains("groups")) {
      for (const auto& g : f.at("groups")) {
        FactorGroup group;
        group.category = parse_factor_category(g.at("category").get<std::string>());
        for (const auto& factor : g.at("factors")) {
          group.factors.push_back(codec::decode_factor(factor));
        }
        card.factors.groups.push_back(std::move(group));
      }
    }
    card.factors.not_studied = string_list(f, "not_studied");
  }
  if (j.contains("metrics_description")) {
    const auto& m = j.at("metrics_description");
    auto& md = card.metrics_description;
    md.metrics = codec::decode_metric_list(m.at("metrics"));
    md.threshold = m.at("threshold").get<double>();
    md.bootstrap = codec::decode_bootstrap(m.at("bootstrap"));
    md.min_subgroup_n = m.at("min_subgroup_n").get<std::uint32_t>();
    md.flag_policy = parse_flag_policy(m.at("flag_policy").get<std::string>());
    md.notes = string_list(m, "notes");
  }
  if (j.contains("training_eval_data")) {
    const auto& t = j.at("training_eval_data");
    card.training_eval_data.training = t.value("training", "");
    card.training_eval_data.evaluation = t.value("evaluation", "");
    card.training_eval_data.same_data = t.value("same_data", false);
  }
  card.caveats_recommendations = string_list(j, "caveats_recommendations");
  if (j.contains("quantitative_analysis")) {
    card.quantitative_analysis = codec::decode_audit(j.at("quantitative_analysis"));
  }
  return card;
}

bool is_tag_boundary(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == ',' || c == ';' ||
         c == ')' || c == ']';
}

}  // namespace

std::string fixed4(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                       std::chars_format::fixed, 4);
  std::string out(buffer, ptr);
  if (out == "-0.0000") out = "0.0000";
  return out;
}

std::string signed4(double value) {
  std::string out = fixed4(value);
  if (out != "0.0000" && out.front() != '-') out.insert(out.begin(), '+');
  return out;
}

std::string chart_path(std::string_view factor, MetricId metric) {
  std::string name;
  for (char c : factor) {
    const bool keep = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                      (c >= '0' && c <= '9') || c == '_' || c == '-';
    name.push_back(keep ? c : '_');
  }
  return "charts/" + name + "_" + std::string(to_string(metric)) + ".svg";
}

CardMeta parse_card_meta(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("card metadata: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kParseError, "card metadata must be a JSON object");
  }
  CardMeta meta;
  try {
    if (j.contains("model_details")) {
      const auto& d = j.at("model_details");
      meta.model_details.name = d.value("name", "");
      meta.model_details.version = d.value("version", "");
      meta.model_details.date = d.value("date", "");
      meta.model_details.architecture = d.value("architecture", "");
      meta.model_details.description = string_list(d, "description");
    }
    meta.intended_use = j.value("intended_use", "");
    if (j.contains("training_eval_data")) {
      const auto& t = j.at("training_eval_data");
      meta.training_eval_data.training = t.value("training", "");
      meta.training_eval_data.evaluation = t.value("evaluation", "");
      meta.training_eval_data.same_data = t.value("same_data", false);
    }
    meta.caveats_recommendations = string_list(j, "caveats_recommendations");
    meta.factors_not_studied = string_list(j, "factors_not_studied");
    meta.metrics_notes = string_list(j, "metrics_notes");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("card metadata: ") + e.what());
  }
  return meta;
}

ModelCard build_card(const CardMeta& meta, const AuditResult& audit) {
  if (blank(meta.model_details.name)) {
    throw Error(ErrorCode::kMissingSection, "model_details");
  }
  if (blank(meta.intended_use)) {
    throw Error(ErrorCode::kMissingSection, "intended_use");
  }
  if (blank(meta.training_eval_data.training) ||
      blank(meta.training_eval_data.evaluation)) {
    throw Error(ErrorCode::kMissingSection, "training_eval_data");
  }
  if (std::all_of(meta.caveats_recommendations.begin(),
                  meta.caveats_recommendations.end(),
                  [](const std::string& c) { return blank(c); })) {
    throw Error(ErrorCode::kMissingSection, "caveats_recommendations");
  }

  ModelCard card;
  card.model_details = meta.model_details;
  card.intended_use = meta.intended_use;
  for (FactorCategory category : kCategoryOrder) {
    FactorGroup group{category, {}};
    for (const auto& factor : audit.manifest.factors) {
      if (factor.category == category) group.factors.push_back(factor);
    }
    if (!group.factors.empty()) card.factors.groups.push_back(std::move(group));
  }
  card.factors.not_studied = meta.factors_not_studied;

  const AuditConfig& config = audit.config;
  card.metrics_description.metrics = config.metrics;
  card.metrics_description.threshold = config.threshold;
  card.metrics_description.bootstrap = config.bootstrap;
  card.metrics_description.min_subgroup_n = config.min_subgroup_n;
  card.metrics_description.flag_policy = config.flag_policy;
  card.metrics_description.notes = meta.metrics_notes;

  card.training_eval_data = meta.training_eval_data;
  card.caveats_recommendations = meta.caveats_recommendations;
  card.quantitative_analysis = audit;
  return card;
}

std::string format_violation(const Violation& v) {
  return std::string(v.level == Severity::kError ? "ERROR" : "WARNING") + " " +
         v.code + " " + v.section + ": " + v.message;
}

bool acknowledged(std::span<const std::string> caveats, std::string_view factor,
                  std::string_view value) {
  const std::string wanted =
      "ack:" + std::string(factor) + ":" + std::string(value);
  for (const auto& caveat : caveats) {
    std::size_t pos = 0;
    while ((pos = caveat.find("ack:", pos)) != std::string::npos) {
      if (pos > 0 && !is_tag_boundary(caveat[pos - 1]) && caveat[pos - 1] != '(' &&
          caveat[pos - 1] != '[') {
        pos += 4;
        continue;
      }
      std::size_t end = pos;
      while (end < caveat.size() && !is_tag_boundary(caveat[end])) ++end;
      std::string_view tag(caveat.data() + pos, end - pos);
      while (!tag.empty() && (tag.back() == '.' || tag.back() == ':')) {
        tag.remove_suffix(1);
      }
      if (tag == "ack:all" || tag == wanted) return true;
      pos = end;
    }
  }
  return false;
}

std::vector<Violation> validate_card(const ModelCard& card, bool strict) {
  std::vector<Violation> out;
  auto missing = [&](std::string_view section, std::string message) {
    out.push_back({Severity::kError, "MissingSection", std::string(section),
                   std::move(message)});
  };
  if (blank(card.model_details.name)) {
    missing("model_details", "model name is empty");
  }
  if (blank(card.intended_use)) missing("intended_use", "section is empty");
  if (card.factors.groups.empty()) missing("factors", "no factors listed");
  if (card.metrics_description.metrics.empty()) {
    missing("metrics_description", "no metrics listed");
  }
  if (blank(card.training_eval_data.training) ||
      blank(card.training_eval_data.evaluation)) {
    missing("training_eval_data",
            "training and evaluation provenance are both required");
  }
  if (std::all_of(card.caveats_recommendations.begin(),
                  card.caveats_recommendations.end(),
                  [](const std::string& c) { return blank(c); })) {
    missing("caveats_recommendations", "no caveats or recommendations");
  }
  const AuditResult& audit = card.quantitative_analysis;
  if (audit.factors.empty() || audit.overall.n == 0) {
    missing("quantitative_analysis", "no audit results");
  }

  for (const auto& factor : audit.factors) {
    bool listed = false;
    for (const auto& group : card.factors.groups) {
      for (const auto& entry : group.factors) {
        listed = listed || entry.name == factor.factor.name;
      }
    }
    if (!listed && !card.factors.groups.empty()) {
      out.push_back({Severity::kError, "FactorNotListed", "factors",
                     "factor '" + factor.factor.name +
                         "' is analysed but not listed"});
    }
  }

  const auto& data = card.training_eval_data;
  if (!blank(data.training) && data.training == data.evaluation &&
      !data.same_data) {
    out.push_back({Severity::kError, "ProvenanceNotDistinct",
                   "training_eval_data",
                   "training and evaluation provenance are identical; set "
                   "same_data if intended"});
  }

  for (const auto& factor : audit.factors) {
    for (const auto& subgroup : factor.subgroups) {
      if (!subgroup.any_flagged()) continue;
      if (acknowledged(card.caveats_recommendations, subgroup.factor,
                       subgroup.value)) {
        continue;
      }
      out.push_back({strict ? Severity::kError : Severity::kWarning,
                     "UnacknowledgedDisparity", "caveats_recommendations",
                     "flagged " + subgroup.factor + "=" + subgroup.value + " (" +
                         flagged_metrics(subgroup) + ") has no ack:" +
                         subgroup.factor + ":" + subgroup.value + " caveat"});
    }
  }
  return out;
}

RenderFormat parse_render_format(std::string_view text) {
  if (text == "card_json" || text == "json") return RenderFormat::kCardJson;
  if (text == "markdown" || text == "md") return RenderFormat::kMarkdown;
  if (text == "html") return RenderFormat::kHtml;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown format '" + std::string(text) +
                  "' (expected card_json, markdown, or html)");
}

std::string_view file_name(RenderFormat format) {
  switch (format) {
    case RenderFormat::kCardJson: return "card.json";
    case RenderFormat::kMarkdown: return "card.md";
    case RenderFormat::kHtml: return "card.html";
  }
  return "";
}

std::string render(const ModelCard& card, RenderFormat format) {
  for (const auto& violation : validate_card(card)) {
    if (violation.level == Severity::kError) {
      throw Error(ErrorCode::kInvalidCard, format_violation(violation));
    }
  }
  switch (format) {
    case RenderFormat::kCardJson: return encode_card(card).dump(2) + "\n";
    case RenderFormat::kMarkdown: return render_markdown(card);
    case RenderFormat::kHtml: return render_html(card);
  }
  return "";
}

ModelCard parse_card_json(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!j.is_object() || !j.contains("schema_version") ||
      !j.at("schema_version").is_number_integer()) {
    throw Error(ErrorCode::kParseError,
                "card_json needs an integer schema_version");
  }
  const int version = j.at("schema_version").get<int>();
  if (version > kCardSchemaVersion || version < 1) {
    throw Error(ErrorCode::kUnsupportedSchema,
                "schema_version " + std::to_string(version) +
                    " is not supported (this build reads up to " +
                    std::to_string(kCardSchemaVersion) + ")");
  }
  try {
    return decode_card(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

}  // namespace cardforge
