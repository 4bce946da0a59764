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

#ifndef CARDFORGE_CARD_H_
#define CARDFORGE_CARD_H_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "cardforge/audit.h"
#include "cardforge/cohort.h"
#include "cardforge/metrics.h"

namespace cardforge {

inline constexpr int kCardSchemaVersion = 1;

// Section keys of card_json, in document order.
inline constexpr std::array<std::string_view, 7> kCardSections = {
    "model_details",           "intended_use",
    "factors",                 "metrics_description",
    "training_eval_data",      "caveats_recommendations",
    "quantitative_analysis"};

// Rendered headings, same order as kCardSections.
inline constexpr std::array<std::string_view, 7> kCardSectionTitles = {
    "Model Details",
    "Intended Use",
    "Factors",
    "Metrics",
    "Training & Evaluation Data",
    "Caveats & Recommendations",
    "Quantitative Analysis"};

struct ModelDetails {
  std::string name;
  std::string version;
  std::string date;
  std::string architecture;
  std::vector<std::string> description;

  bool operator==(const ModelDetails&) const = default;
};

struct FactorGroup {
  FactorCategory category = FactorCategory::kSocioDemographic;
  std::vector<FactorDescriptor> factors;

  bool operator==(const FactorGroup&) const = default;
};

struct FactorsSection {
  std::vector<FactorGroup> groups;
  std::vector<std::string> not_studied;

  bool operator==(const FactorsSection&) const = default;
};

struct MetricsDescription {
  std::vector<MetricId> metrics;
  double threshold = kDefaultThreshold;
  BootstrapConfig bootstrap;
  std::uint32_t min_subgroup_n = kDefaultMinSubgroupN;
  FlagPolicy flag_policy;
  std::vector<std::string> notes;

  bool operator==(const MetricsDescription&) const = default;
};

struct TrainingEvalData {
  std::string training;
  std::string evaluation;
  // Set when training and evaluation provenance are deliberately the same.
  bool same_data = false;

  bool operator==(const TrainingEvalData&) const = default;
};

struct ModelCard {
  ModelDetails model_details;
  std::string intended_use;
  FactorsSection factors;
  MetricsDescription metrics_description;
  TrainingEvalData training_eval_data;
  // Entries may carry acknowledgment tags: ack:<factor>:<value> or ack:all.
  std::vector<std::string> caveats_recommendations;
  AuditResult quantitative_analysis;

  bool operator==(const ModelCard&) const = default;
};

// The hand-written part of a card. JSON layout:
//   {"model_details": {"name", "version", "date", "architecture",
//                      "description": [...]},
//    "intended_use": "...",
//    "training_eval_data": {"training", "evaluation", "same_data"?},
//    "caveats_recommendations": [...],
//    "factors_not_studied"?: [...], "metrics_notes"?: [...]}
struct CardMeta {
  ModelDetails model_details;
  std::string intended_use;
  TrainingEvalData training_eval_data;
  std::vector<std::string> caveats_recommendations;
  std::vector<std::string> factors_not_studied;
  std::vector<std::string> metrics_notes;
};

// Missing keys are left empty; build_card reports them.
CardMeta parse_card_meta(std::string_view json_text);

// Throws MissingSection naming the first absent prose section. The factors
// and metrics sections are derived from the audit.
ModelCard build_card(const CardMeta& meta, const AuditResult& audit);

enum class Severity { kError, kWarning };

struct Violation {
  Severity level = Severity::kError;
  std::string code;
  std::string section;
  std::string message;

  bool operator==(const Violation&) const = default;
};

// "LEVEL CODE section: message"
std::string format_violation(const Violation& violation);

// Section presence, factor coverage, provenance distinctness, and
// acknowledgment of every flagged disparity. UnacknowledgedDisparity is a
// warning unless `strict`.
std::vector<Violation> validate_card(const ModelCard& card, bool strict = false);

// True when some caveat carries ack:all or ack:<factor>:<value>.
bool acknowledged(std::span<const std::string> caveats, std::string_view factor,
                  std::string_view value);

enum class RenderFormat { kCardJson, kMarkdown, kHtml };

RenderFormat parse_render_format(std::string_view text);
std::string_view file_name(RenderFormat format);

// Byte-deterministic. Throws InvalidCard when validate_card reports an error.
std::string render(const ModelCard& card, RenderFormat format);

// Inverse of render(card, kCardJson). Throws ParseError on malformed input and
// UnsupportedSchema for a newer schema_version. Absent sections parse empty.
ModelCard parse_card_json(std::string_view json_text);

// Relative path of a factor/metric chart: charts/<factor>_<metric>.svg, with
// characters outside [A-Za-z0-9_-] in the factor name replaced by '_'.
std::string chart_path(std::string_view factor, MetricId metric);

// Fixed 4-decimal rendering ("-0.0000" normalizes to "0.0000").
std::string fixed4(double value);
// As fixed4 with an explicit sign on non-zero values.
std::string signed4(double value);

}  // namespace cardforge

#endif  // CARDFORGE_CARD_H_
