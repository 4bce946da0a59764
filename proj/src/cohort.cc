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

#include "cardforge/cohort.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "cardforge/error.h"
#include "cardforge/io.h"
#include "json.hpp"

namespace cardforge {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kIdColumn = "id";
constexpr std::string_view kLabelColumn = "y_true";
constexpr std::string_view kScoreColumn = "y_score";
constexpr std::string_view kPredColumn = "y_pred";

bool is_reserved_column(std::string_view name) {
  return name == kIdColumn || name == kLabelColumn || name == kScoreColumn ||
         name == kPredColumn;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<int> parse_binary(std::string_view text) {
  text = trim(text);
  if (text == "0") return 0;
  if (text == "1") return 1;
  return std::nullopt;
}

std::string join_rows(const std::vector<std::size_t>& rows) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += std::to_string(rows[i]);
  }
  if (rows.size() > shown) {
    out += " and " + std::to_string(rows.size() - shown) + " more";
  }
  return out;
}

void validate_manifest(const Manifest& manifest) {
  std::unordered_set<std::string> names;
  for (const auto& factor : manifest.factors) {
    if (factor.name.empty()) {
      throw Error(ErrorCode::kManifestMismatch, "factor with empty name");
    }
    if (factor.name.starts_with(kDerivedPrefix)) {
      throw Error(ErrorCode::kManifestMismatch,
                  "factor name '" + factor.name + "' uses the reserved prefix '" +
                      std::string(kDerivedPrefix) + "'");
    }
    if (is_reserved_column(factor.name)) {
      throw Error(ErrorCode::kManifestMismatch,
                  "factor name '" + factor.name + "' is a reserved column");
    }
    if (!names.insert(factor.name).second) {
      throw Error(ErrorCode::kManifestMismatch,
                  "duplicate factor name '" + factor.name + "'");
    }
    const bool binned = factor.kind == FactorKind::kNumericBinned;
    if (binned && factor.bin_edges.empty()) {
      throw Error(ErrorCode::kManifestMismatch,
                  "numeric_binned factor '" + factor.name +
                      "' needs non-empty bin_edges");
    }
    if (!binned && !factor.bin_edges.empty()) {
      throw Error(ErrorCode::kManifestMismatch,
                  "bin_edges given for non-binned factor '" + factor.name + "'");
    }
    for (std::size_t i = 0; i < factor.bin_edges.size(); ++i) {
      if (!std::isfinite(factor.bin_edges[i]) ||
          (i > 0 && !(factor.bin_edges[i - 1] < factor.bin_edges[i]))) {
        throw Error(ErrorCode::kManifestMismatch,
                    "bin_edges of '" + factor.name +
                        "' must be finite and strictly ascending");
      }
    }
  }
  for (const auto& name : manifest.finding_count_from) {
    const FactorDescriptor* factor = manifest.find(name);
    if (factor == nullptr || factor->kind != FactorKind::kFindingFlag) {
      throw Error(ErrorCode::kManifestMismatch,
                  "finding_count_from names '" + name +
                      "', which is not a finding_flag factor");
    }
  }
}

}  // namespace

std::string_view PredictionRecord::factor(std::string_view name) const {
  const auto it = factors.find(name);
  return it == factors.end() ? kUnknown : std::string_view(it->second);
}

std::string_view to_string(FactorCategory category) {
  switch (category) {
    case FactorCategory::kSocioDemographic: return "socio_demographic";
    case FactorCategory::kAnatomic: return "anatomic";
    case FactorCategory::kDiseaseDependent: return "disease_dependent";
    case FactorCategory::kInstrumental: return "instrumental";
    case FactorCategory::kDataSource: return "data_source";
  }
  return "";
}

std::string_view to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::kCategorical: return "categorical";
    case FactorKind::kNumericBinned: return "numeric_binned";
    case FactorKind::kFindingFlag: return "finding_flag";
  }
  return "";
}

FactorCategory parse_factor_category(std::string_view text) {
  for (auto c : {FactorCategory::kSocioDemographic, FactorCategory::kAnatomic,
                 FactorCategory::kDiseaseDependent,
                 FactorCategory::kInstrumental, FactorCategory::kDataSource}) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorCode::kManifestMismatch,
              "unknown factor category '" + std::string(text) + "'");
}

FactorKind parse_factor_kind(std::string_view text) {
  for (auto k : {FactorKind::kCategorical, FactorKind::kNumericBinned,
                 FactorKind::kFindingFlag}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::kManifestMismatch,
              "unknown factor kind '" + std::string(text) + "'");
}

std::string_view category_title(FactorCategory category) {
  switch (category) {
    case FactorCategory::kSocioDemographic: return "Socio-demographic factors";
    case FactorCategory::kAnatomic: return "Anatomic factors";
    case FactorCategory::kDiseaseDependent: return "Disease-dependent factors";
    case FactorCategory::kInstrumental: return "Instrumental factors";
    case FactorCategory::kDataSource: return "Data source factors";
  }
  return "";
}

const FactorDescriptor* Manifest::find(std::string_view name) const {
  for (const auto& factor : factors) {
    if (factor.name == name) return &factor;
  }
  return nullptr;
}

CohortTable::CohortTable(std::vector<PredictionRecord> records,
                         Manifest manifest, std::vector<std::string> warnings,
                         std::set<std::string, std::less<>> binned_factors)
    : records_(std::move(records)),
      manifest_(std::move(manifest)),
      warnings_(std::move(warnings)),
      binned_(std::move(binned_factors)) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(records_.size());
  for (const auto& record : records_) {
    if (!ids.insert(record.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id '" + record.id + "'");
    }
    if (record.y_true != 0 && record.y_true != 1) {
      throw Error(ErrorCode::kInvalidLabel,
                  "record '" + record.id + "' has y_true outside {0,1}");
    }
    if (!record.y_score && !record.y_pred) {
      throw Error(ErrorCode::kMissingColumn,
                  "record '" + record.id + "' has neither y_score nor y_pred");
    }
    if (record.y_score &&
        !(*record.y_score >= 0.0 && *record.y_score <= 1.0)) {
      throw Error(ErrorCode::kValueOutOfRange,
                  "record '" + record.id + "' has y_score outside [0,1]");
    }
    if (record.y_pred && *record.y_pred != 0 && *record.y_pred != 1) {
      throw Error(ErrorCode::kValueOutOfRange,
                  "record '" + record.id + "' has y_pred outside {0,1}");
    }
    for (const auto& [name, value] : record.factors) {
      if (manifest_.find(name) == nullptr) {
        throw Error(ErrorCode::kManifestMismatch,
                    "record '" + record.id + "' references factor '" + name +
                        "' absent from the manifest");
      }
    }
  }
}

Manifest parse_manifest(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidManifest, e.what());
  }
  Manifest manifest;
  try {
    if (!doc.is_object()) {
      throw Error(ErrorCode::kInvalidManifest, "manifest must be an object");
    }
    if (doc.contains("provenance")) {
      const auto& p = doc.at("provenance");
      manifest.provenance.dataset_name = p.value("dataset_name", "");
      manifest.provenance.dataset_version = p.value("dataset_version", "");
      manifest.provenance.date_range = p.value("date_range", "");
      manifest.provenance.description = p.value("description", "");
    }
    if (!doc.contains("factors") || !doc.at("factors").is_array()) {
      throw Error(ErrorCode::kInvalidManifest, "manifest needs a factors array");
    }
    for (const auto& entry : doc.at("factors")) {
      FactorDescriptor factor;
      factor.name = entry.at("name").get<std::string>();
      factor.category =
          parse_factor_category(entry.at("category").get<std::string>());
      factor.kind = parse_factor_kind(entry.value("kind", "categorical"));
      if (entry.contains("bin_edges")) {
        factor.bin_edges = entry.at("bin_edges").get<std::vector<double>>();
        if (factor.bin_edges.empty()) {
          throw Error(ErrorCode::kManifestMismatch,
                      "empty bin_edges for factor '" + factor.name + "'");
        }
      }
      if (entry.contains("value_order")) {
        factor.value_order =
            entry.at("value_order").get<std::vector<std::string>>();
      }
      manifest.factors.push_back(std::move(factor));
    }
    if (doc.contains("finding_count_from")) {
      manifest.finding_count_from =
          doc.at("finding_count_from").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidManifest, e.what());
  }
  validate_manifest(manifest);
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path));
}

std::string serialize_manifest(const Manifest& manifest) {
  ordered_json doc;
  doc["provenance"] = {
      {"dataset_name", manifest.provenance.dataset_name},
      {"dataset_version", manifest.provenance.dataset_version},
      {"date_range", manifest.provenance.date_range},
      {"description", manifest.provenance.description},
  };
  ordered_json factors = ordered_json::array();
  for (const auto& factor : manifest.factors) {
    ordered_json entry;
    entry["name"] = factor.name;
    entry["category"] = to_string(factor.category);
    entry["kind"] = to_string(factor.kind);
    if (!factor.bin_edges.empty()) entry["bin_edges"] = factor.bin_edges;
    if (!factor.value_order.empty()) entry["value_order"] = factor.value_order;
    factors.push_back(std::move(entry));
  }
  doc["factors"] = std::move(factors);
  if (!manifest.finding_count_from.empty()) {
    doc["finding_count_from"] = manifest.finding_count_from;
  }
  return doc.dump(2) + "\n";
}

CohortTable parse_cohort(std::string_view csv_text, const Manifest& manifest) {
  validate_manifest(manifest);
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) {
    throw Error(ErrorCode::kMissingColumn, "cohort table has no header row");
  }
  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };

  const auto id_col = column(kIdColumn);
  const auto label_col = column(kLabelColumn);
  const auto score_col = column(kScoreColumn);
  const auto pred_col = column(kPredColumn);
  if (!label_col) {
    throw Error(ErrorCode::kMissingColumn, "no y_true column");
  }
  if (!score_col && !pred_col) {
    throw Error(ErrorCode::kMissingColumn,
                "need at least one of y_score, y_pred");
  }

  std::vector<std::pair<const FactorDescriptor*, std::size_t>> factor_cols;
  for (const auto& factor : manifest.factors) {
    const auto col = column(factor.name);
    if (!col) {
      throw Error(ErrorCode::kManifestMismatch,
                  "factor column '" + factor.name + "' absent from table");
    }
    factor_cols.emplace_back(&factor, *col);
  }

  std::vector<std::string> warnings;
  for (const auto& name : header) {
    const auto n = trim(name);
    if (!is_reserved_column(n) && manifest.find(n) == nullptr) {
      warnings.push_back("column '" + std::string(n) +
                         "' is not in the manifest and was ignored");
    }
  }

  std::vector<PredictionRecord> records;
  records.reserve(rows.size() - 1);
  std::vector<std::size_t> bad_labels;
  std::size_t both_kinds = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(r) + " has " +
                      std::to_string(row.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    PredictionRecord record;
    record.id = id_col ? std::string(trim(row[*id_col])) : std::to_string(r);
    if (record.id.empty()) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(r) + " has an empty id");
    }
    const auto label = parse_binary(row[*label_col]);
    if (!label) {
      bad_labels.push_back(r);
      continue;
    }
    record.y_true = *label;

    if (score_col && !trim(row[*score_col]).empty()) {
      const auto score = parse_double(row[*score_col]);
      if (!score || *score < 0.0 || *score > 1.0) {
        throw Error(ErrorCode::kValueOutOfRange,
                    "row " + std::to_string(r) + ": y_score '" +
                        std::string(trim(row[*score_col])) +
                        "' outside [0,1]");
      }
      record.y_score = *score;
    }
    if (pred_col && !trim(row[*pred_col]).empty()) {
      const auto pred = parse_binary(row[*pred_col]);
      if (!pred) {
        throw Error(ErrorCode::kValueOutOfRange,
                    "row " + std::to_string(r) + ": y_pred '" +
                        std::string(trim(row[*pred_col])) +
                        "' outside {0,1}");
      }
      record.y_pred = *pred;
    }
    if (!record.y_score && !record.y_pred) {
      throw Error(ErrorCode::kMissingColumn,
                  "row " + std::to_string(r) +
                      " has neither y_score nor y_pred");
    }
    if (record.y_score && record.y_pred) ++both_kinds;

    for (const auto& [factor, col] : factor_cols) {
      std::string value = row[col];
      if (trim(value).empty()) value = std::string(kUnknown);
      if (factor->kind == FactorKind::kFindingFlag && value != "0" &&
          value != "1" && value != kUnknown) {
        throw Error(ErrorCode::kValueOutOfRange,
                    "row " + std::to_string(r) + ": finding flag '" +
                        factor->name + "' has value '" + value + "'");
      }
      record.factors.emplace(factor->name, std::move(value));
    }
    records.push_back(std::move(record));
  }
  if (!bad_labels.empty()) {
    throw Error(ErrorCode::kInvalidLabel,
                "unparseable y_true on row(s) " + join_rows(bad_labels));
  }
  if (both_kinds > 0) {
    warnings.push_back(std::to_string(both_kinds) +
                       " record(s) carry both y_score and y_pred; y_pred is "
                       "ignored for thresholded metrics");
  }
  return CohortTable(std::move(records), manifest, std::move(warnings));
}

CohortTable ingest_cohort(const std::filesystem::path& table_file,
                          const std::filesystem::path& manifest_file) {
  const Manifest manifest = load_manifest(manifest_file);
  return parse_cohort(read_text_file(table_file), manifest);
}

std::string serialize_cohort(const CohortTable& cohort) {
  const auto records = cohort.records();
  const bool any_score = std::any_of(records.begin(), records.end(),
                                     [](const auto& r) { return r.y_score; });
  const bool any_pred = std::any_of(records.begin(), records.end(),
                                    [](const auto& r) { return r.y_pred; });
  const bool with_score = any_score || !any_pred;

  std::string out = "id,y_true";
  if (with_score) out += ",y_score";
  if (any_pred) out += ",y_pred";
  for (const auto& factor : cohort.manifest().factors) {
    out += ',';
    out += csv_escape(factor.name);
  }
  out += '\n';
  for (const auto& record : records) {
    out += csv_escape(record.id);
    out += record.y_true ? ",1" : ",0";
    if (with_score) {
      out += ',';
      if (record.y_score) out += format_number(*record.y_score);
    }
    if (any_pred) {
      out += ',';
      if (record.y_pred) out += std::to_string(*record.y_pred);
    }
    for (const auto& factor : cohort.manifest().factors) {
      out += ',';
      out += csv_escape(record.factor(factor.name));
    }
    out += '\n';
  }
  return out;
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::vector<std::string> bin_labels(std::span<const double> edges) {
  std::vector<std::string> labels;
  if (edges.empty()) return labels;
  labels.push_back("<" + format_number(edges.front()));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    labels.push_back("[" + format_number(edges[i]) + "," +
                     format_number(edges[i + 1]) + ")");
  }
  labels.push_back("≥" + format_number(edges.back()));
  return labels;
}

std::string bin_label(double value, std::span<const double> edges) {
  const auto labels = bin_labels(edges);
  // Index of the first edge strictly greater than value: intervals are
  // left-closed, so a value equal to an edge falls in the bin that edge opens.
  const auto bin = static_cast<std::size_t>(
      std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
  return labels[bin];
}

CohortTable apply_bins(const CohortTable& cohort,
                       const FactorDescriptor& factor, bool strict) {
  const FactorDescriptor* declared = cohort.manifest().find(factor.name);
  if (declared == nullptr) {
    throw Error(ErrorCode::kManifestMismatch,
                "factor '" + factor.name + "' is not in the manifest");
  }
  if (factor.kind != FactorKind::kNumericBinned ||
      declared->kind != FactorKind::kNumericBinned) {
    throw Error(ErrorCode::kInvalidConfig,
                "factor '" + factor.name + "' is not numeric_binned");
  }
  if (factor.bin_edges.empty()) {
    throw Error(ErrorCode::kManifestMismatch,
                "factor '" + factor.name + "' has no bin edges");
  }
  if (cohort.binned_factors().contains(factor.name)) {
    throw Error(ErrorCode::kAlreadyBinned,
                "factor '" + factor.name + "' is already binned");
  }

  std::vector<PredictionRecord> records(cohort.records().begin(),
                                        cohort.records().end());
  std::vector<std::size_t> non_numeric;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto it = records[i].factors.find(factor.name);
    if (it == records[i].factors.end() || it->second == kUnknown) continue;
    const auto number = parse_double(it->second);
    if (!number) {
      non_numeric.push_back(i + 1);
      it->second = std::string(kUnknown);
      continue;
    }
    it->second = bin_label(*number, factor.bin_edges);
  }
  std::vector<std::string> warnings = cohort.warnings();
  if (!non_numeric.empty()) {
    if (strict) {
      throw Error(ErrorCode::kNonNumericColumn,
                  "factor '" + factor.name + "' is non-numeric on row(s) " +
                      join_rows(non_numeric));
    }
    warnings.push_back(std::to_string(non_numeric.size()) +
                       " non-numeric value(s) of '" + factor.name +
                       "' mapped to unknown");
  }

  Manifest manifest = cohort.manifest();
  for (auto& entry : manifest.factors) {
    if (entry.name != factor.name) continue;
    entry.bin_edges = factor.bin_edges;
    if (entry.value_order.empty()) entry.value_order = bin_labels(factor.bin_edges);
  }
  auto binned = cohort.binned_factors();
  binned.insert(factor.name);
  return CohortTable(std::move(records), std::move(manifest),
                     std::move(warnings), std::move(binned));
}

CohortTable apply_all_bins(const CohortTable& cohort, bool strict) {
  CohortTable out = cohort;
  for (const auto& factor : cohort.manifest().factors) {
    if (factor.kind == FactorKind::kNumericBinned &&
        !out.binned_factors().contains(factor.name)) {
      out = apply_bins(out, factor, strict);
    }
  }
  return out;
}

CohortTable prepare_for_audit(const CohortTable& cohort, bool strict) {
  CohortTable out = apply_all_bins(cohort, strict);
  const auto& from = out.manifest().finding_count_from;
  if (!from.empty() && out.manifest().find(kFindingCountFactor) == nullptr) {
    out = derive_finding_count_factor(out, from);
  }
  return out;
}

CohortTable derive_finding_count_factor(
    const CohortTable& cohort, std::span<const std::string> finding_columns) {
  if (cohort.manifest().find(kFindingCountFactor) != nullptr) {
    throw Error(ErrorCode::kManifestMismatch,
                std::string(kFindingCountFactor) + " is already present");
  }
  for (const auto& name : finding_columns) {
    const FactorDescriptor* factor = cohort.manifest().find(name);
    if (factor == nullptr) {
      throw Error(ErrorCode::kManifestMismatch,
                  "finding column '" + name + "' is not in the manifest");
    }
    if (factor->kind != FactorKind::kFindingFlag) {
      throw Error(ErrorCode::kManifestMismatch,
                  "column '" + name + "' is not a finding_flag factor");
    }
  }

  std::vector<PredictionRecord> records(cohort.records().begin(),
                                        cohort.records().end());
  for (auto& record : records) {
    int count = 0;
    bool unknown = false;
    for (const auto& name : finding_columns) {
      const auto value = record.factor(name);
      if (value == kUnknown) {
        unknown = true;
      } else if (value == "1") {
        ++count;
      }
    }
    std::string label = unknown      ? std::string(kUnknown)
                        : count >= 2 ? "2+"
                                     : std::to_string(count);
    record.factors.emplace(std::string(kFindingCountFactor), std::move(label));
  }

  Manifest manifest = cohort.manifest();
  manifest.factors.push_back(FactorDescriptor{
      .name = std::string(kFindingCountFactor),
      .category = FactorCategory::kDiseaseDependent,
      .kind = FactorKind::kCategorical,
      .bin_edges = {},
      .value_order = {"0", "1", "2+"},
  });
  return CohortTable(std::move(records), std::move(manifest), cohort.warnings(),
                     cohort.binned_factors());
}

}  // namespace cardforge
