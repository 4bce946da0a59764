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

#ifndef CARDFORGE_COHORT_H_
#define CARDFORGE_COHORT_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cardforge {

// Reserved factor value for missing or unparseable cells.
inline constexpr std::string_view kUnknown = "unknown";
// Factor names with this prefix are generated and may not appear in manifests.
inline constexpr std::string_view kDerivedPrefix = "derived_";
inline constexpr std::string_view kFindingCountFactor = "derived_finding_count";

// One scored exam. y_true = 1 means abnormal.
struct PredictionRecord {
  std::string id;
  int y_true = 0;
  std::optional<double> y_score;
  std::optional<int> y_pred;
  std::map<std::string, std::string, std::less<>> factors;

  // Factor value, or "unknown" when the record has none.
  std::string_view factor(std::string_view name) const;

  bool operator==(const PredictionRecord&) const = default;
};

enum class FactorCategory {
  kSocioDemographic,
  kAnatomic,
  kDiseaseDependent,
  kInstrumental,
  kDataSource,
};

enum class FactorKind { kCategorical, kNumericBinned, kFindingFlag };

std::string_view to_string(FactorCategory category);
std::string_view to_string(FactorKind kind);
FactorCategory parse_factor_category(std::string_view text);
FactorKind parse_factor_kind(std::string_view text);

// Human-readable heading for a category ("Instrumental factors").
std::string_view category_title(FactorCategory category);

struct FactorDescriptor {
  std::string name;
  FactorCategory category = FactorCategory::kSocioDemographic;
  FactorKind kind = FactorKind::kCategorical;
  std::vector<double> bin_edges;
  std::vector<std::string> value_order;

  bool operator==(const FactorDescriptor&) const = default;
};

struct Provenance {
  std::string dataset_name;
  std::string dataset_version;
  std::string date_range;
  std::string description;

  bool operator==(const Provenance&) const = default;
};

struct Manifest {
  Provenance provenance;
  std::vector<FactorDescriptor> factors;
  // Finding-flag factors to fold into derived_finding_count, if any.
  std::vector<std::string> finding_count_from;

  const FactorDescriptor* find(std::string_view name) const;
  bool operator==(const Manifest&) const = default;
};

// Validated, immutable-after-construction cohort.
class CohortTable {
 public:
  CohortTable() = default;
  // Validates the invariants (unique ids, labels, score range, factor names
  // covered by the manifest) and throws Error on violation.
  CohortTable(std::vector<PredictionRecord> records, Manifest manifest,
              std::vector<std::string> warnings = {},
              std::set<std::string, std::less<>> binned_factors = {});

  std::span<const PredictionRecord> records() const { return records_; }
  const Manifest& manifest() const { return manifest_; }
  const Provenance& provenance() const { return manifest_.provenance; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::set<std::string, std::less<>>& binned_factors() const {
    return binned_;
  }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool operator==(const CohortTable&) const = default;

 private:
  std::vector<PredictionRecord> records_;
  Manifest manifest_;
  std::vector<std::string> warnings_;
  std::set<std::string, std::less<>> binned_;
};

// Manifest documents are JSON:
//   {"provenance": {...}, "factors": [{"name", "category", "kind",
//    "bin_edges"?, "value_order"?}, ...], "finding_count_from"?: [...]}
Manifest parse_manifest(std::string_view json_text);
Manifest load_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const Manifest& manifest);

// Parses a comma-separated cohort table against `manifest`.
CohortTable parse_cohort(std::string_view csv_text, const Manifest& manifest);
CohortTable ingest_cohort(const std::filesystem::path& table_file,
                          const std::filesystem::path& manifest_file);
// Inverse of parse_cohort for unbinned cohorts.
std::string serialize_cohort(const CohortTable& cohort);

// Replaces the numeric values of a numeric_binned factor by left-closed
// interval labels: edges [e1..ek] give "<e1", "[e1,e2)", ..., "≥ek".
CohortTable apply_bins(const CohortTable& cohort,
                       const FactorDescriptor& factor, bool strict = false);
// Bins every numeric_binned factor in the manifest.
CohortTable apply_all_bins(const CohortTable& cohort, bool strict = false);
std::vector<std::string> bin_labels(std::span<const double> edges);
std::string bin_label(double value, std::span<const double> edges);

// Adds the disease-dependent factor derived_finding_count with values
// "0", "1", "2+" (or "unknown" when any listed flag is unknown).
CohortTable derive_finding_count_factor(
    const CohortTable& cohort, std::span<const std::string> finding_columns);

// Bins every numeric_binned factor, then derives derived_finding_count when
// the manifest lists finding_count_from and the factor is not yet present.
CohortTable prepare_for_audit(const CohortTable& cohort, bool strict = false);

// Shortest decimal representation that round-trips (locale independent).
std::string format_number(double value);

}  // namespace cardforge

#endif  // CARDFORGE_COHORT_H_
