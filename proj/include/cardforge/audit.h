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

#ifndef CARDFORGE_AUDIT_H_
#define CARDFORGE_AUDIT_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cardforge/bootstrap.h"
#include "cardforge/cohort.h"
#include "cardforge/metrics.h"

namespace cardforge {

struct FlagPolicy {
  enum class Kind { kCiExcludesZero, kAbsGapOver };

  Kind kind = Kind::kCiExcludesZero;
  // Only meaningful for kAbsGapOver.
  double tau = 0.0;

  static FlagPolicy ci_excludes_zero() { return {}; }
  static FlagPolicy abs_gap_over(double tau) { return {Kind::kAbsGapOver, tau}; }

  bool operator==(const FlagPolicy&) const = default;
};

// "ci_excludes_zero" or "abs_gap_over:<tau>".
std::string to_string(const FlagPolicy& policy);
FlagPolicy parse_flag_policy(std::string_view text);

inline constexpr std::uint32_t kDefaultMinSubgroupN = 30;

struct AuditConfig {
  double threshold = kDefaultThreshold;
  std::uint32_t min_subgroup_n = kDefaultMinSubgroupN;
  std::vector<MetricId> metrics{kAllMetrics.begin(), kAllMetrics.end()};
  BootstrapConfig bootstrap;
  FlagPolicy flag_policy;
  // "unknown" subgroups are reported but only flagged when this is set.
  bool flag_unknown = false;
  // Finding-flag factors sliced for pathology sensitivity; empty means every
  // finding_flag factor in the manifest.
  std::vector<std::string> pathology_factors;
  // Per-finding threshold overrides for the pathology slices.
  std::map<std::string, double> slice_thresholds;

  bool selected(MetricId metric) const;
  bool operator==(const AuditConfig&) const = default;
};

void validate(const AuditConfig& config);

struct SubgroupReport {
  std::string factor;
  std::string value;
  std::uint64_t n = 0;
  MetricSet metrics;
  // M_subgroup - M_overall; positive favors the subgroup.
  PerMetric<MetricValue> delta{};
  PerMetric<std::optional<Interval>> subgroup_ci{};
  PerMetric<std::optional<Interval>> delta_ci{};
  PerMetric<bool> flagged{};
  bool suppressed = false;

  bool any_flagged() const;
  bool operator==(const SubgroupReport&) const = default;
};

struct FactorReport {
  FactorDescriptor factor;
  std::vector<SubgroupReport> subgroups;

  bool operator==(const FactorReport&) const = default;
};

struct PathologySlice {
  std::string finding;
  double threshold = kDefaultThreshold;
  std::uint64_t n = 0;
  // Flagged records with y_true = 0, left out of the slice.
  std::uint64_t excluded_normals = 0;
  MetricValue sensitivity;
  std::optional<Interval> ci;

  bool operator==(const PathologySlice&) const = default;
};

struct AuditResult {
  MetricSet overall;
  PerMetric<std::optional<Interval>> overall_ci{};
  std::vector<FactorReport> factors;
  std::vector<PathologySlice> pathology_slices;
  AuditConfig config;
  // Manifest echo, including the cohort provenance and any derived factors.
  Manifest manifest;
  std::vector<std::string> warnings;

  const FactorReport* find_factor(std::string_view name) const;
  const SubgroupReport* find(std::string_view factor,
                             std::string_view value) const;
  bool operator==(const AuditResult&) const = default;
};

// Display order of a factor's values: the manifest's value_order first, then
// the remaining values lexicographically.
std::vector<std::string> ordered_values(const FactorDescriptor& factor,
                                        std::vector<std::string> values);

// Partition of the cohort by the factor's value; "unknown" is its own part.
std::map<std::string, std::vector<PredictionRecord>> stratify(
    const CohortTable& cohort, const FactorDescriptor& factor);

// Per-subgroup metrics, gaps versus the whole cohort, joint-bootstrap CIs,
// and disparity flags for every manifest factor.
//
// Every replicate resamples the whole cohort once (positions in id order,
// seeded by replicate_seed(master_seed, "audit:joint", r)); each subgroup's
// metric and the overall metric are recomputed on that one resample, so the
// gap is resampled as a single statistic.
AuditResult run_audit(const CohortTable& cohort, const AuditConfig& config);

// Sensitivity over records whose finding flag is 1. Flagged records with
// y_true = 0 are excluded and counted. Slices may overlap.
std::vector<PathologySlice> pathology_sensitivity_slices(
    const CohortTable& cohort, std::span<const std::string> finding_factors,
    const AuditConfig& config, std::vector<std::string>* warnings = nullptr);

// Recomputes `flagged` for each report over `metrics`. Suppressed reports are
// never flagged, nor are "unknown" subgroups unless `flag_unknown`.
// ci_excludes_zero throws MissingCI when a non-suppressed report lacks a gap
// interval for one of `metrics`.
std::vector<SubgroupReport> flag_disparities(
    std::vector<SubgroupReport> reports, const FlagPolicy& policy,
    std::span<const MetricId> metrics = kAllMetrics,
    bool flag_unknown = false);

}  // namespace cardforge

#endif  // CARDFORGE_AUDIT_H_
