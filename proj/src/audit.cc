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

#include "cardforge/audit.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "cardforge/error.h"
#include "cardforge/rng.h"

namespace cardforge {
namespace {

constexpr std::string_view kJointStream = "audit:joint";

// Confusion cells; positives are kTp and kFn.
enum Cell : std::uint8_t { kTp = 0, kFp = 1, kTn = 2, kFn = 3 };

// Per-replicate sufficient statistics of one slot (overall or one subgroup).
struct SlotStats {
  std::uint32_t cells[4];
  // Mann-Whitney pair count in half units.
  std::uint64_t half_pairs;
};

MetricSet metrics_from(const SlotStats& stats, bool with_auc) {
  const ConfusionMatrix cm{stats.cells[kTp], stats.cells[kFp],
                           stats.cells[kTn], stats.cells[kFn]};
  MetricValue auc = MetricValue::unavailable();
  if (with_auc) {
    const double pos = static_cast<double>(cm.n_pos());
    const double neg = static_cast<double>(cm.n_neg());
    auc = (cm.n_pos() == 0 || cm.n_neg() == 0)
              ? MetricValue::undefined()
              : MetricValue::of(static_cast<double>(stats.half_pairs) /
                                (2.0 * pos * neg));
  }
  return metric_suite(cm, auc);
}

// Cohort flattened for resampling: records in score order (ties in id order),
// each carrying its confusion cell and one slot id per factor. Slot 0 is the
// whole cohort.
class JointResampler {
 public:
  JointResampler(const CohortTable& cohort, PredictionSource source,
                 double threshold,
                 const std::vector<std::vector<std::string>>& factor_values,
                 const std::vector<const FactorDescriptor*>& factors)
      : n_(cohort.size()), num_factors_(factors.size()),
        with_auc_(source == PredictionSource::kScores) {
    const auto records = cohort.records();
    std::vector<std::uint32_t> by_id(n_);
    std::iota(by_id.begin(), by_id.end(), 0u);
    std::sort(by_id.begin(), by_id.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                return records[a].id < records[b].id;
              });
    // Layout order: canonical (id) positions, sorted by score when scored.
    std::vector<std::uint32_t> layout(n_);
    std::iota(layout.begin(), layout.end(), 0u);
    if (with_auc_) {
      std::stable_sort(layout.begin(), layout.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return *records[by_id[a]].y_score <
                                *records[by_id[b]].y_score;
                       });
    }
    layout_of_canonical_.resize(n_);
    for (std::uint32_t p = 0; p < n_; ++p) layout_of_canonical_[layout[p]] = p;

    // Slot ids.
    std::vector<std::unordered_map<std::string_view, std::uint16_t>> slot_ids(
        num_factors_);
    num_slots_ = 1;
    for (std::size_t f = 0; f < num_factors_; ++f) {
      for (const auto& value : factor_values[f]) {
        slot_ids[f].emplace(value, static_cast<std::uint16_t>(num_slots_++));
      }
    }
    if (num_slots_ > 65535) {
      throw Error(ErrorCode::kInvalidConfig, "too many subgroups");
    }

    cells_.resize(n_);
    slots_.resize(n_ * num_factors_);
    for (std::uint32_t p = 0; p < n_; ++p) {
      const auto& record = records[by_id[layout[p]]];
      const int pred = predicted_label(record, source, threshold);
      cells_[p] = record.y_true ? (pred ? kTp : kFn) : (pred ? kFp : kTn);
      for (std::size_t f = 0; f < num_factors_; ++f) {
        slots_[p * num_factors_ + f] =
            slot_ids[f].at(record.factor(factors[f]->name));
      }
      if (with_auc_) {
        const bool block_ends =
            p + 1 == n_ || *records[by_id[layout[p + 1]]].y_score !=
                               *record.y_score;
        if (block_ends) block_ends_.push_back(p + 1);
      }
    }
  }

  std::size_t num_slots() const { return num_slots_; }
  bool with_auc() const { return with_auc_; }

  // Fills out[0..num_slots) with the statistics of replicate `r`.
  void replicate(std::uint64_t master_seed, std::uint32_t r,
                 std::vector<std::uint32_t>& counts,
                 std::vector<std::uint64_t>& scratch,
                 std::span<SlotStats> out) const {
    Rng rng(replicate_seed(master_seed, kJointStream, r));
    std::fill(counts.begin(), counts.end(), 0u);
    for (std::uint64_t i = 0; i < n_; ++i) {
      ++counts[layout_of_canonical_[rng.below(n_)]];
    }
    accumulate(counts, scratch, out);
  }

  // Statistics for the given multiplicities (indexed by layout position).
  void accumulate(std::span<const std::uint32_t> counts,
                  std::vector<std::uint64_t>& scratch,
                  std::span<SlotStats> out) const {
    const std::size_t slots = num_slots_;
    const std::size_t nf = num_factors_;
    for (auto& s : out) s = SlotStats{{0, 0, 0, 0}, 0};
    if (!with_auc_) {
      for (std::size_t p = 0; p < n_; ++p) {
        const std::uint32_t w = counts[p];
        if (w == 0) continue;
        const std::uint8_t cell = cells_[p];
        out[0].cells[cell] += w;
        const std::uint16_t* s = &slots_[p * nf];
        for (std::size_t f = 0; f < nf; ++f) out[s[f]].cells[cell] += w;
      }
      return;
    }
    // scratch: [neg_below | block_pos | block_neg], each `slots` wide.
    scratch.assign(3 * slots, 0);
    std::uint64_t* neg_below = scratch.data();
    std::uint64_t* block_pos = neg_below + slots;
    std::uint64_t* block_neg = block_pos + slots;
    std::size_t begin = 0;
    for (const std::uint32_t end : block_ends_) {
      if (end - begin == 1) {
        const std::size_t p = begin;
        begin = end;
        const std::uint32_t w = counts[p];
        if (w == 0) continue;
        const std::uint8_t cell = cells_[p];
        const std::uint16_t* s = &slots_[p * nf];
        out[0].cells[cell] += w;
        for (std::size_t f = 0; f < nf; ++f) out[s[f]].cells[cell] += w;
        if (cell == kTp || cell == kFn) {
          const std::uint64_t w2 = 2ull * w;
          out[0].half_pairs += w2 * neg_below[0];
          for (std::size_t f = 0; f < nf; ++f) {
            out[s[f]].half_pairs += w2 * neg_below[s[f]];
          }
        } else {
          neg_below[0] += w;
          for (std::size_t f = 0; f < nf; ++f) neg_below[s[f]] += w;
        }
        continue;
      }
      // Run of tied scores: tied positive/negative pairs count one half.
      for (std::size_t p = begin; p < end; ++p) {
        const std::uint32_t w = counts[p];
        if (w == 0) continue;
        const std::uint8_t cell = cells_[p];
        const std::uint16_t* s = &slots_[p * nf];
        out[0].cells[cell] += w;
        for (std::size_t f = 0; f < nf; ++f) out[s[f]].cells[cell] += w;
        std::uint64_t* acc = (cell == kTp || cell == kFn) ? block_pos : block_neg;
        acc[0] += w;
        for (std::size_t f = 0; f < nf; ++f) acc[s[f]] += w;
      }
      for (std::size_t p = begin; p < end; ++p) {
        const std::uint16_t* s = &slots_[p * nf];
        settle_block(0, out, neg_below, block_pos, block_neg);
        for (std::size_t f = 0; f < nf; ++f) {
          settle_block(s[f], out, neg_below, block_pos, block_neg);
        }
      }
      begin = end;
    }
  }

 private:
  static void settle_block(std::size_t slot, std::span<SlotStats> out,
                           std::uint64_t* neg_below, std::uint64_t* block_pos,
                           std::uint64_t* block_neg) {
    if (block_pos[slot] == 0 && block_neg[slot] == 0) return;
    out[slot].half_pairs +=
        block_pos[slot] * (2 * neg_below[slot] + block_neg[slot]);
    neg_below[slot] += block_neg[slot];
    block_pos[slot] = 0;
    block_neg[slot] = 0;
  }

  std::size_t n_;
  std::size_t num_factors_;
  std::size_t num_slots_ = 1;
  bool with_auc_;
  std::vector<std::uint32_t> layout_of_canonical_;
  std::vector<std::uint8_t> cells_;
  std::vector<std::uint16_t> slots_;
  std::vector<std::uint32_t> block_ends_;
};

std::string label_of(const SubgroupReport& report) {
  return report.factor + "=" + report.value;
}

std::string percent(double fraction) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer),
                                       100.0 * fraction,
                                       std::chars_format::fixed, 1);
  return std::string(buffer, ptr) + "%";
}

}  // namespace

std::string to_string(const FlagPolicy& policy) {
  if (policy.kind == FlagPolicy::Kind::kCiExcludesZero) {
    return "ci_excludes_zero";
  }
  return "abs_gap_over:" + format_number(policy.tau);
}

FlagPolicy parse_flag_policy(std::string_view text) {
  if (text == "ci_excludes_zero") return FlagPolicy::ci_excludes_zero();
  constexpr std::string_view kPrefix = "abs_gap_over:";
  if (text.starts_with(kPrefix)) {
    const auto number = text.substr(kPrefix.size());
    double tau = 0.0;
    const auto [ptr, ec] =
        std::from_chars(number.data(), number.data() + number.size(), tau);
    if (ec == std::errc() && ptr == number.data() + number.size() &&
        tau >= 0.0 && tau <= 1.0) {
      return FlagPolicy::abs_gap_over(tau);
    }
  }
  throw Error(ErrorCode::kInvalidConfig,
              "flag policy must be ci_excludes_zero or abs_gap_over:<tau in "
              "[0,1]>, got '" + std::string(text) + "'");
}

bool AuditConfig::selected(MetricId metric) const {
  return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

void validate(const AuditConfig& config) {
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "threshold outside [0,1]");
  }
  if (config.min_subgroup_n < 1) {
    throw Error(ErrorCode::kInvalidConfig, "min_subgroup_n must be >= 1");
  }
  if (config.metrics.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "no metrics selected");
  }
  if (config.flag_policy.kind == FlagPolicy::Kind::kAbsGapOver &&
      !(config.flag_policy.tau >= 0.0 && config.flag_policy.tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "abs_gap_over tau outside [0,1]");
  }
  for (const auto& [name, threshold] : config.slice_thresholds) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "slice threshold for '" + name + "' outside [0,1]");
    }
  }
  validate(config.bootstrap);
}

bool SubgroupReport::any_flagged() const {
  return std::any_of(flagged.begin(), flagged.end(), [](bool f) { return f; });
}

const FactorReport* AuditResult::find_factor(std::string_view name) const {
  for (const auto& factor : factors) {
    if (factor.factor.name == name) return &factor;
  }
  return nullptr;
}

const SubgroupReport* AuditResult::find(std::string_view factor,
                                        std::string_view value) const {
  const FactorReport* report = find_factor(factor);
  if (report == nullptr) return nullptr;
  for (const auto& subgroup : report->subgroups) {
    if (subgroup.value == value) return &subgroup;
  }
  return nullptr;
}

std::vector<std::string> ordered_values(const FactorDescriptor& factor,
                                        std::vector<std::string> values) {
  std::set<std::string> remaining(values.begin(), values.end());
  std::vector<std::string> ordered;
  for (const auto& value : factor.value_order) {
    if (remaining.erase(value) > 0) ordered.push_back(value);
  }
  ordered.insert(ordered.end(), remaining.begin(), remaining.end());
  return ordered;
}

std::map<std::string, std::vector<PredictionRecord>> stratify(
    const CohortTable& cohort, const FactorDescriptor& factor) {
  if (cohort.manifest().find(factor.name) == nullptr) {
    throw Error(ErrorCode::kManifestMismatch,
                "factor '" + factor.name + "' is not in the manifest");
  }
  std::map<std::string, std::vector<PredictionRecord>> parts;
  for (const auto& record : cohort.records()) {
    parts[std::string(record.factor(factor.name))].push_back(record);
  }
  return parts;
}

std::vector<SubgroupReport> flag_disparities(std::vector<SubgroupReport> reports,
                                             const FlagPolicy& policy,
                                             std::span<const MetricId> metrics,
                                             bool flag_unknown) {
  for (auto& report : reports) {
    report.flagged.fill(false);
    if (report.suppressed) continue;
    if (report.value == kUnknown && !flag_unknown) continue;
    for (const MetricId metric : metrics) {
      const std::size_t m = index(metric);
      if (policy.kind == FlagPolicy::Kind::kCiExcludesZero) {
        const auto& ci = report.delta_ci[m];
        if (!ci) {
          throw Error(ErrorCode::kMissingCI,
                      label_of(report) + " has no " +
                          std::string(to_string(metric)) + " gap interval");
        }
        report.flagged[m] = ci->defined && (ci->hi < 0.0 || ci->lo > 0.0);
      } else {
        const MetricValue delta = report.delta[m];
        report.flagged[m] =
            delta.defined() && std::abs(delta.value()) > policy.tau;
      }
    }
  }
  return reports;
}

std::vector<PathologySlice> pathology_sensitivity_slices(
    const CohortTable& cohort, std::span<const std::string> finding_factors,
    const AuditConfig& config, std::vector<std::string>* warnings) {
  std::vector<PathologySlice> slices;
  for (const auto& name : finding_factors) {
    const FactorDescriptor* factor = cohort.manifest().find(name);
    if (factor == nullptr || factor->kind != FactorKind::kFindingFlag) {
      throw Error(ErrorCode::kManifestMismatch,
                  "'" + name + "' is not a finding_flag factor");
    }
    PathologySlice slice;
    slice.finding = name;
    const auto it = config.slice_thresholds.find(name);
    slice.threshold =
        it == config.slice_thresholds.end() ? config.threshold : it->second;

    std::vector<PredictionRecord> members;
    for (const auto& record : cohort.records()) {
      if (record.factor(name) != "1") continue;
      if (record.y_true == 0) {
        ++slice.excluded_normals;
        continue;
      }
      members.push_back(record);
    }
    slice.n = members.size();
    if (slice.excluded_normals > 0 && warnings != nullptr) {
      warnings->push_back("pathology slice '" + name + "': " +
                          std::to_string(slice.excluded_normals) +
                          " flagged record(s) with y_true=0 excluded");
    }
    const ConfusionMatrix cm = confusion_matrix(members, slice.threshold);
    slice.sensitivity = metric_suite(cm).sensitivity;
    if (slice.n >= config.min_subgroup_n &&
        config.bootstrap.iterations >= kMinIterationsForCI) {
      slice.ci = bootstrap_ci(
          members, metric_statistic(MetricId::kSensitivity, slice.threshold),
          config.bootstrap, "pathology:" + name + ":sensitivity");
    }
    slices.push_back(std::move(slice));
  }
  return slices;
}

AuditResult run_audit(const CohortTable& cohort, const AuditConfig& config) {
  validate(config);
  if (cohort.empty()) {
    throw Error(ErrorCode::kEmptyCohort, "cohort has no records");
  }
  const auto records = cohort.records();
  const PredictionSource source = prediction_source(records);

  AuditResult result;
  result.config = config;
  result.manifest = cohort.manifest();
  result.warnings = cohort.warnings();
  if (config.selected(MetricId::kAuc) && source != PredictionSource::kScores) {
    result.warnings.push_back(
        "AUC unavailable: the cohort carries hard labels only");
  }

  std::vector<const FactorDescriptor*> factors;
  std::vector<std::vector<std::string>> factor_values;
  for (const auto& factor : cohort.manifest().factors) {
    std::set<std::string, std::less<>> seen;
    for (const auto& record : records) {
      const auto value = record.factor(factor.name);
      if (seen.find(value) == seen.end()) seen.emplace(value);
    }
    factors.push_back(&factor);
    factor_values.push_back(ordered_values(
        factor, std::vector<std::string>(seen.begin(), seen.end())));
  }
  const JointResampler resampler(cohort, source, config.threshold,
                                 factor_values, factors);
  const std::size_t slots = resampler.num_slots();

  // Point estimates: the same accumulation with every multiplicity 1.
  {
    const std::vector<std::uint32_t> ones(records.size(), 1u);
    std::vector<std::uint64_t> scratch;
    std::vector<SlotStats> point(slots);
    resampler.accumulate(ones, scratch, point);
    result.overall = metrics_from(point[0], resampler.with_auc());
    std::size_t slot = 1;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      FactorReport report;
      report.factor = *factors[f];
      for (const auto& value : factor_values[f]) {
        SubgroupReport subgroup;
        subgroup.factor = factors[f]->name;
        subgroup.value = value;
        subgroup.metrics = metrics_from(point[slot++], resampler.with_auc());
        subgroup.n = subgroup.metrics.n;
        for (MetricId metric : kAllMetrics) {
          subgroup.delta[index(metric)] =
              subgroup.metrics.get(metric) - result.overall.get(metric);
        }
        subgroup.suppressed = subgroup.n < config.min_subgroup_n;
        report.subgroups.push_back(std::move(subgroup));
      }
      result.factors.push_back(std::move(report));
    }
  }

  const BootstrapConfig& boot = config.bootstrap;
  if (boot.iterations >= kMinIterationsForCI) {
    const std::uint32_t iterations = boot.iterations;
    std::vector<SlotStats> stats(static_cast<std::size_t>(iterations) * slots);
    const unsigned workers =
        std::min<unsigned>(resolve_workers(boot.workers), iterations);
    std::vector<std::vector<std::uint32_t>> counts(
        workers, std::vector<std::uint32_t>(records.size()));
    std::vector<std::vector<std::uint64_t>> scratch(workers);
    parallel_for(iterations, workers, [&](std::uint32_t r, unsigned w) {
      resampler.replicate(
          boot.master_seed, r, counts[w], scratch[w],
          std::span<SlotStats>(&stats[std::size_t{r} * slots], slots));
    });

    // Replicate metric sets, slot-major.
    std::vector<MetricSet> replicate_metrics(stats.size());
    for (std::size_t s = 0; s < slots; ++s) {
      for (std::uint32_t r = 0; r < iterations; ++r) {
        replicate_metrics[s * iterations + r] =
            metrics_from(stats[std::size_t{r} * slots + s], resampler.with_auc());
      }
    }
    stats.clear();
    stats.shrink_to_fit();
    auto warn_dropped = [&](const std::string& what, MetricId metric,
                            const Interval& ci) {
      if (ci.dropped_fraction() > 0.01 &&
          result.overall.get(metric).state() != MetricState::kUnavailable) {
        result.warnings.push_back(
            what + " " + std::string(to_string(metric)) + ": " +
            std::to_string(ci.replicates_dropped) + " of " +
            std::to_string(ci.iterations()) + " replicates undefined (" +
            percent(ci.dropped_fraction()) + ")");
      }
    };

    std::vector<MetricValue> values(iterations);
    std::vector<MetricValue> deltas(iterations);
    for (MetricId metric : config.metrics) {
      const std::size_t m = index(metric);
      for (std::uint32_t r = 0; r < iterations; ++r) {
        values[r] = replicate_metrics[r].get(metric);
      }
      result.overall_ci[m] = percentile_interval(values, boot.ci_level,
                                                 boot.degenerate_policy);
      warn_dropped("overall", metric, *result.overall_ci[m]);

      std::size_t slot = 1;
      for (auto& factor : result.factors) {
        for (auto& subgroup : factor.subgroups) {
          const std::size_t s = slot++;
          if (subgroup.suppressed) continue;
          for (std::uint32_t r = 0; r < iterations; ++r) {
            values[r] = replicate_metrics[s * iterations + r].get(metric);
            deltas[r] = values[r] - replicate_metrics[r].get(metric);
          }
          subgroup.subgroup_ci[m] = percentile_interval(
              values, boot.ci_level, boot.degenerate_policy);
          subgroup.delta_ci[m] = percentile_interval(deltas, boot.ci_level,
                                                     boot.degenerate_policy);
          warn_dropped(label_of(subgroup), metric, *subgroup.delta_ci[m]);
        }
      }
    }
  }

  if (config.flag_policy.kind == FlagPolicy::Kind::kAbsGapOver ||
      boot.iterations >= kMinIterationsForCI) {
    for (auto& factor : result.factors) {
      factor.subgroups =
          flag_disparities(std::move(factor.subgroups), config.flag_policy,
                           config.metrics, config.flag_unknown);
    }
  } else {
    result.warnings.push_back(
        "fewer than " + std::to_string(kMinIterationsForCI) +
        " bootstrap iterations: no intervals, nothing flagged");
  }

  std::vector<std::string> findings = config.pathology_factors;
  if (findings.empty()) {
    for (const auto& factor : cohort.manifest().factors) {
      if (factor.kind == FactorKind::kFindingFlag) {
        findings.push_back(factor.name);
      }
    }
  }
  result.pathology_slices = pathology_sensitivity_slices(
      cohort, findings, config, &result.warnings);
  return result;
}

}  // namespace cardforge
