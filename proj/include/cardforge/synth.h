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

#ifndef CARDFORGE_SYNTH_H_
#define CARDFORGE_SYNTH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cardforge/audit.h"
#include "cardforge/cohort.h"
#include "cardforge/metrics.h"

namespace cardforge {

struct ScoreModel {
  enum class Kind { kHardLabels, kBetaScores };

  Kind kind = Kind::kBetaScores;
  // a + b of each Beta; only used by kBetaScores.
  double concentration = 10.0;

  bool operator==(const ScoreModel&) const = default;
};

// A factor's value within a block: one fixed value, or a weighted draw.
struct FactorAssignment {
  std::vector<std::pair<std::string, double>> weights;

  static FactorAssignment fixed(std::string value) {
    return {{{std::move(value), 1.0}}};
  }
  bool is_fixed() const { return weights.size() == 1; }
  // Share of the block carrying `value`.
  double share(std::string_view value) const;

  bool operator==(const FactorAssignment&) const = default;
};

struct SynthBlock {
  std::vector<std::pair<std::string, FactorAssignment>> factors;
  std::uint64_t n = 0;
  double prevalence = 0.5;
  double sensitivity = 0.8;
  double specificity = 0.8;
  // P(flag = 1 | abnormal) per finding_flag factor; normals never carry a
  // finding and unlisted findings are never set.
  std::vector<std::pair<std::string, double>> findings;

  const FactorAssignment* assignment(std::string_view factor) const;
  bool operator==(const SynthBlock&) const = default;
};

// JSON layout:
//   {"seed": 7,
//    "score_model": {"kind": "beta_scores", "concentration": 10}
//                   | {"kind": "hard_labels"},
//    "manifest": {...manifest document...},
//    "blocks": [{"factors": {"device": "GE", "sex": {"F": 0.5, "M": 0.5}},
//                "n": 5000, "prevalence": 0.5,
//                "sensitivity": 0.53, "specificity": 0.8,
//                "findings": {"effusion": 0.3}}, ...]}
struct SynthSpec {
  std::uint64_t seed = 0;
  ScoreModel score_model;
  Manifest manifest;
  std::vector<SynthBlock> blocks;

  bool operator==(const SynthSpec&) const = default;
};

// Throws InvalidSpec: n >= 1, prevalence in [0,1], targets in (0,1), every
// non-finding manifest factor assigned in every block, positive weights.
void validate(const SynthSpec& spec);

SynthSpec parse_synth_spec(std::string_view json_text);
std::string serialize_synth_spec(const SynthSpec& spec);

// Block i draws from Rng(replicate_seed(seed, "synth/block", i)). Each record
// draws, in order: y_true, then weighted factors in block order, then the
// prediction, then findings in block order. Ids are "r" plus the 1-based row
// number zero-padded to 7 digits.
CohortTable synth_cohort(const SynthSpec& spec);

// Mean of the Beta(c*mu, c*(1-mu)) whose mass at or above 0.5 is `target`.
double beta_mean_for_target(double target, double concentration);

// Expected confusion counts of the blocks, weighted by the share of each
// block carrying factor = value (all blocks when `factor` is empty).
struct ExpectedCounts {
  double tp = 0.0;
  double fp = 0.0;
  double tn = 0.0;
  double fn = 0.0;

  double accuracy() const { return (tp + tn) / (tp + fp + tn + fn); }
  double sensitivity() const { return tp / (tp + fn); }
  double specificity() const { return tn / (tn + fp); }
  double ppv() const { return tp / (tp + fp); }
  double npv() const { return tn / (tn + fn); }
};

ExpectedCounts expected_counts(const SynthSpec& spec,
                               std::string_view factor = {},
                               std::string_view value = {});

struct PowerScanConfig {
  // The injected subgroup.
  std::string factor;
  std::string value;
  // Sensitivity or specificity; the gap is subtracted from that target.
  MetricId metric = MetricId::kSensitivity;
  AuditConfig audit;
};

struct PowerCell {
  double gap = 0.0;
  std::uint64_t block_n = 0;
  std::uint32_t trials = 0;
  std::uint32_t detections = 0;

  double rate() const {
    return trials == 0 ? 0.0 : static_cast<double>(detections) / trials;
  }
};

// For each (gap, size): every block of the template gets n = size, blocks
// whose `factor` is fixed to `value` get their target lowered by gap, and
// `trials` cohorts are audited. Trial t of a cell uses synth and bootstrap
// seeds replicate_seed(template.seed, "power:<gap>:<size>", t). A detection
// is a flag on the injected subgroup's metric.
std::vector<PowerCell> power_scan(const SynthSpec& spec_template,
                                  std::span<const double> gaps,
                                  std::span<const std::uint64_t> sizes,
                                  std::uint32_t trials,
                                  const PowerScanConfig& config);

}  // namespace cardforge

#endif  // CARDFORGE_SYNTH_H_
