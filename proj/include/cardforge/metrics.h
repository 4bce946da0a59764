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

#ifndef CARDFORGE_METRICS_H_
#define CARDFORGE_METRICS_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cardforge/cohort.h"

namespace cardforge {

inline constexpr double kDefaultThreshold = 0.5;

enum class MetricState : std::uint8_t {
  kDefined,
  // A denominator is zero (for example sensitivity with no positives).
  kUndefined,
  // The metric cannot be computed from the inputs at all (AUC without scores).
  kUnavailable,
};

// A metric value that is explicitly Undefined/Unavailable instead of 0 or NaN.
class MetricValue {
 public:
  constexpr MetricValue() = default;

  static constexpr MetricValue of(double value) {
    return MetricValue(MetricState::kDefined, value);
  }
  static constexpr MetricValue undefined() {
    return MetricValue(MetricState::kUndefined, 0.0);
  }
  static constexpr MetricValue unavailable() {
    return MetricValue(MetricState::kUnavailable, 0.0);
  }
  // num/den, or Undefined when den is zero.
  static MetricValue ratio(std::uint64_t num, std::uint64_t den);

  constexpr MetricState state() const { return state_; }
  constexpr bool defined() const { return state_ == MetricState::kDefined; }
  // Requires defined().
  double value() const;

  friend MetricValue operator-(MetricValue a, MetricValue b);
  bool operator==(const MetricValue&) const = default;

 private:
  constexpr MetricValue(MetricState state, double value)
      : state_(state), value_(value) {}

  MetricState state_ = MetricState::kUndefined;
  double value_ = 0.0;
};

std::string to_string(MetricValue value);

enum class MetricId : std::uint8_t {
  kAccuracy,
  kSensitivity,
  kSpecificity,
  kPpv,
  kNpv,
  kF1,
  kAuc,
};

inline constexpr std::size_t kNumMetrics = 7;
inline constexpr std::array<MetricId, kNumMetrics> kAllMetrics = {
    MetricId::kAccuracy, MetricId::kSensitivity, MetricId::kSpecificity,
    MetricId::kPpv,      MetricId::kNpv,         MetricId::kF1,
    MetricId::kAuc};

template <typename T>
using PerMetric = std::array<T, kNumMetrics>;

constexpr std::size_t index(MetricId id) { return static_cast<std::size_t>(id); }

std::string_view to_string(MetricId id);
// Display name used in documents ("Sensitivity", "PPV", ...).
std::string_view display_name(MetricId id);
// Accepts the canonical names plus "recall" and "precision".
MetricId parse_metric_id(std::string_view text);

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t n() const { return tp + fp + tn + fn; }
  std::uint64_t n_pos() const { return tp + fn; }
  std::uint64_t n_neg() const { return tn + fp; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricSet {
  MetricValue accuracy;
  MetricValue sensitivity;
  MetricValue specificity;
  MetricValue ppv;
  MetricValue npv;
  MetricValue f1;
  MetricValue auc = MetricValue::unavailable();
  std::uint64_t n = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;

  MetricValue get(MetricId id) const;
  bool operator==(const MetricSet&) const = default;
};

enum class PredictionSource { kScores, kHardLabels };

// kScores when every record has a score, kHardLabels when every record has a
// hard label (and some lack scores). Throws MixedPredictionKinds otherwise.
// An empty span counts as kScores.
PredictionSource prediction_source(std::span<const PredictionRecord> records);

// 1 iff y_score >= threshold (scores source) or y_pred == 1 (hard labels).
int predicted_label(const PredictionRecord& record, PredictionSource source,
                    double threshold);

ConfusionMatrix confusion_matrix(std::span<const PredictionRecord> records,
                                 double threshold = kDefaultThreshold);

MetricSet metric_suite(const ConfusionMatrix& cm,
                       MetricValue auc = MetricValue::unavailable());
// `scores` and `labels` must have equal length; AUC is filled from them.
MetricSet metric_suite(const ConfusionMatrix& cm, std::span<const double> scores,
                       std::span<const int> labels);

// Confusion matrix plus AUC when the records carry scores.
MetricSet evaluate_records(std::span<const PredictionRecord> records,
                           double threshold = kDefaultThreshold);

// Mann-Whitney AUC with ties counted as one half; Undefined when either class
// is empty.
MetricValue roc_auc(std::span<const double> scores, std::span<const int> labels);

// Scores sorted once so the (weighted) Mann-Whitney statistic of many
// resamples costs O(n) each. Weights are record multiplicities, indexed like
// the constructor inputs.
class RankedScores {
 public:
  RankedScores(std::span<const double> scores, std::span<const int> labels);

  MetricValue auc() const;
  MetricValue auc(std::span<const std::uint32_t> weights) const;

 private:
  template <typename WeightFn>
  MetricValue auc_impl(WeightFn weight) const;

  std::vector<std::uint32_t> order_;
  // One past the last sorted position of each run of equal scores.
  std::vector<std::uint32_t> block_ends_;
  std::vector<std::uint8_t> sorted_labels_;
};

}  // namespace cardforge

#endif  // CARDFORGE_METRICS_H_
