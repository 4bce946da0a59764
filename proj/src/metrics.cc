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

#include "cardforge/metrics.h"

#include <algorithm>
#include <numeric>

#include "cardforge/error.h"

namespace cardforge {

MetricValue MetricValue::ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return undefined();
  return of(static_cast<double>(num) / static_cast<double>(den));
}

double MetricValue::value() const {
  if (!defined()) {
    throw Error(ErrorCode::kInvalidConfig, "value() of a non-defined metric");
  }
  return value_;
}

MetricValue operator-(MetricValue a, MetricValue b) {
  if (a.state_ == MetricState::kUnavailable ||
      b.state_ == MetricState::kUnavailable) {
    return MetricValue::unavailable();
  }
  if (!a.defined() || !b.defined()) return MetricValue::undefined();
  return MetricValue::of(a.value_ - b.value_);
}

std::string to_string(MetricValue value) {
  switch (value.state()) {
    case MetricState::kDefined: return format_number(value.value());
    case MetricState::kUndefined: return "undefined";
    case MetricState::kUnavailable: return "unavailable";
  }
  return "";
}

std::string_view to_string(MetricId id) {
  switch (id) {
    case MetricId::kAccuracy: return "accuracy";
    case MetricId::kSensitivity: return "sensitivity";
    case MetricId::kSpecificity: return "specificity";
    case MetricId::kPpv: return "ppv";
    case MetricId::kNpv: return "npv";
    case MetricId::kF1: return "f1";
    case MetricId::kAuc: return "auc";
  }
  return "";
}

std::string_view display_name(MetricId id) {
  switch (id) {
    case MetricId::kAccuracy: return "Accuracy";
    case MetricId::kSensitivity: return "Sensitivity";
    case MetricId::kSpecificity: return "Specificity";
    case MetricId::kPpv: return "PPV";
    case MetricId::kNpv: return "NPV";
    case MetricId::kF1: return "F1";
    case MetricId::kAuc: return "AUC";
  }
  return "";
}

MetricId parse_metric_id(std::string_view text) {
  if (text == "recall") return MetricId::kSensitivity;
  if (text == "precision") return MetricId::kPpv;
  for (MetricId id : kAllMetrics) {
    if (to_string(id) == text) return id;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown metric '" + std::string(text) + "'");
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

MetricValue MetricSet::get(MetricId id) const {
  switch (id) {
    case MetricId::kAccuracy: return accuracy;
    case MetricId::kSensitivity: return sensitivity;
    case MetricId::kSpecificity: return specificity;
    case MetricId::kPpv: return ppv;
    case MetricId::kNpv: return npv;
    case MetricId::kF1: return f1;
    case MetricId::kAuc: return auc;
  }
  return MetricValue::undefined();
}

PredictionSource prediction_source(std::span<const PredictionRecord> records) {
  bool all_scored = true;
  bool all_labelled = true;
  for (const auto& record : records) {
    all_scored = all_scored && record.y_score.has_value();
    all_labelled = all_labelled && record.y_pred.has_value();
  }
  if (all_scored) return PredictionSource::kScores;
  if (all_labelled) return PredictionSource::kHardLabels;
  throw Error(ErrorCode::kMixedPredictionKinds,
              "some records carry only scores and others only hard labels");
}

int predicted_label(const PredictionRecord& record, PredictionSource source,
                    double threshold) {
  if (source == PredictionSource::kScores) {
    return *record.y_score >= threshold ? 1 : 0;
  }
  return *record.y_pred;
}

ConfusionMatrix confusion_matrix(std::span<const PredictionRecord> records,
                                 double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "threshold outside [0,1]");
  }
  const PredictionSource source = prediction_source(records);
  ConfusionMatrix cm;
  for (const auto& record : records) {
    const int pred = predicted_label(record, source, threshold);
    if (record.y_true == 1) {
      (pred ? cm.tp : cm.fn) += 1;
    } else {
      (pred ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

MetricSet metric_suite(const ConfusionMatrix& cm, MetricValue auc) {
  MetricSet m;
  m.n = cm.n();
  m.n_pos = cm.n_pos();
  m.n_neg = cm.n_neg();
  m.accuracy = MetricValue::ratio(cm.tp + cm.tn, m.n);
  m.sensitivity = MetricValue::ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = MetricValue::ratio(cm.tn, cm.tn + cm.fp);
  m.ppv = MetricValue::ratio(cm.tp, cm.tp + cm.fp);
  m.npv = MetricValue::ratio(cm.tn, cm.tn + cm.fn);
  // 2·PPV·sens/(PPV+sens) reduces to 2tp/(2tp+fp+fn); computing the reduced
  // form keeps the value an exact ratio of counts. Both inputs zero (tp = 0)
  // leaves it Undefined.
  if (m.ppv.defined() && m.sensitivity.defined() && cm.tp > 0) {
    m.f1 = MetricValue::ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  } else {
    m.f1 = MetricValue::undefined();
  }
  m.auc = auc;
  return m;
}

MetricSet metric_suite(const ConfusionMatrix& cm, std::span<const double> scores,
                       std::span<const int> labels) {
  return metric_suite(cm, roc_auc(scores, labels));
}

MetricSet evaluate_records(std::span<const PredictionRecord> records,
                           double threshold) {
  const ConfusionMatrix cm = confusion_matrix(records, threshold);
  if (records.empty() ||
      prediction_source(records) != PredictionSource::kScores) {
    return metric_suite(cm, records.empty() ? MetricValue::undefined()
                                            : MetricValue::unavailable());
  }
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(records.size());
  labels.reserve(records.size());
  for (const auto& record : records) {
    scores.push_back(*record.y_score);
    labels.push_back(record.y_true);
  }
  return metric_suite(cm, scores, labels);
}

MetricValue roc_auc(std::span<const double> scores,
                    std::span<const int> labels) {
  return RankedScores(scores, labels).auc();
}

RankedScores::RankedScores(std::span<const double> scores,
                           std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                "scores and labels differ in length");
  }
  order_.resize(scores.size());
  std::iota(order_.begin(), order_.end(), 0u);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return scores[a] < scores[b];
                   });
  sorted_labels_.reserve(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) {
    sorted_labels_.push_back(labels[order_[i]] == 1 ? 1 : 0);
    if (i + 1 == order_.size() || scores[order_[i + 1]] != scores[order_[i]]) {
      block_ends_.push_back(static_cast<std::uint32_t>(i + 1));
    }
  }
}

template <typename WeightFn>
MetricValue RankedScores::auc_impl(WeightFn weight) const {
  // Counted in half-pairs so ties stay integral: a positive above a negative
  // contributes 2, a tied pair 1.
  std::uint64_t half_pairs = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t total_pos = 0;
  std::size_t begin = 0;
  for (const std::uint32_t end : block_ends_) {
    std::uint64_t block_pos = 0;
    std::uint64_t block_neg = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t w = weight(order_[i]);
      (sorted_labels_[i] ? block_pos : block_neg) += w;
    }
    half_pairs += block_pos * (2 * neg_below + block_neg);
    neg_below += block_neg;
    total_pos += block_pos;
    begin = end;
  }
  if (total_pos == 0 || neg_below == 0) return MetricValue::undefined();
  return MetricValue::of(static_cast<double>(half_pairs) /
                         (2.0 * static_cast<double>(total_pos) *
                          static_cast<double>(neg_below)));
}

MetricValue RankedScores::auc() const {
  return auc_impl([](std::uint32_t) { return std::uint64_t{1}; });
}

MetricValue RankedScores::auc(std::span<const std::uint32_t> weights) const {
  if (weights.size() != order_.size()) {
    throw Error(ErrorCode::kInvalidConfig, "weights differ in length");
  }
  return auc_impl([&](std::uint32_t i) { return std::uint64_t{weights[i]}; });
}

}  // namespace cardforge
