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
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "cardforge/error.h"
#include "test_support.h"

namespace cardforge {
namespace {

using testing::hard;
using testing::random_records;
using testing::scored;

std::vector<PredictionRecord> from_scores(const std::vector<double>& scores,
                                          const std::vector<int>& labels) {
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.push_back(scored(std::to_string(i), labels[i], scores[i]));
  }
  return out;
}

TEST(ConfusionMatrix, Examples) {
  EXPECT_EQ(confusion_matrix(from_scores({0.9, 0.2}, {1, 0})),
            (ConfusionMatrix{1, 0, 1, 0}));
  EXPECT_EQ(confusion_matrix(from_scores({0.5}, {0})), (ConfusionMatrix{0, 1, 0, 0}));
  EXPECT_EQ(confusion_matrix(from_scores({0.9, 0.9, 0.2, 0.2}, {1, 0, 1, 0})),
            (ConfusionMatrix{1, 1, 1, 1}));
}

TEST(ConfusionMatrix, HardLabelsAndMixedKinds) {
  const std::vector<PredictionRecord> labels{hard("a", 1, 1), hard("b", 0, 1),
                                             hard("c", 1, 0)};
  EXPECT_EQ(confusion_matrix(labels), (ConfusionMatrix{1, 1, 0, 1}));
  const std::vector<PredictionRecord> mixed{hard("a", 1, 1), scored("b", 0, 0.2)};
  EXPECT_THROW(confusion_matrix(mixed), Error);
  // Records carrying both use the score.
  PredictionRecord both = scored("c", 1, 0.1);
  both.y_pred = 1;
  const std::vector<PredictionRecord> with_both{both, scored("d", 0, 0.7)};
  EXPECT_EQ(confusion_matrix(with_both), (ConfusionMatrix{0, 1, 0, 1}));
}

TEST(MetricSuite, Examples) {
  const MetricSet a = metric_suite(ConfusionMatrix{2, 1, 0, 1});
  EXPECT_EQ(a.ppv, MetricValue::of(2.0 / 3.0));
  EXPECT_EQ(a.sensitivity, MetricValue::of(2.0 / 3.0));
  EXPECT_EQ(a.f1, MetricValue::of(2.0 / 3.0));
  EXPECT_EQ(a.npv, MetricValue::of(0.0));
  EXPECT_EQ(a.specificity, MetricValue::of(0.0));

  const MetricSet b = metric_suite(ConfusionMatrix{0, 0, 5, 0});
  EXPECT_EQ(b.sensitivity, MetricValue::undefined());
  EXPECT_EQ(b.specificity, MetricValue::of(1.0));
  EXPECT_EQ(b.ppv, MetricValue::undefined());
  EXPECT_EQ(b.f1, MetricValue::undefined());
  EXPECT_EQ(b.auc, MetricValue::unavailable());

  const MetricSet c = metric_suite(ConfusionMatrix{5, 0, 5, 0});
  for (MetricId m : {MetricId::kAccuracy, MetricId::kSensitivity, MetricId::kSpecificity,
                     MetricId::kPpv, MetricId::kNpv, MetricId::kF1}) {
    EXPECT_EQ(c.get(m), MetricValue::of(1.0)) << to_string(m);
  }
}

TEST(MetricSuite, F1UndefinedWhenBothZero) {
  // ppv = 0/1, sensitivity = 0/1: both defined and zero.
  const MetricSet s = metric_suite(ConfusionMatrix{0, 1, 0, 1});
  EXPECT_EQ(s.ppv, MetricValue::of(0.0));
  EXPECT_EQ(s.sensitivity, MetricValue::of(0.0));
  EXPECT_EQ(s.f1, MetricValue::undefined());
}

TEST(RocAuc, Examples) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(s, y).value(), 0.75);
  const std::vector<double> flat{0.3, 0.3, 0.3, 0.3};
  EXPECT_DOUBLE_EQ(roc_auc(flat, y).value(), 0.5);
  const std::vector<int> ones{1, 1, 1, 1};
  EXPECT_EQ(roc_auc(s, ones), MetricValue::undefined());
}

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

TEST(RocAuc, ClassSwapComplementsOnTieFreeInputs) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s;
    std::vector<int> y;
    std::set<double> seen;
    const int n = 2 + static_cast<int>(rng.below(30));
    while (static_cast<int>(s.size()) < n) {
      const double v = rng.uniform();
      if (!seen.insert(v).second) continue;
      s.push_back(v);
      y.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    std::vector<int> swapped(y.size());
    std::transform(y.begin(), y.end(), swapped.begin(), [](int v) { return 1 - v; });
    const MetricValue a = roc_auc(s, y);
    const MetricValue b = roc_auc(s, swapped);
    ASSERT_EQ(a.defined(), b.defined());
    if (a.defined()) {
      EXPECT_NEAR(a.value() + b.value(), 1.0, 1e-12);
    }
  }
}

TEST(RocAuc, InvariantUnderIncreasingTransform) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto records = random_records(rng, 1 + rng.below(40));
    std::vector<double> s, t;
    std::vector<int> y;
    for (const auto& r : records) {
      s.push_back(*r.y_score);
      t.push_back(std::exp(3.0 * *r.y_score) - 7.0);
      y.push_back(r.y_true);
    }
    EXPECT_EQ(roc_auc(s, y), roc_auc(t, y));
  }
}

TEST(RocAuc, MatchesPairwiseAndWeightedForm) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto records = random_records(rng, 1 + rng.below(25), 5);
    std::vector<double> s;
    std::vector<int> y;
    for (const auto& r : records) {
      s.push_back(*r.y_score);
      y.push_back(r.y_true);
    }
    const MetricValue auc = roc_auc(s, y);
    const bool two_class = std::count(y.begin(), y.end(), 1) > 0 &&
                           std::count(y.begin(), y.end(), 0) > 0;
    ASSERT_EQ(auc.defined(), two_class);
    if (!two_class) continue;
    EXPECT_NEAR(auc.value(), pairwise_auc(s, y), 1e-12);

    // Weighted AUC equals the AUC of the expanded multiset.
    std::vector<std::uint32_t> w(s.size());
    std::vector<double> es;
    std::vector<int> ey;
    for (std::size_t i = 0; i < s.size(); ++i) {
      w[i] = static_cast<std::uint32_t>(rng.below(4));
      for (std::uint32_t k = 0; k < w[i]; ++k) {
        es.push_back(s[i]);
        ey.push_back(y[i]);
      }
    }
    const RankedScores ranked(s, y);
    EXPECT_EQ(ranked.auc(), auc);
    const MetricValue weighted = ranked.auc(w);
    const MetricValue expanded = roc_auc(es, ey);
    ASSERT_EQ(weighted.defined(), expanded.defined());
    if (weighted.defined()) {
      EXPECT_NEAR(weighted.value(), expanded.value(), 1e-12);
    }
  }
}

TEST(MetricSuite, CountsRoundTripFromRatios) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const ConfusionMatrix cm{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    const MetricSet m = metric_suite(cm);
    if (m.sensitivity.defined()) {
      EXPECT_EQ(std::llround(m.sensitivity.value() * static_cast<double>(m.n_pos)),
                static_cast<long long>(cm.tp));
    }
    if (m.specificity.defined()) {
      EXPECT_EQ(std::llround(m.specificity.value() * static_cast<double>(m.n_neg)),
                static_cast<long long>(cm.tn));
    }
    EXPECT_EQ(m.n, cm.n());
  }
}

TEST(MetricSuite, MajorityPredictorAccuracy) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(50);
    std::vector<PredictionRecord> records;
    std::uint64_t pos = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const int y = rng.bernoulli(0.3) ? 1 : 0;
      pos += y;
      records.push_back(scored(std::to_string(i), y, 0.0));
    }
    const int majority = pos * 2 > n ? 1 : 0;
    for (auto& r : records) r.y_score = majority ? 1.0 : 0.0;
    const MetricSet m = evaluate_records(records);
    EXPECT_EQ(m.accuracy.value(),
              static_cast<double>(std::max(pos, n - pos)) / static_cast<double>(n));
  }
}

TEST(MetricValue, DifferencePropagatesState) {
  EXPECT_EQ(MetricValue::of(0.5) - MetricValue::of(0.25), MetricValue::of(0.25));
  EXPECT_EQ(MetricValue::of(0.5) - MetricValue::undefined(), MetricValue::undefined());
  EXPECT_EQ(MetricValue::unavailable() - MetricValue::of(0.5), MetricValue::unavailable());
  EXPECT_THROW((void)MetricValue::undefined().value(), Error);
}

TEST(MetricId, Names) {
  EXPECT_EQ(parse_metric_id("recall"), MetricId::kSensitivity);
  EXPECT_EQ(parse_metric_id("precision"), MetricId::kPpv);
  for (MetricId m : kAllMetrics) EXPECT_EQ(parse_metric_id(to_string(m)), m);
  EXPECT_THROW(parse_metric_id("brier"), Error);
}

}  // namespace
}  // namespace cardforge
