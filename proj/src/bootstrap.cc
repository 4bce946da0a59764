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

#include "cardforge/bootstrap.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <thread>
#include <vector>

#include "cardforge/error.h"
#include "cardforge/rng.h"

namespace cardforge {

std::string_view to_string(DegeneratePolicy policy) {
  switch (policy) {
    case DegeneratePolicy::kDropAndCount: return "drop_and_count";
    case DegeneratePolicy::kPropagateUndefined: return "propagate_undefined";
  }
  return "";
}

DegeneratePolicy parse_degenerate_policy(std::string_view text) {
  if (text == "drop_and_count") return DegeneratePolicy::kDropAndCount;
  if (text == "propagate_undefined") {
    return DegeneratePolicy::kPropagateUndefined;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown degenerate policy '" + std::string(text) + "'");
}

void validate(const BootstrapConfig& config) {
  if (config.iterations < 1) {
    throw Error(ErrorCode::kInvalidConfig, "bootstrap iterations must be >= 1");
  }
  if (!(config.ci_level > 0.0 && config.ci_level < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "ci_level must lie in (0,1)");
  }
}

double Interval::dropped_fraction() const {
  const auto total = iterations();
  return total == 0 ? 0.0
                    : static_cast<double>(replicates_dropped) /
                          static_cast<double>(total);
}

std::size_t nearest_rank(double p, std::size_t m) {
  const double rank = std::ceil(p * static_cast<double>(m) - 1e-9);
  if (rank < 1.0) return 1;
  if (rank > static_cast<double>(m)) return m;
  return static_cast<std::size_t>(rank);
}

Interval percentile_interval(std::span<const MetricValue> replicates,
                             double ci_level, DegeneratePolicy policy) {
  Interval interval;
  std::vector<double> values;
  values.reserve(replicates.size());
  for (const auto& r : replicates) {
    if (r.defined()) values.push_back(r.value());
  }
  interval.replicates_used = static_cast<std::uint32_t>(values.size());
  interval.replicates_dropped =
      static_cast<std::uint32_t>(replicates.size() - values.size());
  if (values.empty()) return interval;
  if (policy == DegeneratePolicy::kPropagateUndefined &&
      interval.replicates_dropped > 0) {
    return interval;
  }
  std::sort(values.begin(), values.end());
  const double alpha = 1.0 - ci_level;
  interval.lo = values[nearest_rank(alpha / 2.0, values.size()) - 1];
  interval.hi = values[nearest_rank(1.0 - alpha / 2.0, values.size()) - 1];
  interval.defined = true;
  return interval;
}

Statistic metric_statistic(MetricId metric, double threshold) {
  Statistic statistic;
  statistic.name = std::string(to_string(metric));
  statistic.bind = [metric,
                    threshold](std::span<const PredictionRecord> records) {
    const PredictionSource source = prediction_source(records);
    // Cell per record: 0 tp, 1 fp, 2 tn, 3 fn.
    auto cells = std::make_shared<std::vector<std::uint8_t>>();
    cells->reserve(records.size());
    std::shared_ptr<RankedScores> ranked;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& record : records) {
      const int pred = predicted_label(record, source, threshold);
      cells->push_back(record.y_true ? (pred ? 0 : 3) : (pred ? 1 : 2));
      if (source == PredictionSource::kScores) {
        scores.push_back(*record.y_score);
        labels.push_back(record.y_true);
      }
    }
    if (metric == MetricId::kAuc && source == PredictionSource::kScores) {
      ranked = std::make_shared<RankedScores>(scores, labels);
    }
    return ReplicateFn([metric, cells, ranked, source](
                           std::span<const std::uint32_t> counts) {
      std::uint64_t cell_counts[4] = {0, 0, 0, 0};
      for (std::size_t i = 0; i < counts.size(); ++i) {
        cell_counts[(*cells)[i]] += counts[i];
      }
      const ConfusionMatrix cm{cell_counts[0], cell_counts[1], cell_counts[2],
                               cell_counts[3]};
      if (metric != MetricId::kAuc) return metric_suite(cm).get(metric);
      if (source != PredictionSource::kScores) return MetricValue::unavailable();
      return ranked->auc(counts);
    });
  };
  return statistic;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::uint32_t iterations, unsigned workers,
                  const std::function<void(std::uint32_t, unsigned)>& fn) {
  workers = std::min<unsigned>(resolve_workers(workers),
                               std::max<std::uint32_t>(iterations, 1));
  if (workers <= 1) {
    for (std::uint32_t r = 0; r < iterations; ++r) fn(r, 0);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::uint32_t r = w; r < iterations; r += workers) fn(r, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<MetricValue> bootstrap_replicates(std::size_t n,
                                              const ReplicateFn& fn,
                                              const BootstrapConfig& config,
                                              std::string_view stream_label) {
  validate(config);
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "no records to resample");
  std::vector<MetricValue> values(config.iterations);
  const unsigned workers = std::min<unsigned>(resolve_workers(config.workers),
                                              config.iterations);
  std::vector<std::vector<std::uint32_t>> scratch(
      workers, std::vector<std::uint32_t>(n));
  parallel_for(config.iterations, workers,
               [&](std::uint32_t r, unsigned w) {
                 Rng rng(replicate_seed(config.master_seed, stream_label, r));
                 draw_resample(rng, scratch[w]);
                 values[r] = fn(scratch[w]);
               });
  return values;
}

Interval bootstrap_ci(std::span<const PredictionRecord> records,
                      const Statistic& statistic, const BootstrapConfig& config,
                      std::string_view stream_label) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyInput, "bootstrap over an empty record set");
  }
  // Resample positions follow id order so row order cannot move the result.
  std::vector<std::uint32_t> by_id(records.size());
  std::iota(by_id.begin(), by_id.end(), 0u);
  std::sort(by_id.begin(), by_id.end(), [&](std::uint32_t a, std::uint32_t b) {
    return records[a].id < records[b].id;
  });

  validate(config);
  const ReplicateFn evaluate = statistic.bind(records);
  const unsigned workers =
      std::min<unsigned>(resolve_workers(config.workers), config.iterations);
  std::vector<std::vector<std::uint32_t>> scratch(
      workers, std::vector<std::uint32_t>(records.size()));
  std::vector<std::vector<std::uint32_t>> remapped(
      workers, std::vector<std::uint32_t>(records.size()));
  std::vector<MetricValue> values(config.iterations);
  const std::string label =
      stream_label.empty() ? statistic.name : std::string(stream_label);
  parallel_for(config.iterations, workers, [&](std::uint32_t r, unsigned w) {
    Rng rng(replicate_seed(config.master_seed, label, r));
    draw_resample(rng, scratch[w]);
    auto& counts = remapped[w];
    for (std::size_t c = 0; c < by_id.size(); ++c) {
      counts[by_id[c]] = scratch[w][c];
    }
    values[r] = evaluate(counts);
  });

  const Interval interval = percentile_interval(values, config.ci_level,
                                                config.degenerate_policy);
  if (!interval.defined &&
      config.degenerate_policy == DegeneratePolicy::kDropAndCount) {
    throw Error(ErrorCode::kAllReplicatesDegenerate,
                "all " + std::to_string(config.iterations) + " replicates of " +
                    statistic.name + " are undefined");
  }
  return interval;
}

}  // namespace cardforge
