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

#ifndef CARDFORGE_BOOTSTRAP_H_
#define CARDFORGE_BOOTSTRAP_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "cardforge/cohort.h"
#include "cardforge/metrics.h"

namespace cardforge {

enum class DegeneratePolicy { kDropAndCount, kPropagateUndefined };

std::string_view to_string(DegeneratePolicy policy);
DegeneratePolicy parse_degenerate_policy(std::string_view text);

inline constexpr std::uint32_t kMinIterationsForCI = 100;

struct BootstrapConfig {
  std::uint32_t iterations = 10'000;
  double ci_level = 0.95;
  std::uint64_t master_seed = 0;
  DegeneratePolicy degenerate_policy = DegeneratePolicy::kDropAndCount;
  // 0 picks std::thread::hardware_concurrency(). Never affects results, so it
  // is not part of equality or of any serialized echo.
  unsigned workers = 0;

  bool operator==(const BootstrapConfig& other) const {
    return iterations == other.iterations && ci_level == other.ci_level &&
           master_seed == other.master_seed &&
           degenerate_policy == other.degenerate_policy;
  }
};

// Throws InvalidConfig unless iterations >= 1 and ci_level in (0,1).
void validate(const BootstrapConfig& config);

struct Interval {
  bool defined = false;
  double lo = 0.0;
  double hi = 0.0;
  std::uint32_t replicates_used = 0;
  std::uint32_t replicates_dropped = 0;

  std::uint32_t iterations() const { return replicates_used + replicates_dropped; }
  // Fraction of replicates dropped as degenerate.
  double dropped_fraction() const;
  bool operator==(const Interval&) const = default;
};

// 1-based nearest rank of quantile p among m sorted values:
// clamp(ceil(p*m - 1e-9), 1, m). The 1e-9 absorbs binary rounding of
// products like 0.025 * 10000.
std::size_t nearest_rank(double p, std::size_t m);

// Percentile interval (alpha/2, 1 - alpha/2), alpha = 1 - ci_level, over the
// defined replicates. Never throws; the interval is not `defined` when no
// replicate is usable (drop_and_count) or any replicate is Undefined
// (propagate_undefined).
Interval percentile_interval(std::span<const MetricValue> replicates,
                             double ci_level, DegeneratePolicy policy);

// Multiplicity-weighted evaluation of one resample.
using ReplicateFn =
    std::function<MetricValue(std::span<const std::uint32_t> counts)>;

// A named statistic: `bind` prepares it for one record set.
struct Statistic {
  std::string name;
  std::function<ReplicateFn(std::span<const PredictionRecord>)> bind;
};

Statistic metric_statistic(MetricId metric,
                           double threshold = kDefaultThreshold);

unsigned resolve_workers(unsigned requested);

// Runs fn(replicate_index, worker_index) for every index in [0, iterations)
// on up to `workers` threads. Each index runs exactly once.
void parallel_for(std::uint32_t iterations, unsigned workers,
                  const std::function<void(std::uint32_t, unsigned)>& fn);

// Percentile bootstrap CI of `statistic` over `records`. Replicate r resamples
// with an Rng seeded by replicate_seed(master_seed, stream_label, r), drawing
// positions in id order, so neither worker count nor input row order changes
// the result. The label defaults to the statistic name.
// Throws EmptyInput, and AllReplicatesDegenerate under drop_and_count when no
// replicate is usable.
Interval bootstrap_ci(std::span<const PredictionRecord> records,
                      const Statistic& statistic, const BootstrapConfig& config,
                      std::string_view stream_label = {});

// Lower-level form over `n` items: replicate r gets replicate_seed-driven
// multiplicities and is evaluated by `fn`. Returns all replicate values in
// replicate order.
std::vector<MetricValue> bootstrap_replicates(std::size_t n,
                                              const ReplicateFn& fn,
                                              const BootstrapConfig& config,
                                              std::string_view stream_label);

}  // namespace cardforge

#endif  // CARDFORGE_BOOTSTRAP_H_
