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

#ifndef CARDFORGE_CHART_H_
#define CARDFORGE_CHART_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cardforge/audit.h"
#include "cardforge/bootstrap.h"
#include "cardforge/metrics.h"

namespace cardforge {

enum class ChartMode { kDelta, kRaw };

std::string_view to_string(ChartMode mode);
ChartMode parse_chart_mode(std::string_view text);

struct ChartBar {
  std::string label;
  std::uint64_t n = 0;
  // The gap (delta mode) or the raw metric (raw mode).
  MetricValue value;
  std::optional<Interval> ci;
  bool suppressed = false;

  bool operator==(const ChartBar&) const = default;
};

struct ChartSpec {
  std::string factor;
  MetricId metric = MetricId::kAccuracy;
  ChartMode mode = ChartMode::kDelta;
  std::vector<ChartBar> bars;

  bool operator==(const ChartSpec&) const = default;
};

// One bar per subgroup of `factor`, in report order, minus `hidden_values`.
ChartSpec chart_spec(const AuditResult& audit, std::string_view factor,
                     MetricId metric, ChartMode mode = ChartMode::kDelta,
                     std::span<const std::string> hidden_values = {});

// Horizontal bar chart as SVG. Delta mode draws a zero line with signed bars;
// suppressed bars are hatched and carry no whiskers. Throws EmptySpec.
std::string render_chart(const ChartSpec& spec);

// JSON form used by `cardforge chart --spec`.
ChartSpec parse_chart_spec(std::string_view json_text);
std::string serialize_chart_spec(const ChartSpec& spec);

}  // namespace cardforge

#endif  // CARDFORGE_CHART_H_
