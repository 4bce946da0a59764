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

#include "cardforge/chart.h"

#include <regex>

#include <gtest/gtest.h>

#include "cardforge/error.h"
#include "test_support.h"

namespace cardforge {
namespace {

Interval interval(double lo, double hi) {
  Interval ci;
  ci.defined = true;
  ci.lo = lo;
  ci.hi = hi;
  ci.replicates_used = 10'000;
  return ci;
}

ChartSpec one_bar(double delta, std::optional<Interval> ci = std::nullopt) {
  ChartSpec spec;
  spec.factor = "device";
  spec.metric = MetricId::kSensitivity;
  spec.bars.push_back({"GE_Type_1", 5000, MetricValue::of(delta), ci, false});
  return spec;
}

double attribute(const std::string& element, const std::string& name) {
  const std::regex re(name + "=\"([-0-9.]+)\"");
  std::smatch match;
  if (!std::regex_search(element, match, re)) return -1;
  return std::stod(match[1]);
}

// The first element of the given tag after `from`.
std::string element_after(const std::string& svg, const std::string& tag,
                          std::size_t from = 0) {
  const auto start = svg.find("<" + tag + " ", from);
  if (start == std::string::npos) return "";
  return svg.substr(start, svg.find('>', start) - start + 1);
}

TEST(RenderChart, ZeroGapIsAZeroLengthBarOnTheZeroLine) {
  const std::string svg = render_chart(one_bar(0.0));
  const auto label = svg.find(">GE_Type_1<");
  const std::string bar = element_after(svg, "rect", label);
  EXPECT_EQ(attribute(bar, "width"), 0.0);
  EXPECT_EQ(attribute(bar, "x"), 390.0);
  EXPECT_NE(svg.find("x1=\"390.00\" y1=\"40.00\" x2=\"390.00\""), std::string::npos);
}

TEST(RenderChart, NegativeGapSitsLeftOfZeroWithWhiskers) {
  const std::string svg = render_chart(one_bar(-0.23, interval(-0.31, -0.15)));
  const auto label = svg.find(">GE_Type_1<");
  const std::string bar = element_after(svg, "rect", label);
  const double x = attribute(bar, "x");
  const double width = attribute(bar, "width");
  EXPECT_LT(x, 390.0);
  EXPECT_NEAR(x + width, 390.0, 1e-9);
  const std::string whisker = element_after(svg, "line", svg.find("<g ", label));
  EXPECT_LT(attribute(whisker, "x1"), 390.0);
  EXPECT_LT(attribute(whisker, "x2"), 390.0);
  EXPECT_LT(attribute(whisker, "x1"), x);  // lower end beyond the bar tip
  EXPECT_NE(svg.find("n=5000"), std::string::npos);
}

TEST(RenderChart, SuppressedBarsAreHatchedWithoutWhiskers) {
  ChartSpec spec = one_bar(-0.1, interval(-0.3, 0.1));
  spec.bars[0].suppressed = true;
  const std::string svg = render_chart(spec);
  EXPECT_NE(svg.find("fill=\"url(#hatch)\""), std::string::npos);
  EXPECT_EQ(svg.find("<g stroke"), std::string::npos);
  EXPECT_NE(svg.find("suppressed"), std::string::npos);
}

TEST(RenderChart, DeterministicAndGolden) {
  const ChartSpec spec = one_bar(-0.23, interval(-0.31, -0.15));
  const std::string svg = render_chart(spec);
  EXPECT_EQ(svg, render_chart(spec));
  EXPECT_TRUE(testing::matches_golden("one_bar_delta.svg", svg));
}

TEST(RenderChart, EmptySpecAndRawMode) {
  ChartSpec empty;
  empty.factor = "device";
  try {
    render_chart(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySpec);
  }
  ChartSpec raw = one_bar(0.5, interval(0.4, 0.6));
  raw.mode = ChartMode::kRaw;
  const std::string svg = render_chart(raw);
  const std::string bar = element_after(svg, "rect", svg.find(">GE_Type_1<"));
  EXPECT_EQ(attribute(bar, "x"), 170.0);
  EXPECT_EQ(attribute(bar, "width"), 220.0);
}

TEST(RenderChart, UndefinedValuesDrawNoBar) {
  ChartSpec spec = one_bar(0.0);
  spec.bars[0].value = MetricValue::undefined();
  const std::string svg = render_chart(spec);
  EXPECT_EQ(element_after(svg, "rect", svg.find(">GE_Type_1<")), "");
  EXPECT_NE(svg.find("undefined"), std::string::npos);
}

TEST(ChartSpec, FromAuditFollowsReportOrderAndHidesValues) {
  const AuditResult audit = testing::demo_audit(200);
  const ChartSpec spec = chart_spec(audit, "department", MetricId::kAccuracy);
  const FactorReport* report = audit.find_factor("department");
  ASSERT_EQ(spec.bars.size(), report->subgroups.size());
  for (std::size_t i = 0; i < spec.bars.size(); ++i) {
    EXPECT_EQ(spec.bars[i].label, report->subgroups[i].value);
    EXPECT_EQ(spec.bars[i].value, report->subgroups[i].delta[index(MetricId::kAccuracy)]);
    EXPECT_EQ(spec.bars[i].suppressed, report->subgroups[i].suppressed);
  }
  EXPECT_EQ(spec.bars.front().label, "emergency");
  EXPECT_TRUE(spec.bars.back().suppressed);  // "mobile", n = 20

  const std::vector<std::string> hidden{"mobile"};
  const ChartSpec raw = chart_spec(audit, "department", MetricId::kAccuracy, ChartMode::kRaw, hidden);
  EXPECT_EQ(raw.bars.size(), spec.bars.size() - 1);
  EXPECT_EQ(raw.bars[0].value, report->subgroups[0].metrics.accuracy);
  EXPECT_THROW(chart_spec(audit, "shoe_size", MetricId::kAccuracy), Error);
}

TEST(ChartSpec, JsonRoundTrip) {
  ChartSpec spec = one_bar(-0.23, interval(-0.31, -0.15));
  spec.bars.push_back({"Varian", 12, MetricValue::undefined(), std::nullopt, true});
  EXPECT_EQ(parse_chart_spec(serialize_chart_spec(spec)), spec);
  EXPECT_THROW(parse_chart_spec("{}"), Error);
}

}  // namespace
}  // namespace cardforge
