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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "cardforge/card.h"
#include "cardforge/error.h"
#include "json_codec.h"

namespace cardforge {
namespace {

constexpr double kWidth = 720.0;
constexpr double kLeft = 170.0;
constexpr double kPlotWidth = 440.0;
constexpr double kTop = 44.0;
constexpr double kRowHeight = 26.0;
constexpr double kBarHeight = 14.0;
constexpr double kAxisHeight = 34.0;
constexpr double kCapHeight = 8.0;

std::string coord(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                       std::chars_format::fixed, 2);
  std::string out(buffer, ptr);
  if (out == "-0.00") out = "0.00";
  return out;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Half-width of the symmetric delta domain: the largest magnitude among values
// and whisker ends, rounded up to a multiple of 0.05.
double delta_extent(const ChartSpec& spec) {
  double extent = 0.0;
  for (const auto& bar : spec.bars) {
    if (bar.value.defined()) extent = std::max(extent, std::abs(bar.value.value()));
    if (bar.ci && bar.ci->defined && !bar.suppressed) {
      extent = std::max({extent, std::abs(bar.ci->lo), std::abs(bar.ci->hi)});
    }
  }
  const double steps = std::ceil(extent / 0.05 - 1e-9);
  return std::max(1.0, steps) * 0.05;
}

}  // namespace

std::string_view to_string(ChartMode mode) {
  return mode == ChartMode::kDelta ? "delta" : "raw";
}

ChartMode parse_chart_mode(std::string_view text) {
  if (text == "delta") return ChartMode::kDelta;
  if (text == "raw") return ChartMode::kRaw;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown chart mode '" + std::string(text) + "' (delta or raw)");
}

ChartSpec chart_spec(const AuditResult& audit, std::string_view factor,
                     MetricId metric, ChartMode mode,
                     std::span<const std::string> hidden_values) {
  const FactorReport* report = audit.find_factor(factor);
  if (report == nullptr) {
    throw Error(ErrorCode::kManifestMismatch,
                "no audited factor named '" + std::string(factor) + "'");
  }
  ChartSpec spec{std::string(factor), metric, mode, {}};
  const std::size_t m = index(metric);
  for (const auto& s : report->subgroups) {
    if (std::find(hidden_values.begin(), hidden_values.end(), s.value) !=
        hidden_values.end()) {
      continue;
    }
    ChartBar bar;
    bar.label = s.value;
    bar.n = s.n;
    bar.suppressed = s.suppressed;
    if (mode == ChartMode::kDelta) {
      bar.value = s.delta[m];
      bar.ci = s.delta_ci[m];
    } else {
      bar.value = s.metrics.get(metric);
      bar.ci = s.subgroup_ci[m];
    }
    spec.bars.push_back(std::move(bar));
  }
  return spec;
}

std::string render_chart(const ChartSpec& spec) {
  if (spec.bars.empty()) {
    throw Error(ErrorCode::kEmptySpec,
                "chart for " + spec.factor + " has no bars");
  }
  const bool delta = spec.mode == ChartMode::kDelta;
  const double extent = delta ? delta_extent(spec) : 1.0;
  const double lo = delta ? -extent : 0.0;
  const double hi = extent;
  auto x_of = [&](double v) {
    const double clamped = std::clamp(v, lo, hi);
    return kLeft + (clamped - lo) / (hi - lo) * kPlotWidth;
  };
  const double plot_height = kRowHeight * static_cast<double>(spec.bars.size());
  const double height = kTop + plot_height + kAxisHeight;
  const std::string metric_name(display_name(spec.metric));
  const std::string title =
      delta ? "Δ " + metric_name + " by " + spec.factor + " (subgroup - overall)"
            : metric_name + " by " + spec.factor;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << coord(kWidth)
      << "\" height=\"" << coord(height) << "\" viewBox=\"0 0 " << coord(kWidth)
      << " " << coord(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" "
         "patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">"
         "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#888888\" "
         "stroke-width=\"2\"/></pattern></defs>\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << coord(kWidth) << "\" height=\""
      << coord(height) << "\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << coord(kWidth / 2) << "\" y=\"22.00\" "
      << "text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";

  // Axis with five ticks.
  const double axis_y = kTop + plot_height;
  out << "<line x1=\"" << coord(kLeft) << "\" y1=\"" << coord(axis_y)
      << "\" x2=\"" << coord(kLeft + kPlotWidth) << "\" y2=\"" << coord(axis_y)
      << "\" stroke=\"#333333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    const double x = x_of(v);
    out << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(axis_y)
        << "\" x2=\"" << coord(x) << "\" y2=\"" << coord(axis_y + 4)
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << coord(x) << "\" y=\"" << coord(axis_y + 18)
        << "\" text-anchor=\"middle\">" << (delta ? signed4(v) : fixed4(v))
        << "</text>\n";
  }
  const double zero_x = x_of(0.0);
  if (delta) {
    out << "<line x1=\"" << coord(zero_x) << "\" y1=\"" << coord(kTop - 4)
        << "\" x2=\"" << coord(zero_x) << "\" y2=\"" << coord(axis_y)
        << "\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
  }

  for (std::size_t i = 0; i < spec.bars.size(); ++i) {
    const ChartBar& bar = spec.bars[i];
    const double row_y = kTop + kRowHeight * static_cast<double>(i);
    const double mid_y = row_y + kRowHeight / 2;
    const double bar_y = mid_y - kBarHeight / 2;
    out << "<text x=\"" << coord(kLeft - 8) << "\" y=\"" << coord(mid_y + 4)
        << "\" text-anchor=\"end\">" << xml_escape(bar.label) << "</text>\n";

    std::string annotation = "n=" + std::to_string(bar.n);
    if (bar.value.defined()) {
      const double v = bar.value.value();
      const double x0 = delta ? zero_x : x_of(0.0);
      const double x1 = x_of(v);
      const double left = std::min(x0, x1);
      const std::string fill =
          bar.suppressed ? "url(#hatch)"
                         : (delta && v < 0.0 ? "#c0504d" : "#4f81bd");
      out << "<rect x=\"" << coord(left) << "\" y=\"" << coord(bar_y)
          << "\" width=\"" << coord(std::abs(x1 - x0)) << "\" height=\""
          << coord(kBarHeight) << "\" fill=\"" << fill << "\"";
      if (bar.suppressed) out << " stroke=\"#888888\"";
      out << "/>\n";
      annotation += "  " + (delta ? signed4(v) : fixed4(v));
    } else {
      annotation += "  " + to_string(bar.value);
    }
    if (bar.suppressed) {
      annotation += "  suppressed";
    } else if (bar.ci && bar.ci->defined) {
      const double wl = x_of(bar.ci->lo);
      const double wh = x_of(bar.ci->hi);
      out << "<g stroke=\"#000000\" stroke-width=\"1\">";
      out << "<line x1=\"" << coord(wl) << "\" y1=\"" << coord(mid_y)
          << "\" x2=\"" << coord(wh) << "\" y2=\"" << coord(mid_y) << "\"/>";
      for (double wx : {wl, wh}) {
        out << "<line x1=\"" << coord(wx) << "\" y1=\""
            << coord(mid_y - kCapHeight / 2) << "\" x2=\"" << coord(wx)
            << "\" y2=\"" << coord(mid_y + kCapHeight / 2) << "\"/>";
      }
      out << "</g>\n";
    }
    out << "<text x=\"" << coord(kLeft + kPlotWidth + 8) << "\" y=\""
        << coord(mid_y + 4) << "\" font-size=\"11\">" << xml_escape(annotation)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

ChartSpec parse_chart_spec(std::string_view json_text) {
  using codec::Json;
  try {
    const Json j = Json::parse(json_text);
    ChartSpec spec;
    spec.factor = j.at("factor").get<std::string>();
    spec.metric = parse_metric_id(j.at("metric").get<std::string>());
    spec.mode = parse_chart_mode(j.value("mode", "delta"));
    for (const auto& b : j.at("bars")) {
      ChartBar bar;
      bar.label = b.at("label").get<std::string>();
      bar.n = b.value("n", std::uint64_t{0});
      bar.value = codec::decode_metric_value(b.at("value"));
      if (b.contains("ci")) bar.ci = codec::decode_interval(b.at("ci"));
      bar.suppressed = b.value("suppressed", false);
      spec.bars.push_back(std::move(bar));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("chart spec: ") + e.what());
  }
}

std::string serialize_chart_spec(const ChartSpec& spec) {
  using codec::Json;
  Json j;
  j["factor"] = spec.factor;
  j["metric"] = to_string(spec.metric);
  j["mode"] = to_string(spec.mode);
  j["bars"] = Json::array();
  for (const auto& bar : spec.bars) {
    Json b;
    b["label"] = bar.label;
    b["n"] = bar.n;
    b["value"] = codec::encode(bar.value);
    if (bar.ci) b["ci"] = codec::encode(*bar.ci);
    b["suppressed"] = bar.suppressed;
    j["bars"].push_back(std::move(b));
  }
  return j.dump(2) + "\n";
}

}  // namespace cardforge
