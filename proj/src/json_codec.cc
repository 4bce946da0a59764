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

#include "json_codec.h"

#include "cardforge/error.h"

namespace cardforge::codec {
namespace {

std::vector<std::string> strings_or_empty(const Json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

Json encode(MetricValue value) {
  switch (value.state()) {
    case MetricState::kDefined: return value.value();
    case MetricState::kUndefined: return "undefined";
    case MetricState::kUnavailable: return "unavailable";
  }
  return nullptr;
}

MetricValue decode_metric_value(const Json& j) {
  if (j.is_number()) return MetricValue::of(j.get<double>());
  const auto text = j.get<std::string>();
  if (text == "undefined") return MetricValue::undefined();
  if (text == "unavailable") return MetricValue::unavailable();
  throw Error(ErrorCode::kParseError, "bad metric value '" + text + "'");
}

Json encode(const Interval& interval) {
  Json j;
  if (interval.defined) {
    j["lo"] = interval.lo;
    j["hi"] = interval.hi;
  } else {
    j["lo"] = "undefined";
    j["hi"] = "undefined";
  }
  j["replicates_used"] = interval.replicates_used;
  j["replicates_dropped"] = interval.replicates_dropped;
  return j;
}

Interval decode_interval(const Json& j) {
  Interval interval;
  interval.defined = j.at("lo").is_number();
  if (interval.defined) {
    interval.lo = j.at("lo").get<double>();
    interval.hi = j.at("hi").get<double>();
    if (interval.lo > interval.hi) {
      throw Error(ErrorCode::kParseError, "interval with lo > hi");
    }
  }
  interval.replicates_used = j.value("replicates_used", 0u);
  interval.replicates_dropped = j.value("replicates_dropped", 0u);
  return interval;
}

Json encode(const MetricSet& metrics) {
  Json j;
  for (MetricId metric : kAllMetrics) {
    j[std::string(to_string(metric))] = encode(metrics.get(metric));
  }
  j["n"] = metrics.n;
  j["n_pos"] = metrics.n_pos;
  j["n_neg"] = metrics.n_neg;
  return j;
}

MetricSet decode_metric_set(const Json& j) {
  MetricSet m;
  m.accuracy = decode_metric_value(j.at("accuracy"));
  m.sensitivity = decode_metric_value(j.at("sensitivity"));
  m.specificity = decode_metric_value(j.at("specificity"));
  m.ppv = decode_metric_value(j.at("ppv"));
  m.npv = decode_metric_value(j.at("npv"));
  m.f1 = decode_metric_value(j.at("f1"));
  m.auc = decode_metric_value(j.at("auc"));
  m.n = j.at("n").get<std::uint64_t>();
  m.n_pos = j.at("n_pos").get<std::uint64_t>();
  m.n_neg = j.at("n_neg").get<std::uint64_t>();
  return m;
}

Json encode(const PerMetric<std::optional<Interval>>& intervals) {
  Json j = Json::object();
  for (MetricId metric : kAllMetrics) {
    if (const auto& ci = intervals[index(metric)]) {
      j[std::string(to_string(metric))] = encode(*ci);
    }
  }
  return j;
}

PerMetric<std::optional<Interval>> decode_intervals(const Json& j) {
  PerMetric<std::optional<Interval>> out{};
  for (const auto& [key, value] : j.items()) {
    out[index(parse_metric_id(key))] = decode_interval(value);
  }
  return out;
}

Json encode_metric_list(const std::vector<MetricId>& metrics) {
  Json j = Json::array();
  for (MetricId metric : metrics) j.push_back(to_string(metric));
  return j;
}

std::vector<MetricId> decode_metric_list(const Json& j) {
  std::vector<MetricId> metrics;
  for (const auto& name : j) metrics.push_back(parse_metric_id(name.get<std::string>()));
  return metrics;
}

Json encode(const BootstrapConfig& config) {
  Json j;
  j["iterations"] = config.iterations;
  j["ci_level"] = config.ci_level;
  j["master_seed"] = config.master_seed;
  j["degenerate_policy"] = to_string(config.degenerate_policy);
  j["rng"] = "splitmix64";
  return j;
}

BootstrapConfig decode_bootstrap(const Json& j) {
  BootstrapConfig config;
  config.iterations = j.at("iterations").get<std::uint32_t>();
  config.ci_level = j.at("ci_level").get<double>();
  config.master_seed = j.at("master_seed").get<std::uint64_t>();
  config.degenerate_policy =
      parse_degenerate_policy(j.at("degenerate_policy").get<std::string>());
  return config;
}

Json encode(const AuditConfig& config) {
  Json j;
  j["threshold"] = config.threshold;
  j["min_subgroup_n"] = config.min_subgroup_n;
  j["metrics"] = encode_metric_list(config.metrics);
  j["bootstrap"] = encode(config.bootstrap);
  j["flag_policy"] = to_string(config.flag_policy);
  j["flag_unknown"] = config.flag_unknown;
  j["pathology_factors"] = config.pathology_factors;
  j["slice_thresholds"] = Json::object();
  for (const auto& [name, threshold] : config.slice_thresholds) {
    j["slice_thresholds"][name] = threshold;
  }
  return j;
}

AuditConfig decode_audit_config(const Json& j) {
  AuditConfig config;
  config.threshold = j.at("threshold").get<double>();
  config.min_subgroup_n = j.at("min_subgroup_n").get<std::uint32_t>();
  config.metrics = decode_metric_list(j.at("metrics"));
  config.bootstrap = decode_bootstrap(j.at("bootstrap"));
  config.flag_policy = parse_flag_policy(j.at("flag_policy").get<std::string>());
  config.flag_unknown = j.value("flag_unknown", false);
  config.pathology_factors = strings_or_empty(j, "pathology_factors");
  if (j.contains("slice_thresholds")) {
    for (const auto& [name, threshold] : j.at("slice_thresholds").items()) {
      config.slice_thresholds[name] = threshold.get<double>();
    }
  }
  return config;
}

Json encode(const FactorDescriptor& factor) {
  Json j;
  j["name"] = factor.name;
  j["category"] = to_string(factor.category);
  j["kind"] = to_string(factor.kind);
  if (!factor.bin_edges.empty()) j["bin_edges"] = factor.bin_edges;
  if (!factor.value_order.empty()) j["value_order"] = factor.value_order;
  return j;
}

FactorDescriptor decode_factor(const Json& j) {
  FactorDescriptor factor;
  factor.name = j.at("name").get<std::string>();
  factor.category = parse_factor_category(j.at("category").get<std::string>());
  factor.kind = parse_factor_kind(j.value("kind", "categorical"));
  if (j.contains("bin_edges")) {
    factor.bin_edges = j.at("bin_edges").get<std::vector<double>>();
  }
  factor.value_order = strings_or_empty(j, "value_order");
  return factor;
}

Json encode(const Manifest& manifest) {
  Json j;
  j["provenance"] = {
      {"dataset_name", manifest.provenance.dataset_name},
      {"dataset_version", manifest.provenance.dataset_version},
      {"date_range", manifest.provenance.date_range},
      {"description", manifest.provenance.description},
  };
  j["factors"] = Json::array();
  for (const auto& factor : manifest.factors) j["factors"].push_back(encode(factor));
  if (!manifest.finding_count_from.empty()) {
    j["finding_count_from"] = manifest.finding_count_from;
  }
  return j;
}

Manifest decode_manifest(const Json& j) {
  Manifest manifest;
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    manifest.provenance.dataset_name = p.value("dataset_name", "");
    manifest.provenance.dataset_version = p.value("dataset_version", "");
    manifest.provenance.date_range = p.value("date_range", "");
    manifest.provenance.description = p.value("description", "");
  }
  if (j.contains("factors")) {
    for (const auto& factor : j.at("factors")) {
      manifest.factors.push_back(decode_factor(factor));
    }
  }
  manifest.finding_count_from = strings_or_empty(j, "finding_count_from");
  return manifest;
}

Json encode(const AuditResult& audit) {
  Json j;
  j["overall"] = encode(audit.overall);
  j["overall_ci"] = encode(audit.overall_ci);
  j["factors"] = Json::array();
  for (const auto& factor : audit.factors) {
    Json f;
    f["factor"] = encode(factor.factor);
    f["subgroups"] = Json::array();
    for (const auto& subgroup : factor.subgroups) {
      Json s;
      s["value"] = subgroup.value;
      s["n"] = subgroup.n;
      s["suppressed"] = subgroup.suppressed;
      s["metrics"] = encode(subgroup.metrics);
      s["delta"] = Json::object();
      for (MetricId metric : kAllMetrics) {
        s["delta"][std::string(to_string(metric))] =
            encode(subgroup.delta[index(metric)]);
      }
      s["subgroup_ci"] = encode(subgroup.subgroup_ci);
      s["delta_ci"] = encode(subgroup.delta_ci);
      s["flagged"] = Json::array();
      for (MetricId metric : kAllMetrics) {
        if (subgroup.flagged[index(metric)]) {
          s["flagged"].push_back(to_string(metric));
        }
      }
      f["subgroups"].push_back(std::move(s));
    }
    j["factors"].push_back(std::move(f));
  }
  j["pathology_slices"] = Json::array();
  for (const auto& slice : audit.pathology_slices) {
    Json s;
    s["finding"] = slice.finding;
    s["threshold"] = slice.threshold;
    s["n"] = slice.n;
    s["excluded_normals"] = slice.excluded_normals;
    s["sensitivity"] = encode(slice.sensitivity);
    if (slice.ci) s["ci"] = encode(*slice.ci);
    j["pathology_slices"].push_back(std::move(s));
  }
  j["config"] = encode(audit.config);
  j["manifest"] = encode(audit.manifest);
  j["warnings"] = audit.warnings;
  return j;
}

AuditResult decode_audit(const Json& j) {
  AuditResult audit;
  audit.overall = decode_metric_set(j.at("overall"));
  audit.overall_ci = decode_intervals(j.at("overall_ci"));
  for (const auto& f : j.at("factors")) {
    FactorReport factor;
    factor.factor = decode_factor(f.at("factor"));
    for (const auto& s : f.at("subgroups")) {
      SubgroupReport subgroup;
      subgroup.factor = factor.factor.name;
      subgroup.value = s.at("value").get<std::string>();
      subgroup.n = s.at("n").get<std::uint64_t>();
      subgroup.suppressed = s.at("suppressed").get<bool>();
      subgroup.metrics = decode_metric_set(s.at("metrics"));
      for (const auto& [key, value] : s.at("delta").items()) {
        subgroup.delta[index(parse_metric_id(key))] = decode_metric_value(value);
      }
      subgroup.subgroup_ci = decode_intervals(s.at("subgroup_ci"));
      subgroup.delta_ci = decode_intervals(s.at("delta_ci"));
      for (const auto& name : s.at("flagged")) {
        subgroup.flagged[index(parse_metric_id(name.get<std::string>()))] = true;
      }
      factor.subgroups.push_back(std::move(subgroup));
    }
    audit.factors.push_back(std::move(factor));
  }
  for (const auto& s : j.at("pathology_slices")) {
    PathologySlice slice;
    slice.finding = s.at("finding").get<std::string>();
    slice.threshold = s.at("threshold").get<double>();
    slice.n = s.at("n").get<std::uint64_t>();
    slice.excluded_normals = s.at("excluded_normals").get<std::uint64_t>();
    slice.sensitivity = decode_metric_value(s.at("sensitivity"));
    if (s.contains("ci")) slice.ci = decode_interval(s.at("ci"));
    audit.pathology_slices.push_back(std::move(slice));
  }
  audit.config = decode_audit_config(j.at("config"));
  audit.manifest = decode_manifest(j.at("manifest"));
  audit.warnings = strings_or_empty(j, "warnings");
  return audit;
}

}  // namespace cardforge::codec
