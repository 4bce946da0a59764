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

#ifndef CARDFORGE_SRC_JSON_CODEC_H_
#define CARDFORGE_SRC_JSON_CODEC_H_

// JSON encodings shared by card_json and chart specs. Decoders throw
// nlohmann::json exceptions or Error on malformed input; callers translate.

#include "cardforge/audit.h"
#include "cardforge/bootstrap.h"
#include "cardforge/cohort.h"
#include "cardforge/metrics.h"
#include "json.hpp"

namespace cardforge::codec {

using Json = nlohmann::ordered_json;

// Defined values are numbers; otherwise the strings "undefined" and
// "unavailable".
Json encode(MetricValue value);
MetricValue decode_metric_value(const Json& j);

// {"lo", "hi", "replicates_used", "replicates_dropped"}; an undefined
// interval has "lo" and "hi" set to "undefined".
Json encode(const Interval& interval);
Interval decode_interval(const Json& j);

Json encode(const MetricSet& metrics);
MetricSet decode_metric_set(const Json& j);

// Object keyed by metric name; absent entries are omitted.
Json encode(const PerMetric<std::optional<Interval>>& intervals);
PerMetric<std::optional<Interval>> decode_intervals(const Json& j);

Json encode_metric_list(const std::vector<MetricId>& metrics);
std::vector<MetricId> decode_metric_list(const Json& j);

Json encode(const BootstrapConfig& config);
BootstrapConfig decode_bootstrap(const Json& j);

Json encode(const AuditConfig& config);
AuditConfig decode_audit_config(const Json& j);

Json encode(const FactorDescriptor& factor);
FactorDescriptor decode_factor(const Json& j);

// Unlike parse_manifest, accepts derived factors.
Json encode(const Manifest& manifest);
Manifest decode_manifest(const Json& j);

Json encode(const AuditResult& audit);
AuditResult decode_audit(const Json& j);

}  // namespace cardforge::codec

#endif  // CARDFORGE_SRC_JSON_CODEC_H_
