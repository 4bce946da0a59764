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

#include "cardforge/synth.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/special_functions/beta.hpp>

#include "cardforge/error.h"
#include "cardforge/rng.h"
#include "json_codec.h"

namespace cardforge {
namespace {

using codec::Json;

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

std::string block_name(std::size_t i) { return "block " + std::to_string(i); }

std::string value_string(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return format_number(j.get<double>());
  throw Error(ErrorCode::kInvalidSpec, "factor value must be a string or number");
}

FactorAssignment decode_assignment(const Json& j) {
  if (!j.is_object()) return FactorAssignment::fixed(value_string(j));
  FactorAssignment out;
  for (const auto& [value, weight] : j.items()) {
    out.weights.emplace_back(value, weight.get<double>());
  }
  return out;
}

Json encode_assignment(const FactorAssignment& a) {
  if (a.is_fixed()) return a.weights.front().first;
  Json j = Json::object();
  for (const auto& [value, weight] : a.weights) j[value] = weight;
  return j;
}

const std::string& draw_value(Rng& rng, const FactorAssignment& a) {
  if (a.is_fixed()) return a.weights.front().first;
  double total = 0.0;
  for (const auto& w : a.weights) total += w.second;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (const auto& w : a.weights) {
    acc += w.second;
    if (u < acc) return w.first;
  }
  return a.weights.back().first;
}

std::string padded_id(std::uint64_t row) {
  std::string digits = std::to_string(row);
  if (digits.size() < 7) digits.insert(0, 7 - digits.size(), '0');
  return "r" + digits;
}

}  // namespace

double FactorAssignment::share(std::string_view value) const {
  double total = 0.0;
  double hit = 0.0;
  for (const auto& [v, w] : weights) {
    total += w;
    if (v == value) hit += w;
  }
  return total > 0.0 ? hit / total : 0.0;
}

const FactorAssignment* SynthBlock::assignment(std::string_view factor) const {
  for (const auto& [name, a] : factors) {
    if (name == factor) return &a;
  }
  return nullptr;
}

void validate(const SynthSpec& spec) {
  auto fail = [](const std::string& message) {
    throw Error(ErrorCode::kInvalidSpec, message);
  };
  if (spec.blocks.empty()) fail("spec has no blocks");
  if (spec.score_model.kind == ScoreModel::Kind::kBetaScores &&
      !(spec.score_model.concentration > 0.0 &&
        std::isfinite(spec.score_model.concentration))) {
    fail("beta_scores concentration must be positive");
  }
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const SynthBlock& b = spec.blocks[i];
    const std::string where = block_name(i);
    if (b.n < 1) fail(where + ": n must be at least 1");
    if (!(b.prevalence >= 0.0 && b.prevalence <= 1.0)) {
      fail(where + ": prevalence must lie in [0,1]");
    }
    if (!in_open_unit(b.sensitivity)) fail(where + ": sensitivity must lie in (0,1)");
    if (!in_open_unit(b.specificity)) fail(where + ": specificity must lie in (0,1)");
    std::set<std::string, std::less<>> seen;
    for (const auto& [name, a] : b.factors) {
      const FactorDescriptor* factor = spec.manifest.find(name);
      if (factor == nullptr) fail(where + ": factor '" + name + "' is not in the manifest");
      if (factor->kind == FactorKind::kFindingFlag) {
        fail(where + ": finding '" + name + "' belongs under findings");
      }
      if (!seen.insert(name).second) fail(where + ": factor '" + name + "' assigned twice");
      if (a.weights.empty()) fail(where + ": factor '" + name + "' has no values");
      for (const auto& [value, weight] : a.weights) {
        if (!(weight > 0.0) || !std::isfinite(weight)) {
          fail(where + ": weight of " + name + "=" + value + " must be positive");
        }
      }
    }
    for (const auto& factor : spec.manifest.factors) {
      if (factor.kind != FactorKind::kFindingFlag && !seen.contains(factor.name)) {
        fail(where + ": factor '" + factor.name + "' is not assigned");
      }
    }
    for (const auto& [name, p] : b.findings) {
      const FactorDescriptor* factor = spec.manifest.find(name);
      if (factor == nullptr || factor->kind != FactorKind::kFindingFlag) {
        fail(where + ": '" + name + "' is not a finding_flag factor");
      }
      if (!(p >= 0.0 && p <= 1.0)) fail(where + ": finding rate must lie in [0,1]");
    }
  }
}

SynthSpec parse_synth_spec(std::string_view json_text) {
  SynthSpec spec;
  try {
    const Json j = Json::parse(json_text);
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("score_model")) {
      const auto& m = j.at("score_model");
      const auto kind = m.at("kind").get<std::string>();
      if (kind == "hard_labels") {
        spec.score_model.kind = ScoreModel::Kind::kHardLabels;
      } else if (kind == "beta_scores") {
        spec.score_model.kind = ScoreModel::Kind::kBetaScores;
        spec.score_model.concentration = m.value("concentration", 10.0);
      } else {
        throw Error(ErrorCode::kInvalidSpec, "unknown score_model '" + kind + "'");
      }
    }
    spec.manifest = parse_manifest(j.at("manifest").dump());
    for (const auto& jb : j.at("blocks")) {
      SynthBlock b;
      if (jb.contains("factors")) {
        for (const auto& [name, value] : jb.at("factors").items()) {
          b.factors.emplace_back(name, decode_assignment(value));
        }
      }
      b.n = jb.at("n").get<std::uint64_t>();
      b.prevalence = jb.value("prevalence", 0.5);
      b.sensitivity = jb.at("sensitivity").get<double>();
      b.specificity = jb.at("specificity").get<double>();
      if (jb.contains("findings")) {
        for (const auto& [name, p] : jb.at("findings").items()) {
          b.findings.emplace_back(name, p.get<double>());
        }
      }
      spec.blocks.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("synth spec: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidSpec) throw;
    throw Error(ErrorCode::kInvalidSpec, e.what());
  }
  validate(spec);
  return spec;
}

std::string serialize_synth_spec(const SynthSpec& spec) {
  Json j;
  j["seed"] = spec.seed;
  if (spec.score_model.kind == ScoreModel::Kind::kHardLabels) {
    j["score_model"] = {{"kind", "hard_labels"}};
  } else {
    j["score_model"] = {{"kind", "beta_scores"},
                        {"concentration", spec.score_model.concentration}};
  }
  j["manifest"] = codec::encode(spec.manifest);
  j["blocks"] = Json::array();
  for (const auto& b : spec.blocks) {
    Json jb;
    jb["factors"] = Json::object();
    for (const auto& [name, a] : b.factors) jb["factors"][name] = encode_assignment(a);
    jb["n"] = b.n;
    jb["prevalence"] = b.prevalence;
    jb["sensitivity"] = b.sensitivity;
    jb["specificity"] = b.specificity;
    if (!b.findings.empty()) {
      jb["findings"] = Json::object();
      for (const auto& [name, p] : b.findings) jb["findings"][name] = p;
    }
    j["blocks"].push_back(std::move(jb));
  }
  return j.dump(2) + "\n";
}

double beta_mean_for_target(double target, double concentration) {
  // P(X >= 0.5) increases with the mean at fixed concentration.
  auto mass_above = [&](double mu) {
    return boost::math::ibetac(concentration * mu, concentration * (1.0 - mu), 0.5);
  };
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mass_above(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

CohortTable synth_cohort(const SynthSpec& spec) {
  validate(spec);
  const bool scores = spec.score_model.kind == ScoreModel::Kind::kBetaScores;
  const double c = spec.score_model.concentration;

  std::vector<const FactorDescriptor*> flags;
  for (const auto& factor : spec.manifest.factors) {
    if (factor.kind == FactorKind::kFindingFlag) flags.push_back(&factor);
  }

  std::vector<PredictionRecord> records;
  std::uint64_t total = 0;
  for (const auto& b : spec.blocks) total += b.n;
  records.reserve(total);

  std::uint64_t row = 0;
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const SynthBlock& b = spec.blocks[i];
    Rng rng(replicate_seed(spec.seed, "synth/block", i));
    double pos_a = 0, pos_b = 0, neg_a = 0, neg_b = 0;
    if (scores) {
      const double mu_pos = beta_mean_for_target(b.sensitivity, c);
      const double mu_neg = beta_mean_for_target(b.specificity, c);
      pos_a = c * mu_pos;
      pos_b = c * (1.0 - mu_pos);
      neg_a = c * mu_neg;
      neg_b = c * (1.0 - mu_neg);
    }
    for (std::uint64_t k = 0; k < b.n; ++k) {
      PredictionRecord r;
      r.id = padded_id(++row);
      r.y_true = rng.bernoulli(b.prevalence) ? 1 : 0;
      for (const auto& [name, a] : b.factors) {
        r.factors.emplace(name, draw_value(rng, a));
      }
      if (scores) {
        r.y_score = r.y_true == 1 ? rng.beta(pos_a, pos_b)
                                  : 1.0 - rng.beta(neg_a, neg_b);
      } else {
        const bool correct =
            rng.bernoulli(r.y_true == 1 ? b.sensitivity : b.specificity);
        r.y_pred = correct ? r.y_true : 1 - r.y_true;
      }
      for (const FactorDescriptor* flag : flags) {
        double p = 0.0;
        for (const auto& [name, rate] : b.findings) {
          if (name == flag->name) p = rate;
        }
        const bool set = r.y_true == 1 && p > 0.0 && rng.bernoulli(p);
        r.factors.emplace(flag->name, set ? "1" : "0");
      }
      records.push_back(std::move(r));
    }
  }
  return CohortTable(std::move(records), spec.manifest);
}

ExpectedCounts expected_counts(const SynthSpec& spec, std::string_view factor,
                               std::string_view value) {
  ExpectedCounts out;
  for (const auto& b : spec.blocks) {
    double share = 1.0;
    if (!factor.empty()) {
      const FactorAssignment* a = b.assignment(factor);
      share = a == nullptr ? 0.0 : a->share(value);
    }
    const double n = static_cast<double>(b.n) * share;
    const double pos = n * b.prevalence;
    const double neg = n - pos;
    out.tp += pos * b.sensitivity;
    out.fn += pos * (1.0 - b.sensitivity);
    out.tn += neg * b.specificity;
    out.fp += neg * (1.0 - b.specificity);
  }
  return out;
}

std::vector<PowerCell> power_scan(const SynthSpec& spec_template,
                                  std::span<const double> gaps,
                                  std::span<const std::uint64_t> sizes,
                                  std::uint32_t trials,
                                  const PowerScanConfig& config) {
  if (trials < 1) throw Error(ErrorCode::kInvalidConfig, "trials must be at least 1");
  if (config.metric != MetricId::kSensitivity &&
      config.metric != MetricId::kSpecificity) {
    throw Error(ErrorCode::kInvalidConfig,
                "power_scan injects sensitivity or specificity gaps only");
  }
  AuditConfig audit = config.audit;
  audit.metrics = {config.metric};
  validate(audit);

  std::vector<PowerCell> cells;
  for (double gap : gaps) {
    for (std::uint64_t size : sizes) {
      SynthSpec spec = spec_template;
      bool injected = false;
      for (auto& block : spec.blocks) {
        block.n = size;
        const FactorAssignment* a = block.assignment(config.factor);
        if (a != nullptr && a->is_fixed() && a->weights.front().first == config.value) {
          double& target = config.metric == MetricId::kSensitivity
                               ? block.sensitivity
                               : block.specificity;
          target -= gap;
          injected = true;
        }
      }
      if (!injected) {
        throw Error(ErrorCode::kInvalidSpec,
                    "no block is fixed to " + config.factor + "=" + config.value);
      }
      validate(spec);

      const std::string label =
          "power:" + format_number(gap) + ":" + std::to_string(size);
      PowerCell cell{gap, size, trials, 0};
      for (std::uint32_t t = 0; t < trials; ++t) {
        const std::uint64_t seed = replicate_seed(spec_template.seed, label, t);
        spec.seed = seed;
        audit.bootstrap.master_seed = seed;
        const CohortTable cohort = prepare_for_audit(synth_cohort(spec));
        const AuditResult result = run_audit(cohort, audit);
        const SubgroupReport* s = result.find(config.factor, config.value);
        if (s != nullptr && s->flagged[index(config.metric)]) ++cell.detections;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace cardforge
