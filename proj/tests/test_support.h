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

#ifndef CARDFORGE_TESTS_TEST_SUPPORT_H_
#define CARDFORGE_TESTS_TEST_SUPPORT_H_

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cardforge/audit.h"
#include "cardforge/card.h"
#include "cardforge/cohort.h"
#include "cardforge/error.h"
#include "cardforge/io.h"
#include "cardforge/metrics.h"
#include "cardforge/rng.h"

namespace cardforge::testing {

inline std::filesystem::path source_dir() { return CARDFORGE_SOURCE_DIR; }
inline std::filesystem::path testdata_dir() { return source_dir() / "tests" / "testdata"; }
inline std::filesystem::path demo_dir() { return source_dir() / "data" / "demo"; }

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(CARDFORGE_BINARY_DIR) / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline PredictionRecord scored(std::string id, int y, double score,
                               std::map<std::string, std::string, std::less<>> factors = {}) {
  PredictionRecord r;
  r.id = std::move(id);
  r.y_true = y;
  r.y_score = score;
  r.factors = std::move(factors);
  return r;
}

inline PredictionRecord hard(std::string id, int y, int pred,
                             std::map<std::string, std::string, std::less<>> factors = {}) {
  PredictionRecord r;
  r.id = std::move(id);
  r.y_true = y;
  r.y_pred = pred;
  r.factors = std::move(factors);
  return r;
}

inline FactorDescriptor categorical(std::string name,
                                    FactorCategory category = FactorCategory::kInstrumental) {
  FactorDescriptor f;
  f.name = std::move(name);
  f.category = category;
  return f;
}

// Compares `actual` with tests/testdata/golden/<name>. With
// CARDFORGE_UPDATE_GOLDEN=1 the golden file is rewritten instead.
inline bool matches_golden(const std::string& name, const std::string& actual) {
  const auto path = testdata_dir() / "golden" / name;
  const char* update = std::getenv("CARDFORGE_UPDATE_GOLDEN");
  if (update != nullptr && *update != '\0' && std::string(update) != "0") {
    write_text_file(path, actual);
    return true;
  }
  if (!std::filesystem::exists(path)) return false;
  return read_text_file(path) == actual;
}

// Exact rational arithmetic for the metric oracles.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational of(std::int64_t n, std::int64_t d) {
    const std::int64_t g = std::gcd(n, d);
    return g == 0 ? Rational{0, 1} : Rational{n / g, d / g};
  }
  Rational operator*(const Rational& o) const { return of(num * o.num, den * o.den); }
  Rational operator+(const Rational& o) const {
    return of(num * o.den + o.num * den, den * o.den);
  }
  Rational operator/(const Rational& o) const { return of(num * o.den, den * o.num); }
  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

// Records with random labels and scores drawn from a small grid, so ties
// are common.
inline std::vector<PredictionRecord> random_records(Rng& rng, std::size_t n,
                                                    int score_levels = 8) {
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    const double score =
        static_cast<double>(rng.below(static_cast<std::uint64_t>(score_levels) + 1)) /
        score_levels;
    out.push_back(scored("r" + std::to_string(i), y, score));
  }
  return out;
}

// The bundled demo cohort, audited with a short bootstrap.
inline AuditResult demo_audit(std::uint32_t iterations = 400, std::uint64_t seed = 7) {
  const CohortTable cohort = prepare_for_audit(
      ingest_cohort(demo_dir() / "cohort.csv", demo_dir() / "manifest.json"));
  AuditConfig config;
  config.bootstrap.iterations = iterations;
  config.bootstrap.master_seed = seed;
  return run_audit(cohort, config);
}

inline CardMeta demo_meta() {
  return parse_card_meta(read_text_file(demo_dir() / "card_meta.json"));
}

}  // namespace cardforge::testing

#endif  // CARDFORGE_TESTS_TEST_SUPPORT_H_
