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

#include <cmath>
#include <map>

#include <boost/math/distributions/beta.hpp>
#include <gtest/gtest.h>

#include "cardforge/error.h"
#include "test_support.h"

namespace cardforge {
namespace {

Manifest device_manifest() {
  Manifest m;
  m.provenance.dataset_name = "synthetic";
  m.factors.push_back(testing::categorical("device"));
  return m;
}

SynthBlock block(std::string device, std::uint64_t n, double sensitivity,
                 double specificity = 0.8, double prevalence = 0.5) {
  SynthBlock b;
  b.factors.push_back({"device", FactorAssignment::fixed(std::move(device))});
  b.n = n;
  b.prevalence = prevalence;
  b.sensitivity = sensitivity;
  b.specificity = specificity;
  return b;
}

SynthSpec two_device_spec(std::uint64_t n, double gap_sensitivity, std::uint64_t seed = 11) {
  SynthSpec spec;
  spec.seed = seed;
  spec.manifest = device_manifest();
  spec.blocks = {block("GE", n, gap_sensitivity), block("Varian", n, 0.76)};
  return spec;
}

TEST(SynthCohort, EmpiricalSensitivityMatchesTarget) {
  SynthSpec spec;
  spec.seed = 5;
  spec.manifest = device_manifest();
  spec.blocks = {block("Varian", 10'000, 0.76)};
  for (auto kind : {ScoreModel::Kind::kBetaScores, ScoreModel::Kind::kHardLabels}) {
    spec.score_model.kind = kind;
    const CohortTable cohort = synth_cohort(spec);
    ASSERT_EQ(cohort.size(), 10'000u);
    const MetricSet m = evaluate_records(cohort.records());
    EXPECT_NEAR(m.sensitivity.value(), 0.76, 0.02);
    EXPECT_NEAR(m.specificity.value(), 0.80, 0.02);
    EXPECT_NEAR(static_cast<double>(m.n_pos) / 10'000.0, 0.5, 0.02);
  }
}

TEST(SynthCohort, MixtureMatchesExpectedCounts) {
  SynthSpec spec = two_device_spec(20'000, 0.53);
  spec.blocks[1].prevalence = 0.3;
  const CohortTable cohort = synth_cohort(spec);
  const ExpectedCounts all = expected_counts(spec);
  EXPECT_DOUBLE_EQ(all.tp + all.fp + all.tn + all.fn, 40'000.0);
  EXPECT_NEAR(all.sensitivity(), (10'000 * 0.53 + 6'000 * 0.76) / 16'000.0, 1e-12);
  const MetricSet m = evaluate_records(cohort.records());
  EXPECT_NEAR(m.sensitivity.value(), all.sensitivity(), 0.015);
  EXPECT_NEAR(m.accuracy.value(), all.accuracy(), 0.015);

  const ExpectedCounts ge = expected_counts(spec, "device", "GE");
  EXPECT_NEAR(ge.sensitivity(), 0.53, 1e-12);
  EXPECT_NEAR(ge.tp + ge.fp + ge.tn + ge.fn, 20'000.0, 1e-9);
}

TEST(SynthCohort, WeightedFactorsAndIds) {
  SynthSpec spec = two_device_spec(4000, 0.6);
  spec.manifest.factors.push_back(testing::categorical("sex", FactorCategory::kSocioDemographic));
  for (auto& b : spec.blocks) b.factors.push_back({"sex", {{{"F", 0.25}, {"M", 0.75}}}});
  const CohortTable cohort = synth_cohort(spec);
  std::size_t female = 0;
  for (const auto& r : cohort.records()) female += r.factors.at("sex") == "F";
  EXPECT_NEAR(static_cast<double>(female) / 8000.0, 0.25, 0.02);
  EXPECT_EQ(cohort.records()[0].id, "r0000001");
  EXPECT_EQ(cohort.records()[7999].id, "r0008000");
  EXPECT_EQ(cohort.records()[4000].factors.at("device"), "Varian");
}

TEST(SynthCohort, DeterministicPerSeed) {
  const SynthSpec spec = two_device_spec(500, 0.53);
  EXPECT_EQ(serialize_cohort(synth_cohort(spec)), serialize_cohort(synth_cohort(spec)));
  SynthSpec other = spec;
  other.seed = 12;
  EXPECT_NE(serialize_cohort(synth_cohort(spec)), serialize_cohort(synth_cohort(other)));
}

TEST(SynthCohort, BlocksAreIndependentStreams) {
  // Growing a later block leaves earlier rows untouched.
  SynthSpec spec = two_device_spec(300, 0.53);
  const CohortTable a = synth_cohort(spec);
  spec.blocks[1].n = 900;
  const CohortTable b = synth_cohort(spec);
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(a.records()[i], b.records()[i]);
}

TEST(SynthSpec, RoundTripAndDemo) {
  const SynthSpec demo =
      parse_synth_spec(read_text_file(testing::demo_dir() / "synth_spec.json"));
  EXPECT_EQ(parse_synth_spec(serialize_synth_spec(demo)), demo);
  EXPECT_EQ(demo.blocks.size(), 4u);
  EXPECT_NEAR(demo.blocks[2].assignment("density")->share("C"), 0.4, 1e-12);
  EXPECT_EQ(demo.blocks[3].assignment("shoe"), nullptr);
}

TEST(SynthSpec, InvalidSpecs) {
  auto expect_invalid = [](const SynthSpec& spec, const std::string& why) {
    try {
      validate(spec);
      ADD_FAILURE() << why;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidSpec) << why;
    }
  };
  SynthSpec spec = two_device_spec(100, 0.5);
  EXPECT_NO_THROW(validate(spec));
  spec.blocks[0].sensitivity = 1.0;
  expect_invalid(spec, "target of 1");
  spec = two_device_spec(100, 0.5);
  spec.blocks[0].n = 0;
  expect_invalid(spec, "empty block");
  spec = two_device_spec(100, 0.5);
  spec.blocks[1].factors.clear();
  expect_invalid(spec, "unassigned factor");
  spec = two_device_spec(100, 0.5);
  spec.blocks[0].prevalence = 1.5;
  expect_invalid(spec, "prevalence");
  spec = two_device_spec(100, 0.5);
  spec.blocks[0].factors[0].second.weights = {{"GE", -1.0}, {"X", 2.0}};
  expect_invalid(spec, "negative weight");
  EXPECT_THROW(parse_synth_spec("{\"seed\": 1}"), Error);
}

TEST(BetaMean, HitsTheTargetMass) {
  for (double c : {2.0, 8.0, 10.0, 40.0}) {
    for (double target : {0.05, 0.3, 0.53, 0.76, 0.95}) {
      const double mu = beta_mean_for_target(target, c);
      const boost::math::beta_distribution<double> dist(c * mu, c * (1 - mu));
      EXPECT_NEAR(boost::math::cdf(boost::math::complement(dist, 0.5)), target, 1e-9)
          << c << " " << target;
    }
  }
  EXPECT_NEAR(beta_mean_for_target(0.5, 10.0), 0.5, 1e-9);
}

PowerScanConfig power_config(std::uint32_t iterations) {
  PowerScanConfig config;
  config.factor = "device";
  config.value = "GE";
  config.audit.bootstrap.iterations = iterations;
  return config;
}

TEST(PowerScan, TinyBlocksAreNeverDetected) {
  const SynthSpec spec = two_device_spec(1, 0.76);
  const std::vector<double> gaps{0.3};
  const std::vector<std::uint64_t> sizes{20};
  const auto cells = power_scan(spec, gaps, sizes, 5, power_config(200));
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].trials, 5u);
  EXPECT_EQ(cells[0].detections, 0u);  // suppressed below 30
}

TEST(PowerScan, MonotoneOnAThreeByThreeGrid) {
  const SynthSpec spec = two_device_spec(1, 0.76);
  const std::vector<double> gaps{0.0, 0.1, 0.25};
  const std::vector<std::uint64_t> sizes{60, 200, 600};
  const auto cells = power_scan(spec, gaps, sizes, 20, power_config(200));
  ASSERT_EQ(cells.size(), 9u);
  std::map<std::pair<double, std::uint64_t>, double> rate;
  for (const auto& c : cells) rate[{c.gap, c.block_n}] = c.rate();
  // Count decreases along either axis beyond Monte Carlo noise.
  int inversions = 0;
  for (std::size_t g = 0; g < gaps.size(); ++g) {
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      const double here = rate[{gaps[g], sizes[s]}];
      if (g + 1 < gaps.size() && rate[{gaps[g + 1], sizes[s]}] < here - 0.05) ++inversions;
      if (s + 1 < sizes.size() && rate[{gaps[g], sizes[s + 1]}] < here - 0.05) ++inversions;
    }
  }
  EXPECT_LE(inversions, 1);
  EXPECT_GE(rate.at({0.25, 600}), 0.9);
  EXPECT_LE(rate.at({0.0, 600}), 0.25);

  const auto again = power_scan(spec, gaps, sizes, 20, power_config(200));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(cells[i].detections, again[i].detections);
  }
}

}  // namespace
}  // namespace cardforge
