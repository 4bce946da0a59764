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

#include "cardforge/cohort.h"

#include <gtest/gtest.h>

#include "cardforge/error.h"
#include "cardforge/io.h"
#include "test_support.h"

namespace cardforge {
namespace {

using testing::scratch_dir;

constexpr std::string_view kDeviceManifest = R"({
  "provenance": {"dataset_name": "tiny", "dataset_version": "1",
                 "date_range": "2020", "description": "four rows"},
  "factors": [{"name": "device", "category": "instrumental", "kind": "categorical"}]
})";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIoError;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(IngestCohort, FourRowFile) {
  const auto dir = scratch_dir("ingest_four");
  write_text_file(dir / "t.csv",
                  "id,y_true,y_score,device\n"
                  "a,1,0.9,GE\nb,0,0.2,GE\nc,1,0.4,Varian\nd,0,0.6,Varian\n");
  write_text_file(dir / "m.json", kDeviceManifest);
  const CohortTable cohort = ingest_cohort(dir / "t.csv", dir / "m.json");
  ASSERT_EQ(cohort.size(), 4u);
  EXPECT_EQ(cohort.manifest().factors.size(), 1u);
  EXPECT_EQ(cohort.records()[2].id, "c");
  EXPECT_EQ(cohort.records()[2].factor("device"), "Varian");
  EXPECT_DOUBLE_EQ(*cohort.records()[0].y_score, 0.9);
  EXPECT_EQ(cohort.provenance().dataset_name, "tiny");
}

TEST(IngestCohort, ScoreAboveOneNamesTheRow) {
  const Manifest m = parse_manifest(kDeviceManifest);
  const auto fn = [&] { parse_cohort("y_true,y_score,device\n1,0.5,A\n0,1.2,A\n", m); };
  EXPECT_EQ(code_of(fn), ErrorCode::kValueOutOfRange);
  EXPECT_NE(message_of(fn).find("row 2"), std::string::npos) << message_of(fn);
}

TEST(IngestCohort, BlankCellBecomesUnknown) {
  Manifest m;
  m.factors.push_back(testing::categorical("race", FactorCategory::kSocioDemographic));
  const CohortTable c = parse_cohort("y_true,y_score,race\n1,0.5,\n0,0.1,B\n", m);
  EXPECT_EQ(c.records()[0].factors.at("race"), "unknown");
  EXPECT_EQ(c.records()[1].factors.at("race"), "B");
}

TEST(IngestCohort, AutoIdsAreRowNumbers) {
  const CohortTable c =
      parse_cohort("y_true,y_pred\n1,1\n0,0\n1,0\n", Manifest{});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.records()[0].id, "1");
  EXPECT_EQ(c.records()[2].id, "3");
  EXPECT_EQ(*c.records()[2].y_pred, 0);
}

TEST(IngestCohort, Errors) {
  const Manifest m = parse_manifest(kDeviceManifest);
  EXPECT_EQ(code_of([&] { parse_cohort("id,y_score,device\na,0.5,A\n", m); }),
            ErrorCode::kMissingColumn);
  EXPECT_EQ(code_of([&] { parse_cohort("id,y_true,device\na,1,A\n", m); }),
            ErrorCode::kMissingColumn);
  EXPECT_EQ(code_of([&] { parse_cohort("id,y_true,y_score,device\na,1,0.5,A\na,0,0.5,A\n", m); }),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(code_of([&] { parse_cohort("id,y_true,y_score\na,1,0.5\n", m); }),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of([&] { parse_cohort("id,y_true,y_score,device\na,1,-0.1,A\n", m); }),
            ErrorCode::kValueOutOfRange);
}

TEST(IngestCohort, UnparseableLabelsListEveryRow) {
  const Manifest m = parse_manifest(kDeviceManifest);
  const auto fn = [&] {
    parse_cohort("y_true,y_score,device\nyes,0.5,A\n1,0.5,A\n2,0.5,A\n", m);
  };
  EXPECT_EQ(code_of(fn), ErrorCode::kInvalidLabel);
  EXPECT_NE(message_of(fn).find("1, 3"), std::string::npos) << message_of(fn);
}

TEST(IngestCohort, ExtraColumnAndBothKindsWarn) {
  const CohortTable c =
      parse_cohort("y_true,y_score,y_pred,site\n1,0.9,1,x\n", Manifest{});
  ASSERT_EQ(c.warnings().size(), 2u);
  EXPECT_NE(c.warnings()[0].find("site"), std::string::npos);
  EXPECT_NE(c.warnings()[1].find("both"), std::string::npos);
}

TEST(IngestCohort, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { ingest_cohort("/nonexistent/t.csv", "/nonexistent/m.json"); }),
            ErrorCode::kIoError);
}

TEST(IngestCohort, RoundTripsThroughSerialization) {
  Manifest m;
  m.factors.push_back(testing::categorical("device"));
  m.factors.push_back(testing::categorical("note", FactorCategory::kDataSource));
  Rng rng(11);
  std::string csv = "id,y_true,y_score,device,note\n";
  for (int i = 0; i < 300; ++i) {
    csv += "p" + std::to_string(i) + "," + std::to_string(rng.below(2)) + "," +
           format_number(rng.uniform()) + "," + (rng.bernoulli(0.1) ? "" : "D" + std::to_string(rng.below(3))) +
           ",\"a, \"\"quoted\"\" note\"\n";
  }
  const CohortTable first = parse_cohort(csv, m);
  const CohortTable second = parse_cohort(serialize_cohort(first), m);
  EXPECT_EQ(first, second);
}

TEST(Manifest, Validation) {
  auto load = [](const std::string& factors) {
    return [factors] { parse_manifest(R"({"factors": [)" + factors + "]}"); };
  };
  EXPECT_EQ(code_of(load(R"({"name": "derived_x", "category": "anatomic", "kind": "categorical"})")),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of(load(R"({"name": "a", "category": "anatomic", "kind": "categorical"},
                           {"name": "a", "category": "anatomic", "kind": "categorical"})")),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of(load(R"({"name": "age", "category": "socio_demographic",
                            "kind": "numeric_binned", "bin_edges": []})")),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of(load(R"({"name": "age", "category": "socio_demographic",
                            "kind": "numeric_binned", "bin_edges": [40, 40]})")),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of(load(R"({"name": "a", "category": "economic", "kind": "categorical"})")),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of([] { parse_manifest("{not json"); }), ErrorCode::kInvalidManifest);
}

TEST(Manifest, RoundTrip) {
  const Manifest m = parse_manifest(read_text_file(testing::demo_dir() / "manifest.json"));
  EXPECT_EQ(parse_manifest(serialize_manifest(m)), m);
  EXPECT_EQ(m.finding_count_from.size(), 2u);
}

class BinsTest : public ::testing::Test {
 protected:
  BinsTest() {
    age_.name = "age";
    age_.category = FactorCategory::kSocioDemographic;
    age_.kind = FactorKind::kNumericBinned;
    age_.bin_edges = {40, 65};
    manifest_.factors.push_back(age_);
  }

  CohortTable cohort(const std::vector<std::string>& ages) {
    std::string csv = "y_true,y_score,age\n";
    for (const auto& a : ages) csv += "1,0.5," + a + "\n";
    return parse_cohort(csv, manifest_);
  }

  FactorDescriptor age_;
  Manifest manifest_;
};

TEST_F(BinsTest, LabelsFollowTheEdges) {
  const CohortTable binned = apply_bins(cohort({"35", "50", "70"}), age_);
  EXPECT_EQ(binned.records()[0].factor("age"), "<40");
  EXPECT_EQ(binned.records()[1].factor("age"), "[40,65)");
  EXPECT_EQ(binned.records()[2].factor("age"), "≥65");
  EXPECT_EQ(binned.manifest().find("age")->value_order,
            (std::vector<std::string>{"<40", "[40,65)", "≥65"}));
}

TEST_F(BinsTest, LeftClosedBoundary) {
  const CohortTable binned = apply_bins(cohort({"40", "65", "39.999"}), age_);
  EXPECT_EQ(binned.records()[0].factor("age"), "[40,65)");
  EXPECT_EQ(binned.records()[1].factor("age"), "≥65");
  EXPECT_EQ(binned.records()[2].factor("age"), "<40");
}

TEST_F(BinsTest, UnknownAndNonNumeric) {
  const CohortTable raw = cohort({"", "old", "12"});
  const CohortTable binned = apply_bins(raw, age_);
  EXPECT_EQ(binned.records()[0].factor("age"), "unknown");
  EXPECT_EQ(binned.records()[1].factor("age"), "unknown");
  EXPECT_EQ(binned.records()[2].factor("age"), "<40");
  EXPECT_EQ(code_of([&] { apply_bins(raw, age_, /*strict=*/true); }),
            ErrorCode::kNonNumericColumn);
  // A blank cell is missing data, not a non-numeric value.
  EXPECT_NO_THROW(apply_bins(cohort({"", "50"}), age_, true));
}

TEST_F(BinsTest, SecondApplicationIsAnError) {
  const CohortTable binned = apply_bins(cohort({"35"}), age_);
  EXPECT_EQ(code_of([&] { apply_bins(binned, age_); }), ErrorCode::kAlreadyBinned);
  // apply_all_bins skips factors that are already binned.
  EXPECT_EQ(apply_all_bins(binned), binned);
}

TEST(BinLabels, Generic) {
  const std::vector<double> edges{0.5, 1, 2.25};
  EXPECT_EQ(bin_labels(edges),
            (std::vector<std::string>{"<0.5", "[0.5,1)", "[1,2.25)", "≥2.25"}));
  EXPECT_EQ(bin_label(2.25, edges), "≥2.25");
  EXPECT_EQ(bin_label(-3, edges), "<0.5");
}

class FindingCountTest : public ::testing::Test {
 protected:
  FindingCountTest() {
    for (const char* name : {"mass", "calc", "ad"}) {
      FactorDescriptor f;
      f.name = name;
      f.category = FactorCategory::kDiseaseDependent;
      f.kind = FactorKind::kFindingFlag;
      manifest_.factors.push_back(f);
    }
  }
  Manifest manifest_;
};

TEST_F(FindingCountTest, CountsSaturateAndPropagateUnknown) {
  const CohortTable c = parse_cohort(
      "id,y_true,y_score,mass,calc,ad\n"
      "a,1,0.9,1,0,0\nb,1,0.9,1,1,1\nc,1,0.9,,0,0\nd,0,0.1,0,0,0\n",
      manifest_);
  const std::vector<std::string> cols{"mass", "calc", "ad"};
  const CohortTable d = derive_finding_count_factor(c, cols);
  EXPECT_EQ(d.records()[0].factor("derived_finding_count"), "1");
  EXPECT_EQ(d.records()[1].factor("derived_finding_count"), "2+");
  EXPECT_EQ(d.records()[2].factor("derived_finding_count"), "unknown");
  EXPECT_EQ(d.records()[3].factor("derived_finding_count"), "0");
  const FactorDescriptor* f = d.manifest().find(kFindingCountFactor);
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->category, FactorCategory::kDiseaseDependent);
}

TEST_F(FindingCountTest, Errors) {
  const CohortTable c = parse_cohort("y_true,y_score,mass,calc,ad\n1,0.9,1,0,0\n", manifest_);
  const std::vector<std::string> missing{"mass", "effusion"};
  EXPECT_EQ(code_of([&] { derive_finding_count_factor(c, missing); }),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of([&] { parse_cohort("y_true,y_score,mass,calc,ad\n1,0.9,2,0,0\n", manifest_); }),
            ErrorCode::kValueOutOfRange);
}

TEST(CohortTable, ConstructorValidates) {
  Manifest m;
  EXPECT_EQ(code_of([&] {
              CohortTable({testing::scored("a", 1, 0.5, {{"site", "x"}})}, m);
            }),
            ErrorCode::kManifestMismatch);
  EXPECT_EQ(code_of([&] {
              PredictionRecord r;
              r.id = "a";
              r.y_true = 1;
              CohortTable({r}, m);
            }),
            ErrorCode::kMissingColumn);
}

TEST(Csv, QuotingAndBom) {
  const auto rows = parse_csv("\xEF\xBB\xBF" "a,b\n\"x,1\",\"he said \"\"hi\"\"\"\n\n3,4\r\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "a");
  EXPECT_EQ(rows[1][0], "x,1");
  EXPECT_EQ(rows[1][1], "he said \"hi\"");
  EXPECT_EQ(rows[2][1], "4");
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
}

}  // namespace
}  // namespace cardforge
