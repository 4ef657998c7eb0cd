// Copyright 2026 The vda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include <sys/wait.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vda/csv.hpp"
#include "vda/pipeline.hpp"
#include "vda/report.hpp"

using namespace vda;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;
};

// Runs the vda binary with stdout and stderr merged.
Run vda_run(const std::string& args) {
  const std::string cmd = std::string(VDA_BINARY) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Two utterance-condition pairs on disk plus a manifest naming them.
fs::path two_entry_manifest(const fs::path& dir, bool with_pesq) {
  for (int u = 0; u < 2; ++u) {
    const AudioSignal clean = pipeline::synth_utterance(std::uint64_t(10 + u), 1.0);
    write_wav(dir / fmt::format("c{}.wav", u), clean);
    write_wav(dir / fmt::format("d{}.wav", u),
              AudioSignal{test::add_white_noise(clean.samples, 10.0, std::uint64_t(u)), clean.rate});
  }
  std::string text = "utterance_id,clean_path,degraded_path,G,C,D";
  text += with_pesq ? ",pesq\n" : "\n";
  text += with_pesq ? "b,c1.wav,d1.wav,1,0,1,2.5\na,c0.wav,d0.wav,0,1,0,3.0\n"
                    : "b,c1.wav,d1.wav,1,0,1\na,c0.wav,d0.wav,0,1,0\n";
  const fs::path m = dir / (with_pesq ? "with_pesq.csv" : "manifest.csv");
  csv::write_text(m, text);
  return m;
}

metrics::MetricRow mrow(const std::string& id, int cell, double stoi) {
  metrics::MetricRow r;
  r.utterance_id = id;
  r.label = ConditionLabel::from_cell(cell);
  r.report.stoi = stoi;
  return r;
}

features::FeatureRow frow(const std::string& id, int cell) {
  features::FeatureRow r;
  r.utterance_id = id;
  r.label = ConditionLabel::from_cell(cell);
  r.error.e = Eigen::ArrayXd::Ones(features::kFeatureCount);
  return r;
}

}  // namespace

TEST_CASE("validate exit codes", "[cli][validate]") {
  test::TempDir dir("cli_validate");
  const fs::path m = two_entry_manifest(dir.path(), false);
  const Run ok = vda_run("validate --manifest " + q(m));
  CHECK(ok.status == 0);
  CHECK(ok.output.rfind("ok", 0) == 0);

  fs::remove(dir.path() / "d1.wav");
  const Run missing = vda_run("validate --manifest " + q(m));
  CHECK(missing.status == 2);
  CHECK(missing.output.find("d1.wav") != std::string::npos);

  csv::write_text(dir.path() / "bad.csv", "utterance_id,clean_path\nu,a.wav\n");
  CHECK(vda_run("validate --manifest " + q(dir.path() / "bad.csv")).status == 1);
  CHECK(vda_run("validate").status == 1);
  CHECK(vda_run("frobnicate").status == 1);
  CHECK(vda_run("--help").status == 0);
}

TEST_CASE("metrics writes one sorted row per entry, deterministically", "[cli][metrics]") {
  test::TempDir dir("cli_metrics");
  const fs::path m = two_entry_manifest(dir.path(), false);
  const fs::path out = dir.path() / "out";
  REQUIRE(vda_run("metrics --manifest " + q(m) + " --out " + q(out)).status == 0);
  const std::string first = csv::read_text(out / "metrics.csv");
  const auto rows = metrics::parse_metrics_csv(first);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].utterance_id == "a");
  CHECK(rows[1].utterance_id == "b");
  CHECK_FALSE(rows[0].report.composite.has_value());
  CHECK(rows[0].report.stoi.has_value());

  REQUIRE(vda_run("metrics --manifest " + q(m) + " --out " + q(out) + " --jobs 3").status == 0);
  CHECK(csv::read_text(out / "metrics.csv") == first);

  const fs::path mp = two_entry_manifest(dir.path(), true);
  REQUIRE(vda_run("metrics --manifest " + q(mp) + " --out " + q(out) + " --variant pesq").status == 0);
  const auto with = metrics::parse_metrics_csv(csv::read_text(out / "metrics_pesq.csv"));
  REQUIRE(with.size() == 2);
  REQUIRE(with[0].report.composite.has_value());
  CHECK(*with[0].report.pesq == 3.0);

  CHECK(vda_run("metrics --manifest " + q(m) + " --out " + q(out) + " --metrics bogus").status == 1);
}

TEST_CASE("metrics marks unreadable entries failed and exits with a data error", "[cli][metrics]") {
  test::TempDir dir("cli_fail");
  const fs::path m = two_entry_manifest(dir.path(), false);
  csv::write_text(dir.path() / "d0.wav", "garbage that is not a wave file");
  const Run r = vda_run("metrics --manifest " + q(m) + " --out " + q(dir.path()));
  CHECK(r.status == 2);
  const auto rows = metrics::parse_metrics_csv(csv::read_text(dir.path() / "metrics.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].failed);
  CHECK_FALSE(rows[1].failed);
}

TEST_CASE("downstream stages name the missing upstream file", "[cli][dependency]") {
  test::TempDir dir("cli_dep");
  const Run fit = vda_run("fit --out " + q(dir.path()));
  CHECK(fit.status == 2);
  CHECK(fit.output.find("features.csv") != std::string::npos);
  const Run rep = vda_run("report --out " + q(dir.path()));
  CHECK(rep.status == 2);
  CHECK(rep.output.find("metrics.csv") != std::string::npos);
}

TEST_CASE("small synthetic corpus through the whole pipeline", "[cli][e2e]") {
  test::TempDir dir("cli_e2e");
  const fs::path corpus = dir.path() / "corpus", out = dir.path() / "out";
  REQUIRE(vda_run("synth --seed 3 --utterances 3 --seconds 1.0 --out " + q(corpus)).status == 0);
  REQUIRE(vda_run("validate --manifest " + q(corpus / "manifest.csv")).status == 0);
  const std::string src = " --manifest " + q(corpus / "manifest.csv") + " --out " + q(out);
  REQUIRE(vda_run("metrics" + src).status == 0);
  REQUIRE(vda_run("metrics --variant enhanced --manifest " + q(corpus / "manifest_enhanced.csv") + " --out " + q(out))
              .status == 0);
  REQUIRE(vda_run("features" + src).status == 0);

  // 24 observations cannot support all 208 columns.
  CHECK(vda_run("fit --out " + q(out)).status == 3);
  const Run pesq = vda_run("fit --outcome pesq --features 0,1 --out " + q(out));
  CHECK(pesq.status == 2);
  CHECK(pesq.output.find("PESQ") != std::string::npos);

  const std::string sel = " --features 0,1 --out " + q(out);
  REQUIRE(vda_run("fit" + sel).status == 0);
  REQUIRE(vda_run("decompose" + sel).status == 0);
  REQUIRE(vda_run("report --out " + q(out)).status == 0);
  for (const char* name : {"fit_stoi.json", "regression_stoi.csv", "regression_stoi.md", "decomposition_stoi.csv",
                           "decomposition_stoi.json", "decomposition_stoi.md", "comparison.csv", "comparison.md",
                           "features.csv", "metrics.csv", "metrics_enhanced.csv"})
    CHECK(fs::exists(out / name));

  // Additivity re-checked on the emitted documents.
  const auto doc = nlohmann::json::parse(csv::read_text(out / "decomposition_stoi.json"));
  REQUIRE(doc["rows"].size() == 8);
  for (const auto& r : doc["rows"]) {
    const double e = r["endowment"], c = r["coefficient"], i = r["interaction"], all = r["collective"];
    CHECK(std::abs(all - (e + c + i)) <= 1e-12);
  }
  for (const auto& r : report::parse_decomposition_csv(csv::read_text(out / "decomposition_stoi.csv")))
    CHECK(std::abs(r.values.collective - (r.values.endowment + r.values.coefficient + r.values.interaction)) <= 0.002);

  const auto records = report::parse_regression_json(csv::read_text(out / "fit_stoi.json"));
  CHECK(records.size() == 208);

  // Idempotent reruns.
  const std::string before = csv::read_text(out / "decomposition_stoi.json");
  const std::string feats = csv::read_text(out / "features.csv");
  REQUIRE(vda_run("features" + src + " --jobs 2").status == 0);
  REQUIRE(vda_run("decompose" + sel).status == 0);
  CHECK(csv::read_text(out / "features.csv") == feats);
  CHECK(csv::read_text(out / "decomposition_stoi.json") == before);

  CHECK(vda_run("decompose --reference sideways" + sel).status == 1);
  REQUIRE(vda_run("decompose --reference stratum" + sel).status == 0);
  const auto strat = report::parse_decomposition_csv(csv::read_text(out / "decomposition_stoi.csv"));
  CHECK(strat[0].values.collective == 0.0);
}

TEST_CASE("join_observations pairs rows by utterance and condition", "[cli][join]") {
  const std::vector<features::FeatureRow> feats = {frow("a", 0), frow("a", 1), frow("b", 0)};
  const std::vector<metrics::MetricRow> mets = {mrow("b", 0, 0.5), mrow("a", 1, 0.7), mrow("a", 0, 0.9)};
  const auto rows = pipeline::join_observations(feats, mets);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].utterance_id == "a");
  CHECK(rows[0].y_stoi == 0.9);
  CHECK(rows[1].y_stoi == 0.7);
  CHECK(rows[2].y_stoi == 0.5);
  CHECK_FALSE(rows[0].y_pesq.has_value());

  auto failed_feat = feats;
  failed_feat[1].failed = true;
  CHECK(pipeline::join_observations(failed_feat, mets).size() == 2);
  auto failed_met = mets;
  failed_met[0].failed = true;
  failed_met[0].report = {};
  CHECK(pipeline::join_observations(feats, failed_met).size() == 2);

  CHECK_THROWS_AS(pipeline::join_observations(feats, {mets[0], mets[1]}), AlignmentError);
  CHECK_THROWS_AS(pipeline::join_observations({feats[0]}, mets), AlignmentError);
  auto no_stoi = mets;
  no_stoi[2].report.stoi.reset();
  CHECK_THROWS_AS(pipeline::join_observations(feats, no_stoi), DependencyError);
}

TEST_CASE("parallel_for visits every index once and rethrows", "[cli][parallel]") {
  std::vector<int> hits(100, 0);
  pipeline::parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(pipeline::parallel_for(10, 3,
                                         [](std::size_t i) {
                                           if (i == 6) throw ValueError("boom");
                                         }),
                  ValueError);
}
