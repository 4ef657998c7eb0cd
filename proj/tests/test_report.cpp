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

#include <cmath>

#include "support.hpp"
#include "vda/csv.hpp"
#include "vda/report.hpp"

using namespace vda;
using namespace vda::report;
using Catch::Approx;

namespace {

// Fit with every column dropped except those set by the caller.
model::RegressionFit empty_fit() {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  model::RegressionFit fit;
  fit.labels = model::column_labels();
  auto& o = fit.ols;
  o.theta = Eigen::VectorXd::Zero(model::kColumns);
  o.std_err = o.t_stat = o.p_value = Eigen::VectorXd::Constant(model::kColumns, nan);
  o.retained.assign(model::kColumns, false);
  o.residuals = Eigen::VectorXd::Zero(10);
  o.dof = 9;
  o.rank = 1;
  fit.observations = 10;
  return fit;
}

void set_column(model::RegressionFit& fit, Eigen::Index j, double theta, double p) {
  fit.ols.retained[std::size_t(j)] = true;
  fit.ols.theta[j] = theta;
  fit.ols.std_err[j] = 0.1;
  fit.ols.t_stat[j] = theta / 0.1;
  fit.ols.p_value[j] = p;
}

std::vector<model::ObservationRow> random_rows(std::uint64_t seed, int utterances) {
  test::Gen g(seed);
  std::vector<model::ObservationRow> rows;
  for (int u = 0; u < utterances; ++u)
    for (int cell = 0; cell < kConditionCells; ++cell) {
      model::ObservationRow r;
      r.utterance_id = "u" + std::to_string(u);
      r.label = ConditionLabel::from_cell(cell);
      for (int i = 1; i < features::kFeatureCount; ++i) r.error.e[i] = std::abs(g.normal());
      r.error.e[0] = 1.0;
      r.y_stoi = std::clamp(0.7 - 0.1 * r.error.e[1] + 0.05 * r.label.c + 0.05 * g.normal(), 0.0, 1.0);
      rows.push_back(r);
    }
  return rows;
}

metrics::MetricRow metric_row(int cell, double stoi, std::optional<double> pesq = {}) {
  metrics::MetricRow r;
  r.utterance_id = "u";
  r.label = ConditionLabel::from_cell(cell);
  r.report.stoi = stoi;
  r.report.pesq = pesq;
  return r;
}

}  // namespace

TEST_CASE("regression cell carries value and band", "[report][regression]") {
  auto fit = empty_fit();
  set_column(fit, model::column_index(0, 1), 1.23, 0.001);
  const csv::Table t = csv::parse(render_regression_table(fit, Format::kCsv));
  REQUIRE(t.rows.size() == 8);
  REQUIRE(t.header.size() == 27);
  CHECK(t.rows[1][0] == "G");
  CHECK(t.rows[1][1] == "1.23***");
  CHECK(t.rows[0][1] == "—");
  CHECK(t.rows[7][26] == "—");

  const std::string md = render_regression_table(fit, Format::kMarkdown);
  CHECK(md.find("| G | 1.23*** |") != std::string::npos);
}

TEST_CASE("band annotations follow the p-value", "[report][regression]") {
  auto fit = empty_fit();
  set_column(fit, 0, 0.5, 0.03);
  set_column(fit, 1, -0.254, 0.07);
  set_column(fit, 2, 0.004, 0.5);
  set_column(fit, 3, -0.001, 0.5);
  const csv::Table t = csv::parse(render_regression_table(fit, Format::kCsv));
  CHECK(t.rows[0][1] == "0.50**");
  CHECK(t.rows[0][2] == "-0.25*");
  CHECK(t.rows[0][3] == "0.00");
  CHECK(t.rows[0][4] == "0.00");
  CHECK(std::string(band_annotation(model::Band::kNone)).empty());
}

TEST_CASE("regression JSON round-trips the fit", "[report][regression]") {
  model::FeatureMask mask;
  for (int i : {0, 1, 2, 5}) mask.set(std::size_t(i));
  const auto fit = model::fit_model(random_rows(51, 10), model::Outcome::kStoi, mask);
  const auto records = parse_regression_json(render_regression_table(fit, Format::kJson));
  REQUIRE(records.size() == 208);
  int retained = 0;
  for (Eigen::Index j = 0; j < model::kColumns; ++j) {
    const auto& r = records[std::size_t(j)];
    CHECK(r.feature_index == fit.labels[std::size_t(j)].feature);
    CHECK(r.interaction == fit.labels[std::size_t(j)].interaction);
    CHECK(r.retained == fit.ols.is_retained(j));
    CHECK(r.theta == fit.ols.theta[j]);
    if (!r.retained) {
      CHECK_FALSE(r.std_err.has_value());
      CHECK(r.band == model::Band::kNone);
      continue;
    }
    ++retained;
    REQUIRE(r.p.has_value());
    CHECK(*r.p == fit.ols.p_value[j]);
    CHECK(*r.std_err == fit.ols.std_err[j]);
    CHECK(r.band == model::significance_band(fit.ols.p_value[j]));
  }
  CHECK(retained == fit.ols.rank);
  CHECK_THROWS_AS(parse_regression_json("{\"x\": 1}"), SchemaError);
  CHECK_THROWS_AS(parse_regression_json("not json"), SchemaError);
}

TEST_CASE("decomposition rows render at three decimals", "[report][decomposition]") {
  model::DecompositionTable table;
  for (int m = 0; m < model::kInteractions; ++m) table.rows[std::size_t(m)].indicator = m;
  table.rows[1] = {1, -0.364, 0.062, 0.050, -0.252};
  table.rows[2] = {2, -0.0000001, 0.0, 0.0, -0.0000001};

  const std::string text = render_decomposition_table(table, Format::kCsv);
  CHECK(text.find("G,1,0,0,-0.364,0.062,0.050,-0.252\n") != std::string::npos);
  CHECK(text.find("C,0,1,0,0.000,0.000,0.000,0.000\n") != std::string::npos);
  CHECK(text.find("G*C*D,1,1,1,0.000,0.000,0.000,0.000\n") != std::string::npos);

  const std::string md = render_decomposition_table(table, Format::kMarkdown);
  CHECK(md.find("| G | 1 | 0 | 0 | -0.364 | 0.062 | 0.050 | -0.252 |") != std::string::npos);
  CHECK(md.find("| G·C·D | 1 | 1 | 1 |") != std::string::npos);

  const auto back = parse_decomposition_csv(text);
  REQUIRE(back.size() == 8);
  CHECK(back[1].indicator == 1);
  CHECK(back[1].values.endowment == -0.364);
  CHECK(back[1].values.collective == -0.252);
}

TEST_CASE("decomposition CSV is lossless at three decimals", "[report][decomposition][property]") {
  test::Gen g(52);
  for (int trial = 0; trial < 30; ++trial) {
    model::DecompositionTable table;
    for (int m = 0; m < model::kInteractions; ++m) {
      auto& d = table.rows[std::size_t(m)];
      d.indicator = m;
      d.endowment = g.uniform(-4, 4);
      d.coefficient = g.uniform(-4, 4);
      d.interaction = g.uniform(-4, 4);
      d.collective = d.endowment + d.coefficient + d.interaction;
    }
    const auto back = parse_decomposition_csv(render_decomposition_table(table, Format::kCsv));
    REQUIRE(back.size() == 8);
    auto r3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
    for (int m = 0; m < model::kInteractions; ++m) {
      const auto& a = table.rows[std::size_t(m)];
      const auto& b = back[std::size_t(m)].values;
      CHECK(back[std::size_t(m)].indicator == m);
      CHECK(b.endowment == Approx(r3(a.endowment)).margin(1e-12));
      CHECK(b.coefficient == Approx(r3(a.coefficient)).margin(1e-12));
      CHECK(b.interaction == Approx(r3(a.interaction)).margin(1e-12));
      CHECK(b.collective == Approx(r3(a.collective)).margin(1e-12));
    }
  }
}

TEST_CASE("decomposition CSV without a label column uses indicator bits", "[report][decomposition]") {
  const auto rows = parse_decomposition_csv(
      "G,C,D,endowment,coefficient,interaction,collective\n"
      "0,0,0,-0.366,0.000,0.000,-0.366\n1,0,1,-0.1,0.2,0.3,0.4\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].indicator == 0);
  CHECK(rows[1].indicator == 5);
  CHECK_THROWS_AS(parse_decomposition_csv("G,C,D,endowment\n"), SchemaError);
}

TEST_CASE("comparison cells and delta formatting", "[report][comparison]") {
  const auto same = make_cell(0.92, 0.92);
  CHECK(format_delta(same.delta) == "+.00");
  CHECK(same.polarity == Polarity::kPositive);

  const auto up = make_cell(2.25, 2.27);
  CHECK(format_delta(up.delta) == "+.02");
  CHECK(up.polarity == Polarity::kPositive);

  const auto down = make_cell(1.98, 1.70);
  CHECK(format_delta(down.delta) == "-.28");
  CHECK(down.polarity == Polarity::kNegative);

  CHECK(format_delta(-0.001) == "-.00");
  CHECK(format_delta(0.999) == "+1.0");
  CHECK(format_delta(1.44) == "+1.4");
  CHECK(format_delta(-10.2) == "-10.");
  CHECK(format_delta(123.4) == "+123");
  CHECK(format_value(0.92) == "0.92");
  CHECK(format_value(12.34) == "12.3");
  CHECK(format_value(-0.001) == "0.00");
}

TEST_CASE("delta polarity matches the sign of the change", "[report][comparison][property]") {
  test::Gen g(53);
  for (int trial = 0; trial < 500; ++trial) {
    const double b = g.uniform(-5, 5), v = g.uniform(-5, 5);
    const auto c = make_cell(b, v);
    CHECK(c.delta == v - b);
    CHECK((c.polarity == Polarity::kPositive) == (v - b >= 0.0));
    CHECK((format_delta(c.delta).front() == '+') == (c.delta >= 0.0));
  }
}

TEST_CASE("aggregate averages per condition and skips failures", "[report][comparison]") {
  std::vector<metrics::MetricRow> rows = {metric_row(0, 0.8, 2.0), metric_row(0, 0.6), metric_row(3, 0.5)};
  rows.push_back(metric_row(3, 0.0));
  rows.back().failed = true;
  const Aggregate a = aggregate(rows);
  CHECK(a.at(0).at("stoi") == Approx(0.7));
  CHECK(a.at(0).at("pesq") == 2.0);
  CHECK(a.at(3).at("stoi") == 0.5);
  CHECK_FALSE(a.at(3).count("pesq"));
  CHECK_THROWS_AS(metric_value(metrics::MetricReport{}, "mos"), ValueError);
}

TEST_CASE("comparison table joins variants on condition keys", "[report][comparison]") {
  const Aggregate base = aggregate({metric_row(0, 0.92, 2.25), metric_row(7, 0.80)});
  const Aggregate enh = aggregate({metric_row(0, 0.92, 2.27), metric_row(7, 0.74)});
  const auto t = build_comparison(base, {{"enhanced", enh}});
  CHECK(t.cells == std::vector<int>{0, 7});
  CHECK(t.metrics == std::vector<std::string>{"pesq", "stoi"});
  const auto& cell = t.deltas.at("enhanced").at(7).at("stoi");
  CHECK(cell.polarity == Polarity::kNegative);
  CHECK(cell.delta == Approx(-0.06));

  const std::string md = render_comparison_table(t, Format::kMarkdown);
  CHECK(md.find("+.02 (+)") != std::string::npos);
  CHECK(md.find("-.06 (−)") != std::string::npos);
  const csv::Table c = csv::parse(render_comparison_table(t, Format::kCsv));
  CHECK(c.rows.size() == 3);
  CHECK(render_comparison_table(t, Format::kJson).find("\"polarity\": \"negative\"") != std::string::npos);

  const Aggregate partial = aggregate({metric_row(0, 0.9)});
  try {
    build_comparison(base, {{"enhanced", partial}});
    FAIL("expected an alignment error");
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find("G=1,C=1,D=1") != std::string::npos);
  }
}
