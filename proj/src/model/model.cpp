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

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <unsupported/Eigen/SpecialFunctions>

#include "vda/model.hpp"

namespace vda::model {
namespace {

const char* const kLabels[kInteractions] = {"1", "G", "C", "D", "G*C", "G*D", "C*D", "G*C*D"};
const char* const kDisplay[kInteractions] = {"1", "G", "C", "D", "G·C", "G·D", "C·D", "G·C·D"};

Eigen::VectorXd column_means(const DesignMatrix& dm) {
  return dm.x.colwise().mean().transpose();
}

}  // namespace

std::string interaction_label(int m) {
  if (m < 0 || m >= kInteractions) throw ValueError(fmt::format("interaction index {} out of range", m));
  return kLabels[m];
}

std::string interaction_display(int m) {
  if (m < 0 || m >= kInteractions) throw ValueError(fmt::format("interaction index {} out of range", m));
  return kDisplay[m];
}

int parse_interaction(std::string_view label) {
  std::string compact;
  for (std::size_t i = 0; i < label.size(); ++i) {
    const char ch = label[i];
    if (ch == 'G' || ch == 'C' || ch == 'D' || ch == '1') compact += ch;
  }
  for (int m = 0; m < kInteractions; ++m) {
    std::string want;
    for (char ch : std::string_view(kLabels[m]))
      if (ch != '*') want += ch;
    if (compact == want) return m;
  }
  throw ValueError(fmt::format("unknown interaction '{}'", label));
}

std::vector<ColumnLabel> column_labels() {
  std::vector<ColumnLabel> labels(static_cast<std::size_t>(kColumns));
  for (int m = 0; m < kInteractions; ++m)
    for (int i = 0; i < features::kFeatureCount; ++i) labels[std::size_t(column_index(i, m))] = {i, m};
  return labels;
}

const char* outcome_name(Outcome o) { return o == Outcome::kStoi ? "stoi" : "pesq"; }

Outcome parse_outcome(std::string_view s) {
  if (s == "stoi") return Outcome::kStoi;
  if (s == "pesq") return Outcome::kPesq;
  throw ConfigError(fmt::format("unknown outcome '{}' (expected stoi or pesq)", s));
}

double ObservationRow::outcome(Outcome o) const {
  if (o == Outcome::kStoi) return y_stoi;
  if (!y_pesq) throw DependencyError(fmt::format("no PESQ value for utterance '{}' ({})", utterance_id, label.str()));
  return *y_pesq;
}

DesignMatrix build_design_matrix(const std::vector<ObservationRow>& rows) {
  DesignMatrix dm;
  dm.x = Eigen::MatrixXd::Zero(Eigen::Index(rows.size()), kColumns);
  dm.labels = column_labels();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int m = 0; m < kInteractions; ++m) {
      const double v = interaction_value(m, rows[r].label);
      if (v == 0.0) continue;
      dm.x.row(Eigen::Index(r)).segment(column_index(0, m), features::kFeatureCount) =
          v * rows[r].error.e.matrix().transpose();
    }
  }
  return dm;
}

Eigen::VectorXd outcome_vector(const std::vector<ObservationRow>& rows, Outcome o) {
  Eigen::VectorXd y(Eigen::Index(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double v = rows[r].outcome(o);
    const bool ok = o == Outcome::kStoi ? (v >= -1.0 && v <= 1.0) : (v >= -0.5 && v <= 4.5);
    if (!std::isfinite(v) || !ok)
      throw ValueError(fmt::format("{} value {} for '{}' is out of range", outcome_name(o), v,
                                   rows[r].utterance_id));
    y[Eigen::Index(r)] = v;
  }
  return y;
}

FeatureMask parse_feature_mask(std::string_view list) {
  FeatureMask mask;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    const std::string_view tok = list.substr(pos, comma - pos);
    pos = comma + 1;
    if (tok.empty()) continue;
    if (tok == "all") return all_features();
    int v = -1;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || end != tok.data() + tok.size() || v < 0 || v >= features::kFeatureCount)
      throw ConfigError(fmt::format("invalid feature index '{}'", tok));
    mask.set(std::size_t(v));
  }
  if (mask.none()) throw ConfigError("feature selection is empty");
  return mask;
}

double t_pvalue(double t, double dof) {
  if (!(dof > 0.0)) throw PreconditionError("t_pvalue: dof must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  Eigen::ArrayXd a(1), b(1), x(1);
  a << 0.5 * dof;
  b << 0.5;
  x << dof / (dof + t * t);
  const double p = Eigen::betainc(a, b, x)(0);
  return std::clamp(p, 0.0, 1.0);
}

Band significance_band(double p) {
  if (std::isnan(p)) return Band::kNone;
  if (p <= 0.01) return Band::kStrong;
  if (p <= 0.05) return Band::kMedium;
  if (p <= 0.10) return Band::kWeak;
  return Band::kNone;
}

const char* band_name(Band b) {
  switch (b) {
    case Band::kStrong: return "strong";
    case Band::kMedium: return "medium";
    case Band::kWeak: return "weak";
    case Band::kNone: break;
  }
  return "none";
}

std::vector<bool> column_mask(const FeatureMask& features, unsigned interactions) {
  std::vector<bool> mask(std::size_t(kColumns), false);
  for (int m = 0; m < kInteractions; ++m) {
    if (!(interactions & (1u << m))) continue;
    for (int i = 0; i < features::kFeatureCount; ++i)
      mask[std::size_t(column_index(i, m))] = features.test(std::size_t(i));
  }
  return mask;
}

RegressionFit fit_model(const std::vector<ObservationRow>& rows, Outcome outcome,
                        const FeatureMask& features) {
  if (rows.empty()) throw PreconditionError("fit: no observations");
  const DesignMatrix dm = build_design_matrix(rows);
  const Eigen::VectorXd y = outcome_vector(rows, outcome);
  RegressionFit fit;
  fit.ols = ols(dm.x, y, column_mask(features));
  fit.labels = dm.labels;
  fit.outcome = outcome;
  fit.observations = dm.x.rows();
  return fit;
}

unsigned reduced_interactions(int indicator) {
  const int f = kInteractionFactors[std::size_t(indicator)];
  unsigned mask = 0;
  for (int m = 0; m < kInteractions; ++m)
    if ((kInteractionFactors[std::size_t(m)] & f) == 0) mask |= 1u << m;
  return mask;
}

OaxacaDecomposition oaxaca_decompose(const std::vector<ObservationRow>& rows, int indicator,
                                     Outcome outcome, const FeatureMask& features) {
  if (indicator <= 0 || indicator >= kInteractions)
    throw PreconditionError("oaxaca: indicator must be one of G, C, D, G*C, G*D, C*D, G*C*D");
  std::vector<ObservationRow> s0, s1;
  for (const auto& r : rows) (interaction_value(indicator, r.label) != 0.0 ? s1 : s0).push_back(r);
  const std::string name = interaction_label(indicator);
  if (s0.empty()) throw StratificationError(fmt::format("stratum {}=0 is empty", name));
  if (s1.empty()) throw StratificationError(fmt::format("stratum {}=1 is empty", name));

  const std::vector<bool> mask = column_mask(features, reduced_interactions(indicator));
  const DesignMatrix d0 = build_design_matrix(s0);
  const DesignMatrix d1 = build_design_matrix(s1);
  const auto f0 = ols(d0.x, outcome_vector(s0, outcome), mask);
  const auto f1 = ols(d1.x, outcome_vector(s1, outcome), mask);

  Eigen::VectorXd shared = Eigen::VectorXd::Zero(kColumns);
  for (Eigen::Index j = 0; j < kColumns; ++j)
    if (f0.is_retained(j) && f1.is_retained(j)) shared[j] = 1.0;
  const Eigen::VectorXd m0 = column_means(d0).cwiseProduct(shared);
  const Eigen::VectorXd m1 = column_means(d1).cwiseProduct(shared);
  auto out = three_fold(m0, f0.theta.cwiseProduct(shared), m1, f1.theta.cwiseProduct(shared));
  out.indicator = indicator;
  return out;
}

const char* reference_name(ReferenceMode r) {
  return r == ReferenceMode::kZeroError ? "zero-error" : "stratum";
}

ReferenceMode parse_reference(std::string_view s) {
  if (s == "zero-error") return ReferenceMode::kZeroError;
  if (s == "stratum") return ReferenceMode::kStratum;
  throw ConfigError(fmt::format("unknown reference '{}' (expected zero-error or stratum)", s));
}

DecompositionTable decomposition_table(const std::vector<ObservationRow>& rows, Outcome outcome,
                                       ReferenceMode reference, const FeatureMask& features) {
  std::array<int, kConditionCells> counts{};
  for (const auto& r : rows) ++counts[std::size_t(r.label.cell())];
  std::vector<std::string> empty;
  for (int c = 0; c < kConditionCells; ++c)
    if (counts[std::size_t(c)] == 0) empty.push_back(ConditionLabel::from_cell(c).str());
  if (!empty.empty()) {
    std::string msg = "decomposition: no observations for";
    for (const auto& e : empty) msg += " (" + e + ")";
    throw StratificationError(msg);
  }

  DecompositionTable table;
  table.outcome = outcome;
  table.reference = reference;
  table.rows[0].indicator = 0;
  if (reference == ReferenceMode::kZeroError) {
    // Mean prediction against a signal with zero acoustic error: only the
    // intercept column of each interaction survives.
    const auto fit = fit_model(rows, outcome, features);
    const DesignMatrix dm = build_design_matrix(rows);
    const Eigen::VectorXd means = column_means(dm);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(kColumns);
    for (int m = 0; m < kInteractions; ++m) zero[column_index(0, m)] = means[column_index(0, m)];
    table.rows[0] = three_fold(zero, fit.ols.theta, means, fit.ols.theta);
    table.rows[0].indicator = 0;
  }
  for (int m = 1; m < kInteractions; ++m) table.rows[std::size_t(m)] = oaxaca_decompose(rows, m, outcome, features);
  return table;
}

}  // namespace vda::model
