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

#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vda/csv.hpp"
#include "vda/error.hpp"
#include "vda/report.hpp"

namespace vda::report {
namespace {

using Json = nlohmann::ordered_json;
constexpr const char* kDropped = "—";

// Fixed-point text without a negative sign on zero.
std::string fixed(double v, int decimals) {
  std::string s = fmt::format("{:.{}f}", v, decimals);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

Json optional_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string markdown_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  return out + "\n";
}

std::string markdown_rule(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i) out += "---|";
  return out + "\n";
}

std::array<int, 3> indicator_bits(int m) {
  const int f = model::kInteractionFactors[std::size_t(m)];
  return {(f & 1) ? 1 : 0, (f & 2) ? 1 : 0, (f & 4) ? 1 : 0};
}

std::string regression_cell(const model::RegressionFit& fit, Eigen::Index j) {
  if (!fit.ols.is_retained(j)) return kDropped;
  return fixed(fit.ols.theta[j], 2) + band_annotation(model::significance_band(fit.ols.p_value[j]));
}

struct MetricName {
  const char* label;
  std::optional<double> (*get)(const metrics::MetricReport&);
};

const MetricName kMetricNames[] = {
    {"composite_0", [](const metrics::MetricReport& r) { return r.composite ? std::optional(r.composite->csig) : std::nullopt; }},
    {"composite_1", [](const metrics::MetricReport& r) { return r.composite ? std::optional(r.composite->cbak) : std::nullopt; }},
    {"composite_2", [](const metrics::MetricReport& r) { return r.composite ? std::optional(r.composite->covl) : std::nullopt; }},
    {"csii_0", [](const metrics::MetricReport& r) { return r.csii ? r.csii->high : std::nullopt; }},
    {"csii_1", [](const metrics::MetricReport& r) { return r.csii ? r.csii->mid : std::nullopt; }},
    {"csii_2", [](const metrics::MetricReport& r) { return r.csii ? r.csii->low : std::nullopt; }},
    {"fwSNRseg", [](const metrics::MetricReport& r) { return r.fw_snr_seg; }},
    {"llr", [](const metrics::MetricReport& r) { return r.llr; }},
    {"ncm", [](const metrics::MetricReport& r) { return r.ncm; }},
    {"pesq", [](const metrics::MetricReport& r) { return r.pesq; }},
    {"SNRseg", [](const metrics::MetricReport& r) { return r.snr_seg; }},
    {"stoi", [](const metrics::MetricReport& r) { return r.stoi; }},
    {"wss", [](const metrics::MetricReport& r) { return r.wss; }},
};

}  // namespace

const char* extension(Format f) {
  switch (f) {
    case Format::kCsv: return "csv";
    case Format::kJson: return "json";
    case Format::kMarkdown: break;
  }
  return "md";
}

const char* band_annotation(model::Band b) {
  switch (b) {
    case model::Band::kStrong: return "***";
    case model::Band::kMedium: return "**";
    case model::Band::kWeak: return "*";
    case model::Band::kNone: break;
  }
  return "";
}

// --- Regression --------------------------------------------------------------

std::string render_regression_table(const model::RegressionFit& fit, Format format) {
  const auto& o = fit.ols;
  if (format == Format::kJson) {
    Json doc;
    doc["outcome"] = model::outcome_name(fit.outcome);
    doc["observations"] = fit.observations;
    doc["rank"] = o.rank;
    doc["dof"] = o.dof;
    doc["residual_variance"] = o.residual_variance;
    Json coeffs = Json::array();
    for (Eigen::Index j = 0; j < o.theta.size(); ++j) {
      const auto& label = fit.labels[std::size_t(j)];
      Json c;
      c["feature_index"] = label.feature;
      c["interaction_label"] = model::interaction_label(label.interaction);
      c["retained"] = o.is_retained(j);
      c["theta"] = o.theta[j];
      c["std_err"] = optional_number(o.std_err[j]);
      c["t"] = optional_number(o.t_stat[j]);
      c["p"] = optional_number(o.p_value[j]);
      c["band"] = o.is_retained(j) ? model::band_name(model::significance_band(o.p_value[j])) : "none";
      coeffs.push_back(std::move(c));
    }
    doc["coefficients"] = std::move(coeffs);
    return doc.dump(2) + "\n";
  }

  std::vector<std::string> header = {format == Format::kCsv ? "interaction" : ""};
  for (int i = 0; i < features::kFeatureCount; ++i) header.push_back(fmt::format("X{}", i));
  if (format == Format::kCsv) {
    std::string out = csv::join(header) + "\n";
    for (int m = 0; m < model::kInteractions; ++m) {
      std::vector<std::string> row = {model::interaction_label(m)};
      for (int i = 0; i < features::kFeatureCount; ++i) row.push_back(regression_cell(fit, model::column_index(i, m)));
      out += csv::join(row) + "\n";
    }
    return out;
  }
  std::string out = fmt::format("## Regression of {} on acoustic error with interactions\n\n",
                                model::outcome_name(fit.outcome));
  out += markdown_row(header) + markdown_rule(header.size());
  for (int m = 0; m < model::kInteractions; ++m) {
    std::vector<std::string> row = {model::interaction_display(m)};
    for (int i = 0; i < features::kFeatureCount; ++i) row.push_back(regression_cell(fit, model::column_index(i, m)));
    out += markdown_row(row);
  }
  out += fmt::format("\nn = {}, rank = {}, dof = {}. Significance: *** p ≤ 0.01, ** p ≤ 0.05, * p ≤ 0.10; "
                     "{} marks a dropped column.\n",
                     fit.observations, o.rank, o.dof, kDropped);
  return out;
}

std::vector<CoefficientRecord> parse_regression_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw SchemaError(fmt::format("regression JSON: {}", e.what()));
  }
  if (!doc.contains("coefficients") || !doc["coefficients"].is_array())
    throw SchemaError("regression JSON: missing 'coefficients' array");
  auto opt = [](const Json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  std::vector<CoefficientRecord> out;
  try {
    for (const auto& c : doc["coefficients"]) {
      CoefficientRecord r;
      r.feature_index = c.at("feature_index").get<int>();
      r.interaction = model::parse_interaction(c.at("interaction_label").get<std::string>());
      r.theta = c.at("theta").get<double>();
      r.std_err = opt(c.at("std_err"));
      r.t = opt(c.at("t"));
      r.p = opt(c.at("p"));
      r.retained = c.at("retained").get<bool>();
      const std::string band = c.at("band").get<std::string>();
      r.band = band == "strong"   ? model::Band::kStrong
               : band == "medium" ? model::Band::kMedium
               : band == "weak"   ? model::Band::kWeak
                                  : model::Band::kNone;
      out.push_back(r);
    }
  } catch (const Json::exception& e) {
    throw SchemaError(fmt::format("regression JSON: {}", e.what()));
  }
  return out;
}

// --- Decomposition -------------------------------------------------------------

std::string render_decomposition_table(const model::DecompositionTable& table, Format format) {
  if (format == Format::kJson) {
    Json doc;
    doc["outcome"] = model::outcome_name(table.outcome);
    doc["reference"] = model::reference_name(table.reference);
    doc["stratum_model"] =
        "each stratum is fitted over the interactions that share no factor with the decomposed indicator";
    doc["viewpoint"] = "endowment at I=0 coefficients; coefficient at I=1 means";
    Json rows = Json::array();
    for (const auto& d : table.rows) {
      const auto bits = indicator_bits(d.indicator);
      Json r;
      r["indicator"] = model::interaction_label(d.indicator);
      r["G"] = bits[0];
      r["C"] = bits[1];
      r["D"] = bits[2];
      r["endowment"] = d.endowment;
      r["coefficient"] = d.coefficient;
      r["interaction"] = d.interaction;
      r["collective"] = d.collective;
      rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
  }
  if (format == Format::kCsv) {
    std::string out = "indicator,G,C,D,endowment,coefficient,interaction,collective\n";
    for (const auto& d : table.rows) {
      const auto bits = indicator_bits(d.indicator);
      out += csv::join({model::interaction_label(d.indicator), std::to_string(bits[0]),
                        std::to_string(bits[1]), std::to_string(bits[2]), fixed(d.endowment, 3),
                        fixed(d.coefficient, 3), fixed(d.interaction, 3), fixed(d.collective, 3)}) +
             "\n";
    }
    return out;
  }
  std::string out = fmt::format("## Blinder–Oaxaca decomposition, {} regression\n\n",
                                model::outcome_name(table.outcome));
  const std::vector<std::string> header = {"", "G", "C", "D", "Endowment", "Coefficient", "Interaction", "Collective"};
  out += markdown_row(header) + markdown_rule(header.size());
  for (const auto& d : table.rows) {
    const auto bits = indicator_bits(d.indicator);
    out += markdown_row({model::interaction_display(d.indicator), std::to_string(bits[0]),
                         std::to_string(bits[1]), std::to_string(bits[2]), fixed(d.endowment, 3),
                         fixed(d.coefficient, 3), fixed(d.interaction, 3), fixed(d.collective, 3)});
  }
  out += fmt::format("\nReference for row 1: {}.\n", model::reference_name(table.reference));
  return out;
}

std::vector<DecompositionRow> parse_decomposition_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const char* names[] = {"G", "C", "D", "endowment", "coefficient", "interaction", "collective"};
  std::size_t col[7];
  for (std::size_t i = 0; i < 7; ++i) {
    auto c = t.column(names[i]);
    if (!c) throw SchemaError(fmt::format("decomposition CSV: missing column '{}'", names[i]));
    col[i] = *c;
  }
  const auto label_col = t.column("indicator");
  std::vector<DecompositionRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string ctx = fmt::format("decomposition CSV row {}", r + 1);
    auto num = [&](std::size_t i) {
      auto v = csv::parse_number(f[col[i]], ctx);
      if (!v) throw ValueError(fmt::format("{}: empty '{}'", ctx, names[i]));
      return *v;
    };
    DecompositionRow row;
    if (label_col) {
      row.indicator = model::parse_interaction(f[*label_col]);
    } else {
      const int bits = (num(0) != 0.0 ? 1 : 0) | (num(1) != 0.0 ? 2 : 0) | (num(2) != 0.0 ? 4 : 0);
      for (int m = 0; m < model::kInteractions; ++m)
        if (model::kInteractionFactors[std::size_t(m)] == bits) row.indicator = m;
    }
    row.values.indicator = row.indicator;
    row.values.endowment = num(3);
    row.values.coefficient = num(4);
    row.values.interaction = num(5);
    row.values.collective = num(6);
    out.push_back(row);
  }
  return out;
}

// --- Comparison ----------------------------------------------------------------

ComparisonCell make_cell(double baseline, double variant) {
  ComparisonCell c;
  c.baseline = baseline;
  c.delta = variant - baseline;
  c.polarity = c.delta >= 0.0 ? Polarity::kPositive : Polarity::kNegative;
  return c;
}

std::string format_delta(double delta) {
  const char sign = delta >= 0.0 ? '+' : '-';
  const double a = std::abs(delta);
  std::string body = fmt::format("{:.2f}", a);
  if (std::stod(body) < 1.0) return sign + body.substr(1);  // "0.02" -> ".02"
  body = fmt::format("{:.1f}", a);
  if (std::stod(body) < 10.0) return sign + body;
  body = fmt::format("{:.0f}", a);
  if (std::stod(body) < 100.0) return sign + body + ".";
  return sign + body;
}

std::string format_value(double value) {
  std::string s = fixed(value, 2);
  if (std::abs(std::stod(s)) < 10.0) return s;
  s = fixed(value, 1);
  if (std::abs(std::stod(s)) < 100.0) return s;
  return fixed(value, 0);
}

const std::vector<std::string>& comparison_metrics() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& m : kMetricNames) v.push_back(m.label);
    return v;
  }();
  return names;
}

std::optional<double> metric_value(const metrics::MetricReport& r, std::string_view name) {
  for (const auto& m : kMetricNames)
    if (name == m.label) return m.get(r);
  throw ValueError(fmt::format("unknown comparison metric '{}'", name));
}

Aggregate aggregate(const std::vector<metrics::MetricRow>& rows) {
  std::map<int, std::map<std::string, std::pair<double, int>>> sums;
  for (const auto& row : rows) {
    auto& cell = sums[row.label.cell()];
    if (row.failed) continue;
    for (const auto& m : kMetricNames) {
      if (auto v = m.get(row.report)) {
        auto& s = cell[m.label];
        s.first += *v;
        ++s.second;
      }
    }
  }
  Aggregate out;
  for (const auto& [cell, metrics] : sums) {
    auto& dst = out[cell];
    for (const auto& [name, s] : metrics) dst[name] = s.first / s.second;
  }
  return out;
}

ComparisonTable build_comparison(const Aggregate& baseline,
                                 const std::vector<std::pair<std::string, Aggregate>>& variants) {
  std::vector<std::string> missing;
  for (const auto& [name, agg] : variants) {
    for (const auto& [cell, _] : baseline)
      if (!agg.count(cell)) missing.push_back(fmt::format("{} lacks ({})", name, ConditionLabel::from_cell(cell).str()));
    for (const auto& [cell, _] : agg)
      if (!baseline.count(cell))
        missing.push_back(fmt::format("baseline lacks ({}) present in {}", ConditionLabel::from_cell(cell).str(), name));
  }
  if (!missing.empty()) {
    std::string msg = "comparison keys differ:";
    for (const auto& m : missing) msg += " [" + m + "]";
    throw AlignmentError(msg);
  }

  ComparisonTable t;
  t.baseline = baseline;
  for (const auto& [cell, _] : baseline) t.cells.push_back(cell);
  for (const auto& name : comparison_metrics()) {
    bool any = false;
    for (const auto& [cell, values] : baseline) any = any || values.count(name);
    if (any) t.metrics.push_back(name);
  }
  for (const auto& [name, agg] : variants) {
    t.variants.push_back(name);
    auto& dst = t.deltas[name];
    for (const auto& [cell, values] : baseline) {
      const auto& v = agg.at(cell);
      for (const auto& [metric, base] : values) {
        auto it = v.find(metric);
        if (it != v.end()) dst[cell][metric] = make_cell(base, it->second);
      }
    }
  }
  return t;
}

std::string render_comparison_table(const ComparisonTable& t, Format format) {
  auto lookup = [&](const std::string& variant, int cell, const std::string& metric) -> const ComparisonCell* {
    const auto& byvar = t.deltas.at(variant);
    auto c = byvar.find(cell);
    if (c == byvar.end()) return nullptr;
    auto m = c->second.find(metric);
    return m == c->second.end() ? nullptr : &m->second;
  };
  auto base = [&](int cell, const std::string& metric) -> std::optional<double> {
    const auto& values = t.baseline.at(cell);
    auto it = values.find(metric);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
  auto polarity = [](Polarity p) { return p == Polarity::kPositive ? "positive" : "negative"; };

  if (format == Format::kJson) {
    Json doc;
    doc["variants"] = t.variants;
    Json rows = Json::array();
    for (const auto& metric : t.metrics) {
      for (int cell : t.cells) {
        const auto b = base(cell, metric);
        if (!b) continue;
        const auto label = ConditionLabel::from_cell(cell);
        Json r;
        r["metric"] = metric;
        r["G"] = label.g;
        r["C"] = label.c;
        r["D"] = label.d;
        r["baseline"] = *b;
        Json deltas = Json::object();
        for (const auto& v : t.variants) {
          if (const auto* c = lookup(v, cell, metric)) deltas[v] = {{"delta", c->delta}, {"polarity", polarity(c->polarity)}};
        }
        r["deltas"] = std::move(deltas);
        rows.push_back(std::move(r));
      }
    }
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
  }
  if (format == Format::kCsv) {
    std::string out = "metric,G,C,D,baseline,variant,delta,polarity\n";
    for (const auto& metric : t.metrics) {
      for (int cell : t.cells) {
        const auto b = base(cell, metric);
        if (!b) continue;
        const auto label = ConditionLabel::from_cell(cell);
        for (const auto& v : t.variants) {
          const auto* c = lookup(v, cell, metric);
          if (!c) continue;
          out += csv::join({metric, std::to_string(label.g), std::to_string(label.c), std::to_string(label.d),
                            csv::number(*b), v, csv::number(c->delta), polarity(c->polarity)}) +
                 "\n";
        }
      }
    }
    return out;
  }
  std::string out = "## Baseline versus variants\n\n";
  std::vector<std::string> header = {"metric"};
  for (int cell : t.cells) {
    header.push_back(ConditionLabel::from_cell(cell).str());
    for (const auto& v : t.variants) header.push_back(v);
  }
  out += markdown_row(header) + markdown_rule(header.size());
  for (const auto& metric : t.metrics) {
    std::vector<std::string> row = {metric};
    for (int cell : t.cells) {
      const auto b = base(cell, metric);
      row.push_back(b ? format_value(*b) : "");
      for (const auto& v : t.variants) {
        const auto* c = lookup(v, cell, metric);
        row.push_back(c ? format_delta(c->delta) + (c->polarity == Polarity::kPositive ? " (+)" : " (−)") : "");
      }
    }
    out += markdown_row(row);
  }
  out += "\nDeltas are variant minus baseline; (+) marks a non-negative change, (−) a negative one.\n";
  return out;
}

}  // namespace vda::report
