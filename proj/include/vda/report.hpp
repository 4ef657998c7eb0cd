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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vda/metrics.hpp"
#include "vda/model.hpp"

namespace vda::report {

enum class Format { kCsv, kJson, kMarkdown };
const char* extension(Format f);

// --- Regression --------------------------------------------------------------

/// "***", "**", "*" for strong, medium, weak; empty otherwise.
const char* band_annotation(model::Band b);

/// 8 interaction rows x 26 feature columns. Table cells hold the coefficient
/// to 2 decimals plus the band annotation; dropped columns render as "—".
/// JSON carries every column at full precision.
std::string render_regression_table(const model::RegressionFit& fit, Format format);

struct CoefficientRecord {
  int feature_index = 0;
  int interaction = 0;
  double theta = 0.0;
  std::optional<double> std_err;
  std::optional<double> t;
  std::optional<double> p;
  model::Band band = model::Band::kNone;
  bool retained = false;
};

/// Coefficient records of a regression JSON document, in column order.
std::vector<CoefficientRecord> parse_regression_json(const std::string& text);

// --- Decomposition -------------------------------------------------------------

/// Columns G, C, D, Endowment, Coefficient, Interaction, Collective at 3 decimals.
std::string render_decomposition_table(const model::DecompositionTable& table, Format format);

struct DecompositionRow {
  int indicator = 0;
  model::OaxacaDecomposition values;
};

/// Reads the CSV form back. Accepts a row label column named "indicator".
std::vector<DecompositionRow> parse_decomposition_csv(const std::string& text);

// --- Comparison ----------------------------------------------------------------

enum class Polarity { kPositive, kNegative };

struct ComparisonCell {
  double baseline = 0.0;
  double delta = 0.0;
  Polarity polarity = Polarity::kPositive;
};

ComparisonCell make_cell(double baseline, double variant);

/// Signed delta in the compact table style: "+.02", "-.00", "+1.4", "-10.".
std::string format_delta(double delta);
/// Baseline value to three significant figures.
std::string format_value(double value);

/// Condition-level mean of each metric: cell (0..7) -> metric label -> value.
/// Absent values and failed rows do not contribute.
using Aggregate = std::map<int, std::map<std::string, double>>;
Aggregate aggregate(const std::vector<metrics::MetricRow>& rows);

struct ComparisonTable {
  std::vector<std::string> metrics;        // row labels
  std::vector<int> cells;                  // condition columns
  std::vector<std::string> variants;       // variant names
  Aggregate baseline;
  // variant -> cell -> metric -> cell
  std::map<std::string, std::map<int, std::map<std::string, ComparisonCell>>> deltas;
};

/// Condition keys must agree between baseline and every variant; otherwise
/// AlignmentError lists the missing keys.
ComparisonTable build_comparison(const Aggregate& baseline,
                                 const std::vector<std::pair<std::string, Aggregate>>& variants);

std::string render_comparison_table(const ComparisonTable& table, Format format);

/// Metric row labels in table order: composite_0..2, csii_0..2, fwSNRseg, llr,
/// ncm, pesq, SNRseg, stoi, wss.
const std::vector<std::string>& comparison_metrics();
std::optional<double> metric_value(const metrics::MetricReport& r, std::string_view name);

}  // namespace vda::report
