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

#include <fmt/format.h>

#include "vda/csv.hpp"
#include "vda/error.hpp"
#include "vda/features.hpp"

namespace vda::features {
namespace {

std::vector<std::string> header() {
  std::vector<std::string> h = {"utterance_id", "G", "C", "D"};
  for (int i = 0; i < kFeatureCount; ++i) h.push_back(fmt::format("x{}", i));
  for (int i = 0; i < kFeatureCount; ++i) h.push_back(fmt::format("e{}", i));
  h.push_back("clean_voiced");
  h.push_back("degraded_voiced");
  return h;
}

}  // namespace

std::string features_csv(const std::vector<FeatureRow>& rows) {
  std::string out = csv::join(header()) + "\n";
  for (const auto& row : rows) {
    std::vector<std::string> f = {row.utterance_id, std::to_string(row.label.g),
                                  std::to_string(row.label.c), std::to_string(row.label.d)};
    for (int i = 0; i < kFeatureCount; ++i) f.push_back(row.failed ? "" : csv::number(row.degraded.x[i]));
    for (int i = 0; i < kFeatureCount; ++i) f.push_back(row.failed ? "" : csv::number(row.error.e[i]));
    f.push_back(row.failed ? "" : std::to_string(row.clean_voiced_frames));
    f.push_back(row.failed ? "" : std::to_string(row.degraded.voiced_frames));
    out += csv::join(f) + "\n";
  }
  return out;
}

std::vector<FeatureRow> parse_features_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const auto names = header();
  std::vector<std::size_t> col;
  for (const auto& n : names) {
    auto c = t.column(n);
    if (!c) throw SchemaError(fmt::format("features CSV: missing column '{}'", n));
    col.push_back(*c);
  }
  std::vector<FeatureRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string ctx = fmt::format("features CSV row {}", r + 1);
    auto num = [&](std::size_t i) { return csv::parse_number(f[col[i]], ctx); };
    auto bit = [&](std::size_t i) {
      auto v = num(i);
      if (!v || (*v != 0.0 && *v != 1.0)) throw ValueError(ctx + ": indicator must be 0 or 1");
      return int(*v);
    };
    FeatureRow row;
    row.utterance_id = f[col[0]];
    row.label = {bit(1), bit(2), bit(3)};
    int present = 0;
    for (int i = 0; i < kFeatureCount; ++i) {
      const auto x = num(4 + std::size_t(i));
      const auto e = num(4 + kFeatureCount + std::size_t(i));
      if (x) row.degraded.x[i] = *x, ++present;
      if (e) row.error.e[i] = *e, ++present;
    }
    if (present == 0) {
      row.failed = true;
    } else if (present != 2 * kFeatureCount) {
      throw ValueError(ctx + ": partially blank feature row");
    } else {
      row.clean_voiced_frames = int(num(4 + 2 * kFeatureCount).value_or(0));
      row.degraded.voiced_frames = int(num(5 + 2 * kFeatureCount).value_or(0));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vda::features
