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

#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "vda/corpus.hpp"
#include "vda/csv.hpp"
#include "vda/error.hpp"

namespace vda {
namespace {

const char* const kRequired[] = {"utterance_id", "clean_path", "degraded_path", "G", "C", "D"};

int parse_indicator(const std::string& field, const char* name, std::size_t row) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw ValueError(fmt::format("manifest row {}: {}='{}' is not 0 or 1", row, name, field));
}

}  // namespace

std::string ConditionLabel::str() const { return fmt::format("G={},C={},D={}", g, c, d); }

std::filesystem::path CorpusManifest::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

CorpusManifest parse_manifest_text(const std::string& text, const std::filesystem::path& base_dir) {
  const csv::Table t = csv::parse(text);
  std::size_t col[6];
  for (int i = 0; i < 6; ++i) {
    auto c = t.column(kRequired[i]);
    if (!c) throw SchemaError(fmt::format("manifest: missing required column '{}'", kRequired[i]));
    col[i] = *c;
  }
  const auto pesq_col = t.column("pesq");

  CorpusManifest m;
  m.base_dir = base_dir;
  m.entries.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t row_no = r + 1;  // 1-based data row
    ManifestEntry e;
    e.utterance_id = row[col[0]];
    e.clean_path = row[col[1]];
    e.degraded_path = row[col[2]];
    if (e.utterance_id.empty())
      throw ValueError(fmt::format("manifest row {}: empty utterance_id", row_no));
    e.label.g = parse_indicator(row[col[3]], "G", row_no);
    e.label.c = parse_indicator(row[col[4]], "C", row_no);
    e.label.d = parse_indicator(row[col[5]], "D", row_no);
    if (pesq_col)
      e.external_pesq = csv::parse_number(row[*pesq_col], fmt::format("manifest row {}: pesq", row_no));
    m.entries.push_back(std::move(e));
  }
  return m;
}

CorpusManifest parse_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = csv::read_text(path);
  } catch (const DependencyError&) {
    throw SchemaError("manifest: cannot open " + path.string());
  }
  return parse_manifest_text(text, path.parent_path());
}

std::string manifest_text(const CorpusManifest& m) {
  std::string out = "utterance_id,clean_path,degraded_path,G,C,D,pesq\n";
  for (const auto& e : m.entries) {
    out += csv::join({e.utterance_id, e.clean_path, e.degraded_path, std::to_string(e.label.g),
                      std::to_string(e.label.c), std::to_string(e.label.d),
                      csv::number(e.external_pesq)});
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const CorpusManifest& m) {
  csv::write_text(path, manifest_text(m));
}

ValidationReport validate_manifest(const CorpusManifest& m) {
  ValidationReport rep;
  std::set<std::string> missing_seen;
  std::set<std::pair<std::string, int>> keys;
  std::set<std::pair<std::string, int>> dup_seen;
  for (const auto& e : m.entries) {
    for (const auto* p : {&e.clean_path, &e.degraded_path}) {
      const auto resolved = m.resolve(*p);
      std::error_code ec;
      if (!std::filesystem::is_regular_file(resolved, ec) && missing_seen.insert(*p).second)
        rep.missing.push_back(*p);
    }
    const auto key = std::make_pair(e.utterance_id, e.label.cell());
    if (!keys.insert(key).second && dup_seen.insert(key).second)
      rep.duplicates.push_back(e.utterance_id + " " + e.label.str());
    ++rep.cell_counts[e.label.cell()];
  }
  return rep;
}

std::string ValidationReport::str() const {
  std::ostringstream ss;
  ss << (ok() ? "ok" : "invalid") << '\n';
  for (const auto& p : missing) ss << "missing: " << p << '\n';
  for (const auto& d : duplicates) ss << "duplicate: " << d << '\n';
  for (int cell = 0; cell < kConditionCells; ++cell)
    ss << "count " << ConditionLabel::from_cell(cell).str() << ": " << cell_counts[cell] << '\n';
  return ss.str();
}

}  // namespace vda
