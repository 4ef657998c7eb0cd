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
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vda/csv.hpp"
#include "vda/error.hpp"
#include "vda/pipeline.hpp"
#include "vda/report.hpp"

namespace vda::pipeline {
namespace {

namespace fs = std::filesystem;

using Key = std::tuple<std::string, int, int, int>;

Key key_of(const std::string& id, const ConditionLabel& l) { return {id, l.g, l.c, l.d}; }

std::string require_file(const fs::path& p) {
  if (!fs::exists(p))
    throw DependencyError(fmt::format("required file '{}' not found; run the upstream stage first", p.string()));
  return csv::read_text(p);
}

void write_doc(const fs::path& p, const std::string& text) {
  csv::write_text(p, text);
  spdlog::info("wrote {}", p.string());
}

CorpusManifest load_manifest(const RunConfig& cfg) {
  if (cfg.manifest_path.empty()) throw ConfigError("--manifest is required");
  return parse_manifest(cfg.manifest_path);
}

AlignedPair load_pair(const CorpusManifest& m, const ManifestEntry& e, int max_lag) {
  const AudioSignal clean = load_canonical(m.resolve(e.clean_path));
  const AudioSignal degraded = load_canonical(m.resolve(e.degraded_path));
  return align(clean, degraded, max_lag);
}

// Worst failure kind decides the exit code of a per-file stage.
struct FailureTally {
  std::mutex mu;
  std::optional<ErrorKind> first;
  int count = 0;

  void record(const ManifestEntry& e, const Error& err) {
    std::lock_guard lock(mu);
    spdlog::warn("{} ({}): {}", e.utterance_id, e.label.str(), err.what());
    if (!first) first = err.kind();
    ++count;
  }
  int exit_status() const { return first ? exit_code(*first) : 0; }
};

std::vector<model::ObservationRow> load_observations(const RunConfig& cfg) {
  const auto feats = features::parse_features_csv(require_file(features_path(cfg)));
  const auto mets = metrics::parse_metrics_csv(require_file(metrics_path(cfg)));
  auto rows = join_observations(feats, mets);
  if (rows.empty()) throw DependencyError("no usable observations after joining features and metrics");
  return rows;
}

void write_all_formats(const fs::path& dir, const std::string& stem,
                       const std::function<std::string(report::Format)>& render) {
  for (auto f : {report::Format::kCsv, report::Format::kJson, report::Format::kMarkdown})
    write_doc(dir / fmt::format("{}.{}", stem, report::extension(f)), render(f));
}

}  // namespace

fs::path metrics_path(const RunConfig& cfg, const std::string& variant) {
  const std::string& v = variant.empty() ? cfg.variant : variant;
  return cfg.output_dir / (v.empty() ? std::string("metrics.csv") : fmt::format("metrics_{}.csv", v));
}

fs::path features_path(const RunConfig& cfg) { return cfg.output_dir / "features.csv"; }

fs::path fit_path(const RunConfig& cfg) {
  return cfg.output_dir / fmt::format("fit_{}.json", model::outcome_name(cfg.outcome));
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ManifestEntry> sorted_entries(const CorpusManifest& m) {
  std::vector<ManifestEntry> entries = m.entries;
  std::stable_sort(entries.begin(), entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    return key_of(a.utterance_id, a.label) < key_of(b.utterance_id, b.label);
  });
  return entries;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const CorpusManifest m = load_manifest(cfg);
  const ValidationReport rep = validate_manifest(m);
  out << rep.str();
  return rep.ok() ? 0 : exit_code(ErrorKind::kData);
}

int cmd_metrics(const RunConfig& cfg) {
  if (cfg.metrics_selected.empty()) throw ConfigError("metric selection is empty");
  const CorpusManifest m = load_manifest(cfg);
  const auto entries = sorted_entries(m);
  std::vector<metrics::MetricRow> rows(entries.size());
  FailureTally tally;
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    auto& row = rows[i];
    row.utterance_id = e.utterance_id;
    row.label = e.label;
    try {
      const AlignedPair pair = load_pair(m, e, cfg.max_lag);
      row.report = metrics::evaluate_pair(pair, e.external_pesq, cfg.metrics_selected);
    } catch (const Error& err) {
      row.report = {};
      row.failed = true;
      tally.record(e, err);
    }
  });
  write_doc(metrics_path(cfg), metrics::metrics_csv(rows));
  if (tally.count) spdlog::error("{} of {} rows failed", tally.count, rows.size());
  return tally.exit_status();
}

int cmd_features(const RunConfig& cfg) {
  const CorpusManifest m = load_manifest(cfg);
  const auto entries = sorted_entries(m);
  std::vector<features::FeatureRow> rows(entries.size());
  FailureTally tally;
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    auto& row = rows[i];
    row.utterance_id = e.utterance_id;
    row.label = e.label;
    try {
      const AlignedPair pair = load_pair(m, e, cfg.max_lag);
      const auto clean = features::extract_features(pair.clean);
      row.degraded = features::extract_features(pair.degraded);
      row.error = features::feature_error(clean, row.degraded);
      row.clean_voiced_frames = clean.voiced_frames;
      if (!clean.voiced() || !row.degraded.voiced())
        spdlog::warn("{} ({}): no voiced frames on one side; voicing features set to 0", e.utterance_id,
                     e.label.str());
    } catch (const Error& err) {
      row = features::FeatureRow{e.utterance_id, e.label, {}, {}, 0, true};
      tally.record(e, err);
    }
  });
  write_doc(features_path(cfg), features::features_csv(rows));
  if (tally.count) spdlog::error("{} of {} rows failed", tally.count, rows.size());
  return tally.exit_status();
}

std::vector<model::ObservationRow> join_observations(const std::vector<features::FeatureRow>& feats,
                                                     const std::vector<metrics::MetricRow>& mets) {
  std::map<Key, const metrics::MetricRow*> by_key;
  std::map<Key, bool> failed;
  for (const auto& r : mets) {
    if (r.failed) {
      failed[key_of(r.utterance_id, r.label)] = true;
    } else {
      by_key[key_of(r.utterance_id, r.label)] = &r;
    }
  }
  std::vector<std::string> missing;
  std::vector<model::ObservationRow> out;
  std::map<Key, bool> used;
  for (const auto& f : feats) {
    if (f.failed) continue;
    const Key k = key_of(f.utterance_id, f.label);
    if (failed.count(k)) continue;
    auto it = by_key.find(k);
    if (it == by_key.end()) {
      missing.push_back(fmt::format("{} ({}) has features but no metrics", f.utterance_id, f.label.str()));
      continue;
    }
    used[k] = true;
    const auto& rep = it->second->report;
    if (!rep.stoi)
      throw DependencyError(fmt::format("metrics row {} ({}) has no stoi value", f.utterance_id, f.label.str()));
    model::ObservationRow row;
    row.utterance_id = f.utterance_id;
    row.label = f.label;
    row.error = f.error;
    row.y_stoi = *rep.stoi;
    row.y_pesq = rep.pesq;
    out.push_back(std::move(row));
  }
  for (const auto& f : feats)
    if (f.failed) used[key_of(f.utterance_id, f.label)] = true;
  for (const auto& [k, r] : by_key)
    if (!used.count(k))
      missing.push_back(fmt::format("{} ({}) has metrics but no features", r->utterance_id, r->label.str()));
  if (!missing.empty()) {
    std::string msg = "features and metrics disagree:";
    for (const auto& s : missing) msg += " [" + s + "]";
    throw AlignmentError(msg);
  }
  return out;
}

int cmd_fit(const RunConfig& cfg) {
  const auto rows = load_observations(cfg);
  const auto fit = model::fit_model(rows, cfg.outcome, cfg.feature_mask);
  const std::string outcome = model::outcome_name(cfg.outcome);
  write_doc(fit_path(cfg), report::render_regression_table(fit, report::Format::kJson));
  write_doc(cfg.output_dir / fmt::format("regression_{}.csv", outcome),
            report::render_regression_table(fit, report::Format::kCsv));
  write_doc(cfg.output_dir / fmt::format("regression_{}.md", outcome),
            report::render_regression_table(fit, report::Format::kMarkdown));
  return 0;
}

int cmd_decompose(const RunConfig& cfg) {
  const auto rows = load_observations(cfg);
  const auto table = model::decomposition_table(rows, cfg.outcome, cfg.reference, cfg.feature_mask);
  write_all_formats(cfg.output_dir, fmt::format("decomposition_{}", model::outcome_name(cfg.outcome)),
                    [&](report::Format f) { return report::render_decomposition_table(table, f); });
  return 0;
}

int cmd_report(const RunConfig& cfg) {
  const auto baseline = metrics::parse_metrics_csv(require_file(metrics_path(cfg, {})));
  std::vector<std::pair<std::string, report::Aggregate>> variants;
  std::vector<fs::path> files;
  if (fs::is_directory(cfg.output_dir))
    for (const auto& entry : fs::directory_iterator(cfg.output_dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const std::string name = p.filename().string();
    if (name.rfind("metrics_", 0) != 0 || p.extension() != ".csv") continue;
    const std::string variant = name.substr(8, name.size() - 8 - 4);
    if (!cfg.variant.empty() && variant != cfg.variant) continue;
    variants.emplace_back(variant, report::aggregate(metrics::parse_metrics_csv(csv::read_text(p))));
  }
  if (variants.empty())
    throw DependencyError(fmt::format("no variant metrics (metrics_<name>.csv) found in '{}'",
                                      cfg.output_dir.string()));
  const auto table = report::build_comparison(report::aggregate(baseline), variants);
  write_all_formats(cfg.output_dir, "comparison",
                    [&](report::Format f) { return report::render_comparison_table(table, f); });
  return 0;
}

}  // namespace vda::pipeline
