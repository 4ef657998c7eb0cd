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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vda/features.hpp"
#include "vda/metrics.hpp"
#include "vda/model.hpp"

namespace vda::pipeline {

struct RunConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path output_dir = ".";
  metrics::MetricSelection metrics_selected = metrics::MetricSelection::all();
  model::Outcome outcome = model::Outcome::kStoi;
  model::ReferenceMode reference = model::ReferenceMode::kZeroError;
  model::FeatureMask feature_mask = model::all_features();
  std::uint64_t seed = 7;
  int jobs = 1;
  int max_lag = 16000;  // samples at 16 kHz
  std::string variant;  // empty for the baseline run
};

// Output file names inside output_dir.
std::filesystem::path metrics_path(const RunConfig& cfg, const std::string& variant = {});
std::filesystem::path features_path(const RunConfig& cfg);
std::filesystem::path fit_path(const RunConfig& cfg);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots; the first exception is rethrown after join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Manifest entries sorted by (utterance_id, G, C, D).
std::vector<ManifestEntry> sorted_entries(const CorpusManifest& m);

// Each command returns its process exit code. Errors that abort the whole
// command propagate as vda::Error.
int cmd_validate(const RunConfig& cfg, std::ostream& out);
int cmd_metrics(const RunConfig& cfg);
int cmd_features(const RunConfig& cfg);
int cmd_fit(const RunConfig& cfg);
int cmd_decompose(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);

/// Joins features and metrics rows on (utterance_id, label), skipping failed
/// rows. Keys present on one side only raise AlignmentError.
std::vector<model::ObservationRow> join_observations(const std::vector<features::FeatureRow>& feats,
                                                     const std::vector<metrics::MetricRow>& mets);

// --- Synthetic corpus ----------------------------------------------------------

struct SynthOptions {
  int utterances = 16;
  double seconds = 1.2;
  std::uint64_t seed = 7;
  std::string variant = "enhanced";
};

/// Seeded speech-like utterances rendered through planted platform (G),
/// receiver (C) and sender-denoise (D) degradations. Writes clean/, degraded/,
/// <variant>/, manifest.csv and manifest_<variant>.csv under out_dir.
void synthesize_corpus(const std::filesystem::path& out_dir, const SynthOptions& opts);

/// One speech-like utterance (voiced syllables with formant structure,
/// fricative noise and pauses).
AudioSignal synth_utterance(std::uint64_t seed, double seconds, int rate = kCanonicalRate);

int cmd_synth(const RunConfig& cfg, const SynthOptions& opts);

}  // namespace vda::pipeline
