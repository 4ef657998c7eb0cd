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

#include <array>
#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vda {

/// Mono sample sequence with its sample rate in Hz.
struct AudioSignal {
  Eigen::ArrayXd samples;
  int rate = 0;

  Eigen::Index size() const { return samples.size(); }
  double duration() const { return rate > 0 ? double(samples.size()) / rate : 0.0; }
};

/// Platform (G), receiver (C) and sender-denoise (D) indicators.
struct ConditionLabel {
  int g = 0;
  int c = 0;
  int d = 0;

  /// Cells are numbered g*4 + c*2 + d.
  int cell() const { return g * 4 + c * 2 + d; }
  static ConditionLabel from_cell(int cell) {
    return {(cell >> 2) & 1, (cell >> 1) & 1, cell & 1};
  }
  std::string str() const;

  auto operator<=>(const ConditionLabel&) const = default;
};

inline constexpr int kConditionCells = 8;

struct ManifestEntry {
  std::string utterance_id;
  std::string clean_path;
  std::string degraded_path;
  ConditionLabel label;
  std::optional<double> external_pesq;

  bool operator==(const ManifestEntry&) const = default;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  // Relative entry paths resolve against this directory.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
};

struct ValidationReport {
  std::vector<std::string> missing;
  std::vector<std::string> duplicates;
  std::array<int, kConditionCells> cell_counts{};

  bool ok() const { return missing.empty() && duplicates.empty(); }
  std::string str() const;
};

/// Equal-length, equal-rate clean/degraded pair after lag and level correction.
struct AlignedPair {
  AudioSignal clean;
  AudioSignal degraded;
  int applied_lag = 0;
  double applied_gain = 1.0;

  int rate() const { return clean.rate; }
  Eigen::Index size() const { return clean.size(); }
};

inline constexpr int kCanonicalRate = 16000;

// --- WAV ---------------------------------------------------------------------

/// Reads PCM16 or float32 RIFF/WAVE, 1 or 2 channels; stereo is averaged.
AudioSignal load_wav(const std::filesystem::path& path);

enum class WavEncoding { kPcm16, kFloat32 };
void write_wav(const std::filesystem::path& path, const AudioSignal& sig,
               WavEncoding encoding = WavEncoding::kFloat32, int channels = 1);

// --- Resampling and alignment ------------------------------------------------

/// Kaiser-windowed sinc interpolation. Output length is
/// round(len * target / source); identity when the rates match.
AudioSignal resample(const AudioSignal& sig, int target_rate);

/// load_wav followed by resampling to the canonical 16 kHz.
AudioSignal load_canonical(const std::filesystem::path& path);

/// Delays by k samples (zeros shifted in); negative k advances. Length is kept.
AudioSignal delay(const AudioSignal& sig, int k);

/// Finds the lag in [-max_lag, max_lag] maximizing the cross-correlation
/// sum_n clean[n] * degraded[n + lag], trims both signals to the overlap and
/// scales the degraded one to the clean RMS.
AlignedPair align(const AudioSignal& clean, const AudioSignal& degraded, int max_lag);

// --- Manifest ----------------------------------------------------------------

CorpusManifest parse_manifest(const std::filesystem::path& path);
CorpusManifest parse_manifest_text(const std::string& text,
                                   const std::filesystem::path& base_dir = {});
void write_manifest(const std::filesystem::path& path, const CorpusManifest& m);
std::string manifest_text(const CorpusManifest& m);

ValidationReport validate_manifest(const CorpusManifest& m);

}  // namespace vda
