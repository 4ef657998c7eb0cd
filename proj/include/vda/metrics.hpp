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

#include <bitset>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vda/corpus.hpp"

namespace vda::metrics {

enum class Metric { kStoi, kSnrSeg, kFwSnrSeg, kLlr, kWss, kCsii, kNcm };
inline constexpr int kMetricCount = 7;

/// Subset of the suite to compute.
class MetricSelection {
 public:
  static MetricSelection all() {
    MetricSelection s;
    s.bits_.set();
    return s;
  }
  /// Comma-separated names: stoi, snr_seg, fw_snr_seg, llr, wss, csii, ncm (or "all").
  static MetricSelection parse(std::string_view list);

  bool has(Metric m) const { return bits_.test(std::size_t(m)); }
  void add(Metric m) { bits_.set(std::size_t(m)); }
  bool empty() const { return bits_.none(); }

 private:
  std::bitset<kMetricCount> bits_;
};

struct Csii {
  std::optional<double> high;  // frames at or above the overall RMS level
  std::optional<double> mid;   // 0 to -10 dB
  std::optional<double> low;   // -10 to -30 dB
};

struct Composite {
  double csig = 0.0;
  double cbak = 0.0;
  double covl = 0.0;
};

/// Absent optionals are metrics that were not selected.
struct MetricReport {
  std::optional<double> stoi;
  std::optional<double> snr_seg;
  std::optional<double> fw_snr_seg;
  std::optional<double> llr;
  std::optional<double> wss;
  std::optional<Csii> csii;
  std::optional<double> ncm;
  std::optional<double> pesq;
  std::optional<Composite> composite;  // present iff pesq is
};

// Segmental measures clamp per-frame SNRs to this range (dB).
inline constexpr double kSnrFloor = -10.0;
inline constexpr double kSnrCeil = 35.0;
// Frames more than this far below the loudest clean frame are silent.
inline constexpr double kSilenceRangeDb = 40.0;

double stoi(const AlignedPair& pair);
double snr_seg(const AlignedPair& pair);
double fw_snr_seg(const AlignedPair& pair);
double llr(const AlignedPair& pair);
double wss(const AlignedPair& pair);
Csii csii(const AlignedPair& pair);
double ncm(const AlignedPair& pair);
Composite composite(double llr, double wss, double snr_seg, double pesq);

MetricReport evaluate_pair(const AlignedPair& pair, std::optional<double> external_pesq,
                           const MetricSelection& selection = MetricSelection::all());

// --- Building blocks, exposed for testing --------------------------------------

/// Frame mask shared by snr_seg and fw_snr_seg: clean frame energy is
/// positive and within 40 dB of the loudest frame.
std::vector<bool> active_frame_mask(const AlignedPair& pair);

/// Band-level frequency-weighted SNR of one frame (clean and degraded band
/// magnitudes): weights clean^0.2, per-band SNR clamped to [-10, 35].
double fw_snr_frame(const Eigen::Ref<const Eigen::ArrayXd>& clean_bands,
                    const Eigen::Ref<const Eigen::ArrayXd>& degraded_bands);

/// Weighted spectral slope distance between two band spectra in dB.
double wss_frame(const Eigen::Ref<const Eigen::ArrayXd>& clean_db,
                 const Eigen::Ref<const Eigen::ArrayXd>& degraded_db);

/// Mean of the smallest round(keep * n) values (at least one).
double trimmed_mean(std::vector<double> values, double keep = 0.95);

/// Band-importance weights for the given band centers, normalized to sum 1.
Eigen::ArrayXd sii_importance(const Eigen::Ref<const Eigen::ArrayXd>& center_hz);

// --- Metrics CSV ------------------------------------------------------------------

struct MetricRow {
  std::string utterance_id;
  ConditionLabel label;
  MetricReport report;
  bool failed = false;
};

std::string metrics_csv_header();
std::string metrics_csv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> parse_metrics_csv(const std::string& text);

}  // namespace vda::metrics
