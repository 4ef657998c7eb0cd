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

#include <string>
#include <vector>

#include <Eigen/Core>

#include "vda/corpus.hpp"

namespace vda::features {

inline constexpr int kFeatureCount = 26;
using FeatureArray = Eigen::Array<double, kFeatureCount, 1>;

// Index 0 is the regression intercept; 1..25 are acoustic descriptors.
enum Feature : int {
  kIntercept = 0,
  kLoudness,
  kAlphaRatio,
  kHammarbergIndex,
  kSlope0To500,
  kSlope500To1500,
  kSpectralFlux,
  kMfcc1,
  kMfcc2,
  kMfcc3,
  kMfcc4,
  kF0Semitone,
  kJitterLocal,
  kShimmerLocalDb,
  kHnrDbAcf,
  kLogRelF0H1H2,
  kLogRelF0H1A3,
  kF1Frequency,
  kF1Bandwidth,
  kF1AmplitudeLogRelF0,
  kF2Frequency,
  kF2Bandwidth,
  kF2AmplitudeLogRelF0,
  kF3Frequency,
  kF3Bandwidth,
  kF3AmplitudeLogRelF0,
};

/// First index whose value depends on voiced frames.
inline constexpr int kFirstVoicedFeature = kF0Semitone;

const char* feature_name(int index);

struct FeatureVector {
  FeatureArray x = FeatureArray::Zero();
  int voiced_frames = 0;  // zero means voicing features defaulted to 0

  bool voiced() const { return voiced_frames > 0; }
};

/// Per-utterance L1 feature error; e[0] stays 1 so it can feed a regression.
struct ErrorVector {
  FeatureArray e = FeatureArray::Zero();
};

/// Utterance means of per-frame descriptors (25 ms Hamming frames, 10 ms hop,
/// analysed at 16 kHz). Voicing-dependent entries average voiced frames only.
FeatureVector extract_features(const AudioSignal& sig);

ErrorVector feature_error(const FeatureVector& clean, const FeatureVector& degraded);

struct Formant {
  double frequency = 0.0;  // Hz
  double bandwidth = 0.0;  // Hz
};

/// Lowest `count` formant candidates from the roots of an LPC polynomial of
/// the given order fitted to the (unwindowed) frame.
std::vector<Formant> formants(const Eigen::Ref<const Eigen::ArrayXd>& frame, double rate,
                              int order = 12, int count = 3);

// --- Features CSV ----------------------------------------------------------------

struct FeatureRow {
  std::string utterance_id;
  ConditionLabel label;
  FeatureVector degraded;
  ErrorVector error;
  int clean_voiced_frames = 0;
  bool failed = false;
};

/// Columns: utterance_id,G,C,D,x0..x25,e0..e25,clean_voiced,degraded_voiced.
/// x holds the degraded-side features. Failed rows leave every value blank.
std::string features_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_features_csv(const std::string& text);

}  // namespace vda::features
