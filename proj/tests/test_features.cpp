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

#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "vda/features.hpp"
#include "vda/pipeline.hpp"

using namespace vda;
using namespace vda::features;
using Catch::Approx;

namespace {

// Pulse train through three two-pole resonators (an all-pole vowel).
AudioSignal vowel(const std::array<double, 3>& freqs, const std::array<double, 3>& bws, double f0 = 100.0,
                  double seconds = 0.5, int rate = 16000) {
  const Eigen::Index n = Eigen::Index(seconds * rate);
  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(n);
  const Eigen::Index period = Eigen::Index(rate / f0);
  for (Eigen::Index i = 0; i < n; i += period) x[i] = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double r = std::exp(-test::kPi * bws[std::size_t(k)] / rate);
    const double a1 = -2.0 * r * std::cos(2.0 * test::kPi * freqs[std::size_t(k)] / rate), a2 = r * r;
    double y1 = 0, y2 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = x[i] - a1 * y1 - a2 * y2;
      y2 = y1;
      y1 = y;
      x[i] = y;
    }
  }
  x *= 0.5 / x.abs().maxCoeff();
  return {x, rate};
}

}  // namespace

TEST_CASE("440 Hz tone: pitch in semitones, jitter and shimmer", "[features]") {
  const FeatureVector fv = extract_features(test::sine(440.0, 1.0));
  REQUIRE(fv.voiced());
  CHECK(fv.x[kF0Semitone] == Approx(12.0 * std::log2(440.0 / 27.5)).margin(0.1));
  CHECK(fv.x[kF0Semitone] == Approx(48.0).margin(0.1));
  CHECK(fv.x[kJitterLocal] < 1e-3);
  CHECK(fv.x[kShimmerLocalDb] < 1e-2);
  CHECK(fv.x[kIntercept] == 1.0);
}

TEST_CASE("formants of a synthetic all-pole vowel", "[features][formants]") {
  const FeatureVector fv = extract_features(vowel({700, 1220, 2600}, {80, 90, 120}));
  REQUIRE(fv.voiced());
  CHECK(fv.x[kF1Frequency] == Approx(700).margin(50));
  CHECK(fv.x[kF2Frequency] == Approx(1220).margin(50));
  CHECK(fv.x[kF3Frequency] == Approx(2600).margin(50));
  CHECK(fv.x[kF0Semitone] == Approx(12.0 * std::log2(100.0 / 27.5)).margin(0.2));
}

TEST_CASE("formants() on one frame recovers pole locations", "[features][formants]") {
  test::Gen g(1);
  for (int trial = 0; trial < 6; ++trial) {
    const std::array<double, 3> f = {g.uniform(450, 850), g.uniform(1100, 1900), g.uniform(2300, 3000)};
    const AudioSignal v = vowel(f, {70, 90, 120}, g.uniform(90, 160), 0.1);
    const auto found = formants(v.samples.segment(400, 400), 16000);
    REQUIRE(found.size() == 3);
    // One short frame pulls F1 towards the nearest harmonic above it.
    CHECK(found[0].frequency == Approx(f[0]).margin(75));
    CHECK(found[1].frequency == Approx(f[1]).margin(50));
    CHECK(found[2].frequency == Approx(f[2]).margin(50));
  }
}

TEST_CASE("feature_error basics", "[features][error]") {
  FeatureVector a, b;
  a.x.setRandom();
  a.x[0] = b.x[0] = 1.0;
  b = a;
  const ErrorVector same = feature_error(a, b);
  CHECK(same.e[0] == 1.0);
  CHECK(same.e.tail(25).abs().maxCoeff() == 0.0);

  a.x[1] = 2.0;
  b.x[1] = -1.5;
  CHECK(feature_error(a, b).e[1] == 3.5);
}

TEST_CASE("feature_error is an elementwise absolute difference", "[features][error][property]") {
  test::Gen g(2);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureVector a, b;
    for (int i = 1; i < kFeatureCount; ++i) {
      a.x[i] = 10.0 * g.normal();
      b.x[i] = 10.0 * g.normal();
    }
    a.x[0] = b.x[0] = 1.0;
    const ErrorVector ab = feature_error(a, b), ba = feature_error(b, a);
    CHECK(ab.e[0] == 1.0);
    for (int i = 1; i < kFeatureCount; ++i) {
      CHECK(ab.e[i] == std::abs(a.x[i] - b.x[i]));
      CHECK(ab.e[i] == ba.e[i]);
      CHECK(ab.e[i] >= 0.0);
    }
  }
}

TEST_CASE("extraction is deterministic", "[features][property]") {
  const AudioSignal s = pipeline::synth_utterance(3, 1.0);
  const FeatureVector a = extract_features(s), b = extract_features(s);
  for (int i = 0; i < kFeatureCount; ++i) CHECK(a.x[i] == b.x[i]);
  CHECK(a.voiced_frames == b.voiced_frames);
}

TEST_CASE("a 6.02 dB gain leaves spectral shape features unchanged", "[features][property]") {
  for (std::uint64_t seed : {4u, 5u}) {
    const AudioSignal s = pipeline::synth_utterance(seed, 1.0);
    const FeatureVector a = extract_features(s);
    const FeatureVector b = extract_features(AudioSignal{2.0 * s.samples, s.rate});
    for (int i : {kAlphaRatio, kHammarbergIndex, kSlope0To500, kSlope500To1500}) {
      INFO(feature_name(i));
      CHECK(b.x[i] == Approx(a.x[i]).margin(1e-6));
    }
    CHECK(b.x[kLoudness] > a.x[kLoudness]);
  }
}

TEST_CASE("every vector carries the intercept", "[features][property]") {
  test::Gen g(6);
  for (int trial = 0; trial < 4; ++trial) {
    const AudioSignal s{g.noise(4000, 0.1), 16000};
    const FeatureVector fv = extract_features(s);
    CHECK(fv.x[0] == 1.0);
    CHECK(feature_error(fv, FeatureVector{}).e[0] == 1.0);
    CHECK(fv.x.allFinite());
  }
}

TEST_CASE("unvoiced audio defaults voicing features to zero", "[features]") {
  test::Gen g(7);
  const FeatureVector fv = extract_features(AudioSignal{g.noise(8000, 0.1), 16000});
  CHECK_FALSE(fv.voiced());
  for (int i = kFirstVoicedFeature; i < kFeatureCount; ++i) CHECK(fv.x[i] == 0.0);
  CHECK(fv.x[kLoudness] > 0.0);
}

TEST_CASE("other sample rates are analysed at 16 kHz", "[features]") {
  const FeatureVector a = extract_features(test::sine(220.0, 0.5, 16000));
  const FeatureVector b = extract_features(test::sine(220.0, 0.5, 44100));
  CHECK(b.x[kF0Semitone] == Approx(a.x[kF0Semitone]).margin(0.05));
}

TEST_CASE("too-short signals are rejected", "[features]") {
  CHECK_THROWS_AS(extract_features(test::sine(200.0, 0.05)), PreconditionError);
  CHECK_THROWS_AS(feature_name(26), ValueError);
  CHECK(std::string(feature_name(kF0Semitone)).size() > 0);
}

TEST_CASE("features CSV round-trips and keeps failed rows blank", "[features][csv]") {
  test::Gen g(8);
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 5; ++i) {
    FeatureRow r;
    r.utterance_id = "u" + std::to_string(i);
    r.label = ConditionLabel::from_cell(7 - i);
    if (i == 2) {
      r.failed = true;
    } else {
      for (int k = 0; k < kFeatureCount; ++k) {
        r.degraded.x[k] = g.normal();
        r.error.e[k] = std::abs(g.normal());
      }
      r.degraded.x[0] = r.error.e[0] = 1.0;
      r.degraded.voiced_frames = g.integer(0, 90);
      r.clean_voiced_frames = g.integer(0, 90);
    }
    rows.push_back(r);
  }
  const std::string text = features_csv(rows);
  const auto back = parse_features_csv(text);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].failed == rows[i].failed);
    CHECK(back[i].label == rows[i].label);
    if (rows[i].failed) continue;
    CHECK((back[i].error.e == rows[i].error.e).all());
    CHECK((back[i].degraded.x == rows[i].degraded.x).all());
    CHECK(back[i].degraded.voiced_frames == rows[i].degraded.voiced_frames);
    CHECK(back[i].clean_voiced_frames == rows[i].clean_voiced_frames);
  }
  CHECK(features_csv(back) == text);
  CHECK_THROWS_AS(parse_features_csv("utterance_id,G,C,D\nu,0,0,0\n"), SchemaError);

  // A row with some values blanked is neither failed nor valid.
  std::string broken = text;
  const auto line_start = broken.find("\nu0,") + 1;
  const auto comma = broken.find(',', broken.find(',', line_start + 10) + 1);
  broken.replace(comma + 1, broken.find(',', comma + 1) - comma - 1, "");
  CHECK_THROWS_AS(parse_features_csv(broken), ValueError);
}
