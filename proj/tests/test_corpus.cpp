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

#include <cstring>
#include <fstream>

#include "support.hpp"
#include "vda/corpus.hpp"
#include "vda/csv.hpp"
#include "vda/dsp.hpp"
#include "vda/error.hpp"

using namespace vda;
using Catch::Approx;

namespace {

// Minimal hand-built PCM16 RIFF file, independent of write_wav.
void write_raw_pcm16(const std::filesystem::path& p, int rate, int channels, const std::vector<std::int16_t>& data) {
  std::ofstream f(p, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  const std::uint32_t bytes = std::uint32_t(data.size() * 2);
  f.write("RIFF", 4);
  u32(36 + bytes);
  f.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(std::uint16_t(channels));
  u32(std::uint32_t(rate));
  u32(std::uint32_t(rate * channels * 2));
  u16(std::uint16_t(channels * 2));
  u16(16);
  f.write("data", 4);
  u32(bytes);
  f.write(reinterpret_cast<const char*>(data.data()), std::streamsize(bytes));
}

Eigen::Index peak_bin(const Eigen::ArrayXd& x) {
  const Eigen::ArrayXd mag = dsp::rfft(x, x.size()).abs();
  Eigen::Index k;
  mag.maxCoeff(&k);
  return k;
}

}  // namespace

TEST_CASE("load_wav reads PCM16 silence", "[corpus][wav]") {
  test::TempDir dir("wav");
  write_raw_pcm16(dir.path() / "z.wav", 16000, 1, std::vector<std::int16_t>(16000, 0));
  const AudioSignal s = load_wav(dir.path() / "z.wav");
  CHECK(s.rate == 16000);
  CHECK(s.size() == 16000);
  CHECK(s.samples.abs().maxCoeff() == 0.0);
}

TEST_CASE("load_wav averages symmetric stereo to zeros", "[corpus][wav]") {
  test::TempDir dir("wav");
  std::vector<std::int16_t> data;
  for (int i = 0; i < 800; ++i) {
    data.push_back(16384);
    data.push_back(-16384);
  }
  write_raw_pcm16(dir.path() / "s.wav", 8000, 2, data);
  const AudioSignal s = load_wav(dir.path() / "s.wav");
  CHECK(s.size() == 800);
  CHECK(s.samples.abs().maxCoeff() == 0.0);
}

TEST_CASE("load_wav scales PCM16 by 1/32768", "[corpus][wav]") {
  test::TempDir dir("wav");
  write_raw_pcm16(dir.path() / "h.wav", 16000, 1, {16384, -32768, 32767});
  const AudioSignal s = load_wav(dir.path() / "h.wav");
  CHECK(s.samples[0] == 0.5);
  CHECK(s.samples[1] == -1.0);
  CHECK(s.samples[2] == 32767.0 / 32768.0);
}

TEST_CASE("write_wav round-trips float32 and PCM16", "[corpus][wav]") {
  test::TempDir dir("wav");
  test::Gen g(3);
  // Values exactly representable in float and at 1/32768 resolution.
  Eigen::ArrayXd x(256);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = double(g.integer(-32768, 32767)) / 32768.0;
  const AudioSignal sig{x, 22050};
  write_wav(dir.path() / "f.wav", sig);
  write_wav(dir.path() / "p.wav", sig, WavEncoding::kPcm16);
  for (const char* name : {"f.wav", "p.wav"}) {
    const AudioSignal back = load_wav(dir.path() / name);
    CHECK(back.rate == 22050);
    CHECK((back.samples - x).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("load_wav rejects garbage and unsupported encodings", "[corpus][wav]") {
  test::TempDir dir("wav");
  csv::write_text(dir.path() / "bad.wav", "not a wave file at all, definitely not");
  CHECK_THROWS_AS(load_wav(dir.path() / "bad.wav"), FormatError);
  CHECK_THROWS_AS(load_wav(dir.path() / "absent.wav"), Error);
}

TEST_CASE("resample identity, length and tone position", "[corpus][resample]") {
  const AudioSignal x = test::speech_shaped(1, 0.5);
  const AudioSignal same = resample(x, 16000);
  CHECK((same.samples - x.samples).abs().maxCoeff() == 0.0);

  const AudioSignal one_second = test::sine(1000.0, 1.0);
  const AudioSignal down = resample(one_second, 10000);
  CHECK(down.rate == 10000);
  CHECK(down.size() == 10000);
  // 10000-point FFT at 10 kHz has 1 Hz bins.
  CHECK(std::abs(double(peak_bin(down.samples)) - 1000.0) <= 1.0);
}

TEST_CASE("resample preserves a low tone in both directions", "[corpus][resample]") {
  const AudioSignal tone = test::sine(440.0, 0.5, 8000);
  const AudioSignal up = resample(tone, 16000);
  CHECK(up.size() == 8000);
  const AudioSignal expect = test::sine(440.0, 0.5, 16000);
  // Away from the edges the interpolated tone matches the analytic one.
  const double err = (up.samples.segment(400, 7200) - expect.samples.segment(400, 7200)).abs().maxCoeff();
  CHECK(err < 5e-3);
}

TEST_CASE("align recovers a constructed delay", "[corpus][align]") {
  const AudioSignal x = test::speech_shaped(2, 1.0);
  const AlignedPair p = align(x, delay(x, 160), 1000);
  CHECK(p.applied_lag == 160);
  CHECK(p.clean.size() == p.degraded.size());
  CHECK((p.clean.samples - p.degraded.samples).matrix().norm() < 1e-9);
}

TEST_CASE("align on identical inputs", "[corpus][align]") {
  const AudioSignal x = test::speech_shaped(3, 0.6);
  const AlignedPair p = align(x, x, 500);
  CHECK(p.applied_lag == 0);
  CHECK(p.applied_gain == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("align matches an exhaustive lag scan and RMS ratio", "[corpus][align]") {
  const AudioSignal x = test::speech_shaped(4, 0.5);
  const AudioSignal y{0.25 * delay(x, 37).samples, x.rate};
  const int max_lag = 200;

  int best = 0;
  double best_score = -1e300;
  for (int k = -max_lag; k <= max_lag; ++k) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < x.size(); ++n) {
      const Eigen::Index m = n + k;
      if (m >= 0 && m < y.size()) s += x.samples[n] * y.samples[m];
    }
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  REQUIRE(best == 37);
  const AlignedPair p = align(x, y, max_lag);
  CHECK(p.applied_lag == best);
  const Eigen::Index len = x.size() - 37;
  const double oracle_gain = std::sqrt(x.samples.head(len).square().sum() / y.samples.tail(len).square().sum());
  CHECK(p.applied_gain == Approx(oracle_gain).margin(1e-9));
  CHECK(p.applied_gain == Approx(4.0).margin(1e-6));
}

TEST_CASE("align is shift-consistent", "[corpus][align][property]") {
  test::Gen g(11);
  const AudioSignal x = test::speech_shaped(5, 0.5);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = g.integer(-300, 300);
    const AlignedPair p = align(x, delay(x, k), 300);
    CHECK(p.applied_lag == k);
    CHECK(p.clean.size() == p.degraded.size());
    CHECK(p.clean.size() <= x.size());
  }
}

TEST_CASE("align rejects bad inputs", "[corpus][align]") {
  const AudioSignal x = test::speech_shaped(6, 0.2);
  CHECK_THROWS_AS(align(x, resample(x, 8000), 100), PreconditionError);
  CHECK_THROWS_AS(align(x, x, -1), PreconditionError);
  const AudioSignal tiny{x.samples.head(100), x.rate};
  CHECK_THROWS_AS(align(tiny, tiny, 10), AlignmentError);
}

TEST_CASE("parse_manifest basic mapping", "[corpus][manifest]") {
  const auto empty = parse_manifest_text("utterance_id,clean_path,degraded_path,G,C,D\n");
  CHECK(empty.entries.empty());

  const auto m = parse_manifest_text("utterance_id,clean_path,degraded_path,G,C,D,pesq\nu1,a.wav,b.wav,1,0,1,2.5\n");
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].label == ConditionLabel{1, 0, 1});
  REQUIRE(m.entries[0].external_pesq.has_value());
  CHECK(*m.entries[0].external_pesq == 2.5);
}

TEST_CASE("parse_manifest value errors name the row", "[corpus][manifest]") {
  const std::string text =
      "utterance_id,clean_path,degraded_path,G,C,D\nu1,a.wav,b.wav,0,0,0\nu2,a.wav,b.wav,2,0,0\n";
  try {
    parse_manifest_text(text);
    FAIL("expected a value error");
  } catch (const ValueError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_manifest_text("utterance_id,clean_path,G,C,D\nu,a,0,0,0\n"), SchemaError);
}

TEST_CASE("manifest write then parse is the identity", "[corpus][manifest][property]") {
  test::Gen g(21);
  for (int trial = 0; trial < 10; ++trial) {
    CorpusManifest m;
    const int n = g.integer(0, 12);
    for (int i = 0; i < n; ++i) {
      ManifestEntry e;
      e.utterance_id = "utt" + std::to_string(g.integer(0, 99)) + (g.uniform() < 0.3 ? ",quoted" : "");
      e.clean_path = "clean/" + std::to_string(i) + ".wav";
      e.degraded_path = "deg/" + std::to_string(i) + " x.wav";
      e.label = ConditionLabel::from_cell(g.integer(0, 7));
      if (g.uniform() < 0.5) e.external_pesq = g.uniform(1.0, 4.5);
      m.entries.push_back(e);
    }
    const auto back = parse_manifest_text(manifest_text(m));
    CHECK(back.entries == m.entries);
  }
}

TEST_CASE("validate_manifest reports counts, missing files and duplicates", "[corpus][manifest]") {
  test::TempDir dir("manifest");
  write_wav(dir.path() / "c.wav", test::sine(200.0, 0.1));
  write_wav(dir.path() / "d.wav", test::sine(200.0, 0.1));
  CorpusManifest m;
  m.base_dir = dir.path();
  for (int u = 0; u < 2; ++u)
    for (int cell = 0; cell < kConditionCells; ++cell)
      m.entries.push_back({"u" + std::to_string(u), "c.wav", "d.wav", ConditionLabel::from_cell(cell), {}});
  const auto ok = validate_manifest(m);
  CHECK(ok.ok());
  CHECK(ok.str().rfind("ok", 0) == 0);
  for (int c : ok.cell_counts) CHECK(c == 2);

  auto broken = m;
  broken.entries[3].clean_path = "gone.wav";
  broken.entries.push_back(broken.entries[0]);
  const auto bad = validate_manifest(broken);
  CHECK_FALSE(bad.ok());
  REQUIRE(bad.missing.size() == 1);
  CHECK(bad.missing[0].find("gone.wav") != std::string::npos);
  REQUIRE(bad.duplicates.size() == 1);
  CHECK(bad.duplicates[0].find("u0") != std::string::npos);
}
