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

// Seeded synthetic corpus: speech-like utterances passed through planted
// platform, receiver and sender-denoise degradations.

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vda/dsp.hpp"
#include "vda/error.hpp"
#include "vda/pipeline.hpp"

namespace vda::pipeline {
namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// mt19937_64 is fully specified, so these draws are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + int(eng_() % std::uint64_t(hi - lo + 1)); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

struct Vowel {
  double f1, f2, f3;
};
constexpr Vowel kVowels[] = {{730, 1090, 2440}, {270, 2290, 3010}, {300, 870, 2240},
                             {530, 1840, 2480}, {570, 840, 2410}};
constexpr double kBandwidths[] = {80, 100, 140, 200};
constexpr double kF4 = 3500.0;

// Two-pole resonator with unit gain at DC.
struct Resonator {
  double a1 = 0, a2 = 0, b0 = 1, y1 = 0, y2 = 0;

  void tune(double freq, double bw, double rate) {
    const double r = std::exp(-kPi * bw / rate);
    a1 = -2.0 * r * std::cos(2.0 * kPi * freq / rate);
    a2 = r * r;
    b0 = 1.0 + a1 + a2;
  }
  double step(double x) {
    const double y = b0 * x - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

double rms(const Eigen::ArrayXd& x) { return std::sqrt(x.square().mean()); }

Eigen::ArrayXd white(Rng& rng, Eigen::Index n) {
  Eigen::ArrayXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.normal();
  return w;
}

// Applies a real gain curve gain(f) by zero-padded FFT filtering.
template <typename Gain>
Eigen::ArrayXd filter(const Eigen::ArrayXd& x, int rate, Gain gain) {
  const Eigen::Index n = dsp::next_pow2(x.size() + rate / 4);
  Eigen::ArrayXcd spec = dsp::rfft(x, n);
  for (Eigen::Index k = 0; k < spec.size(); ++k) spec[k] *= gain(double(k) * rate / double(n));
  return dsp::irfft(spec, n).head(x.size());
}

// Smooth band-pass with raised-cosine skirts an octave wide.
double band_gain(double f, double lo, double hi) {
  auto skirt = [](double t) { return t <= 0 ? 0.0 : t >= 1 ? 1.0 : 0.5 - 0.5 * std::cos(kPi * t); };
  return skirt(std::log2(std::max(f, 1.0) / (lo / 2.0))) * skirt(std::log2(2.0 * hi / std::max(f, 1.0)));
}

Eigen::ArrayXd add_noise(const Eigen::ArrayXd& x, const Eigen::ArrayXd& noise, double snr_db) {
  const double scale = rms(x) / (rms(noise) * std::pow(10.0, snr_db / 20.0));
  return x + scale * noise;
}

// Exponentially decaying noise tail with a unit direct path.
Eigen::ArrayXd reverberate(const Eigen::ArrayXd& x, int rate, Rng& rng, double rt60, double tail_db) {
  const Eigen::Index len = Eigen::Index(rt60 * rate);
  Eigen::ArrayXd ir = white(rng, len);
  for (Eigen::Index i = 0; i < len; ++i) ir[i] *= std::pow(10.0, -3.0 * double(i) / double(len));
  ir[0] = 0.0;
  ir *= std::pow(10.0, tail_db / 20.0) / ir.matrix().norm();
  ir[0] = 1.0;
  const Eigen::Index n = dsp::next_pow2(x.size() + len);
  const Eigen::ArrayXcd prod = dsp::rfft(x, n) * dsp::rfft(ir, n);
  return dsp::irfft(prod, n).head(x.size());
}

struct Rendered {
  AudioSignal degraded;
  AudioSignal variant;
};

Rendered render_condition(const AudioSignal& clean, const ConditionLabel& label, std::uint64_t seed) {
  Rng rng(seed);
  const int rate = clean.rate;
  const Eigen::ArrayXd& x = clean.samples;
  const Eigen::Index n = x.size();

  // Sender side: background noise, optionally suppressed with some dulling.
  const Eigen::ArrayXd pinkish = filter(white(rng, n), rate, [](double f) { return 1.0 / std::sqrt(std::max(f, 50.0) / 50.0); });
  Eigen::ArrayXd core = add_noise(x, pinkish, label.d ? 28.0 : 12.0);
  if (label.d) core = filter(core, rate, [](double f) { return f > 4000.0 ? 0.6 : 1.0; });

  // Platform codec.
  if (label.g) {
    core = filter(core, rate, [](double f) { return band_gain(f, 60.0, 7000.0); });
  } else {
    core = filter(core, rate, [](double f) { return band_gain(f, 100.0, 5500.0) * (1.0 + 0.15 * std::sin(f / 300.0)); });
  }

  // Receiver: cloud recording or a phone capture in a room.
  if (label.c) {
    core = add_noise(core, white(rng, n), 40.0);
  } else {
    core = filter(core, rate, [](double f) { return band_gain(f, 300.0, 3400.0); });
    core = reverberate(core, rate, rng, 0.25, -8.0);
    core = add_noise(core, white(rng, n), 30.0);
    core = (2.0 * core / core.abs().maxCoeff()).tanh() * (0.5 * core.abs().maxCoeff());
  }

  // Enhancement stand-in: halfway back towards the clean signal.
  const Eigen::ArrayXd enhanced = 0.5 * (core + x * (rms(core) / rms(x)));

  const int lag = rng.integer(0, 800);
  const double gain = rng.range(0.5, 1.5);
  auto place = [&](const Eigen::ArrayXd& s) {
    AudioSignal out{Eigen::ArrayXd::Zero(n + lag), rate};
    out.samples.tail(n) = gain * s;
    return out;
  };
  return {place(core), place(enhanced)};
}

std::string cell_tag(const ConditionLabel& l) { return fmt::format("g{}c{}d{}", l.g, l.c, l.d); }

}  // namespace

AudioSignal synth_utterance(std::uint64_t seed, double seconds, int rate) {
  if (!(seconds > 0.0) || rate <= 0) throw ConfigError("synth: duration and rate must be positive");
  Rng rng(seed);
  const Eigen::Index n = Eigen::Index(std::lround(seconds * rate));
  const double f0_base = rng.range(90.0, 210.0);
  const double vibrato_phase = rng.range(0.0, 2.0 * kPi);

  // Per-sample syllable plan: voiced amplitude, fricative amplitude, vowel.
  Eigen::ArrayXd voiced_env = Eigen::ArrayXd::Zero(n), fric_env = Eigen::ArrayXd::Zero(n);
  std::vector<int> vowel_at(std::size_t(n), 0);
  double t = rng.range(0.04, 0.09);
  while (t < seconds - 0.12) {
    const double dur = rng.range(0.14, 0.30);
    const int vowel = rng.integer(0, 4);
    const double level = rng.range(0.4, 1.0);
    const Eigen::Index s0 = Eigen::Index(t * rate), s1 = std::min(n, Eigen::Index((t + dur) * rate));
    for (Eigen::Index i = s0; i < s1; ++i) {
      const double ph = double(i - s0) / double(s1 - s0);
      voiced_env[i] = level * std::pow(std::sin(kPi * ph), 2);
      vowel_at[std::size_t(i)] = vowel;
    }
    t += dur;
    if (rng.uniform() < 0.4) {
      const double fdur = rng.range(0.04, 0.08);
      const Eigen::Index f0 = Eigen::Index(t * rate), f1 = std::min(n, Eigen::Index((t + fdur) * rate));
      for (Eigen::Index i = f0; i < f1; ++i)
        fric_env[i] = 0.12 * std::pow(std::sin(kPi * double(i - f0) / double(f1 - f0)), 2);
      t += fdur;
    }
    t += rng.range(0.03, 0.10);
  }

  std::array<Resonator, 4> tract;
  int tuned = -1;
  double phase = 0.0;
  Eigen::ArrayXd out(n);
  const Eigen::ArrayXd noise = white(rng, n);
  double hp1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double time = double(i) / rate;
    const double f0 = f0_base * (1.0 + 0.06 * std::sin(2.0 * kPi * 0.8 * time + vibrato_phase)) *
                      (1.0 - 0.12 * time / seconds);
    phase = std::fmod(phase + 2.0 * kPi * f0 / rate, 2.0 * kPi);
    double source = 0.0;
    if (voiced_env[i] > 0.0) {
      const int harmonics = int(0.45 * rate / f0);
      for (int h = 1; h <= harmonics; ++h) source += std::sin(h * phase) / h;
      source *= voiced_env[i];
    }
    const int v = vowel_at[std::size_t(i)];
    if (v != tuned && voiced_env[i] == 0.0) {
      const Vowel& vw = kVowels[v];
      const double freqs[4] = {vw.f1, vw.f2, vw.f3, kF4};
      for (int k = 0; k < 4; ++k) tract[std::size_t(k)].tune(freqs[k], kBandwidths[k], rate);
      tuned = v;
    }
    double y = source;
    for (auto& r : tract) y = r.step(y);
    // Fricatives: first-differenced noise, roughly high-pass.
    const double hp = noise[i] - hp1;
    hp1 = noise[i];
    out[i] = y + fric_env[i] * hp + 1e-4 * noise[i];
  }
  out *= 0.5 / out.abs().maxCoeff();
  return {out, rate};
}

void synthesize_corpus(const fs::path& out_dir, const SynthOptions& opts) {
  if (opts.utterances < 1) throw ConfigError("synth: need at least one utterance");
  if (opts.variant.empty()) throw ConfigError("synth: variant name must not be empty");
  CorpusManifest base, variant;
  for (int u = 0; u < opts.utterances; ++u) {
    const std::string id = fmt::format("u{:02d}", u);
    const AudioSignal clean = synth_utterance(splitmix64(opts.seed) ^ std::uint64_t(u), opts.seconds);
    const std::string clean_rel = fmt::format("clean/{}.wav", id);
    write_wav(out_dir / clean_rel, clean);
    for (int cell = 0; cell < kConditionCells; ++cell) {
      const ConditionLabel label = ConditionLabel::from_cell(cell);
      const std::uint64_t seed = splitmix64(opts.seed * 1000003ull + std::uint64_t(u) * 16 + std::uint64_t(cell));
      const Rendered r = render_condition(clean, label, seed);
      const std::string deg_rel = fmt::format("degraded/{}_{}.wav", id, cell_tag(label));
      const std::string var_rel = fmt::format("{}/{}_{}.wav", opts.variant, id, cell_tag(label));
      write_wav(out_dir / deg_rel, r.degraded);
      write_wav(out_dir / var_rel, r.variant);
      base.entries.push_back({id, clean_rel, deg_rel, label, std::nullopt});
      variant.entries.push_back({id, clean_rel, var_rel, label, std::nullopt});
    }
    spdlog::debug("synthesized {}", id);
  }
  write_manifest(out_dir / "manifest.csv", base);
  write_manifest(out_dir / fmt::format("manifest_{}.csv", opts.variant), variant);
}

int cmd_synth(const RunConfig& cfg, const SynthOptions& opts) {
  SynthOptions o = opts;
  o.seed = cfg.seed;
  synthesize_corpus(cfg.output_dir, o);
  spdlog::info("synthesized {} utterances x {} conditions into {}", o.utterances, kConditionCells,
               cfg.output_dir.string());
  return 0;
}

}  // namespace vda::pipeline
