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

#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "vda/corpus.hpp"
#include "vda/dsp.hpp"
#include "vda/error.hpp"

namespace vda {
namespace {

constexpr int kSincZeros = 16;
constexpr double kKaiserBeta = 8.0;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double v) {
  if (std::abs(v) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - v * v)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

double rms(const Eigen::ArrayXd& x) {
  return x.size() ? std::sqrt(x.square().mean()) : 0.0;
}

}  // namespace

AudioSignal resample(const AudioSignal& sig, int target_rate) {
  if (target_rate <= 0) throw PreconditionError("resample: target rate must be positive");
  if (sig.rate <= 0) throw PreconditionError("resample: source rate must be positive");
  if (target_rate == sig.rate) return sig;

  const long g = std::gcd(long(sig.rate), long(target_rate));
  const long up = target_rate / g;
  const long down = sig.rate / g;
  const double ratio = double(target_rate) / double(sig.rate);
  const Eigen::Index out_len = Eigen::Index(std::llround(double(sig.size()) * ratio));

  // Polyphase table: output n sits at input position n*down/up, whose
  // fractional part cycles through up distinct phases.
  const double cutoff = std::min(1.0, ratio);
  const double half_width = kSincZeros / cutoff;
  const int reach = int(std::ceil(half_width));
  const int taps = 2 * reach + 2;
  Eigen::MatrixXd table(taps, up);
  for (long ph = 0; ph < up; ++ph) {
    const double frac = double(ph) / double(up);
    for (int j = 0; j < taps; ++j) {
      const double u = frac + reach - j;  // distance from tap to output time
      table(j, ph) = cutoff * sinc(cutoff * u) * kaiser(u / half_width);
    }
    const double sum = table.col(ph).sum();
    if (sum != 0.0) table.col(ph) /= sum;
  }

  AudioSignal out;
  out.rate = target_rate;
  out.samples.resize(out_len);
  const Eigen::Index len = sig.size();
  for (Eigen::Index n = 0; n < out_len; ++n) {
    const long long pos = (long long)n * down;
    const Eigen::Index base = Eigen::Index(pos / up);
    const long ph = long(pos % up);
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      const Eigen::Index k = base - reach + j;
      if (k >= 0 && k < len) acc += table(j, ph) * sig.samples[k];
    }
    out.samples[n] = acc;
  }
  return out;
}

AudioSignal load_canonical(const std::filesystem::path& path) {
  return resample(load_wav(path), kCanonicalRate);
}

AudioSignal delay(const AudioSignal& sig, int k) {
  AudioSignal out;
  out.rate = sig.rate;
  out.samples = Eigen::ArrayXd::Zero(sig.size());
  const Eigen::Index n = sig.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = i - k;
    if (src >= 0 && src < n) out.samples[i] = sig.samples[src];
  }
  return out;
}

AlignedPair align(const AudioSignal& clean, const AudioSignal& degraded, int max_lag) {
  if (clean.rate != degraded.rate) throw PreconditionError("align: sample rates differ");
  if (max_lag < 0) throw PreconditionError("align: max_lag must be >= 0");
  const Eigen::Index nc = clean.size(), nd = degraded.size();
  const Eigen::Index min_overlap = dsp::default_frame_len(clean.rate);

  // corr[lag] = sum_n c[n] d[n + lag], via one zero-padded FFT product.
  const Eigen::Index len = dsp::next_pow2(nc + nd);
  const Eigen::ArrayXcd cf = dsp::rfft(clean.samples, len);
  const Eigen::ArrayXcd df = dsp::rfft(degraded.samples, len);
  const Eigen::ArrayXd corr = dsp::irfft(cf.conjugate() * df, len);

  int best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    const Eigen::Index start = std::max<Eigen::Index>(0, -lag);
    const Eigen::Index end = std::min<Eigen::Index>(nc, nd - lag);
    if (end - start < min_overlap) continue;
    const double v = corr[(lag % len + len) % len];
    if (!found || v > best) {
      best = v;
      best_lag = lag;
      found = true;
    }
  }
  if (!found)
    throw AlignmentError(fmt::format("align: overlap shorter than one {}-sample frame", min_overlap));

  const Eigen::Index start = std::max<Eigen::Index>(0, -best_lag);
  const Eigen::Index end = std::min<Eigen::Index>(nc, nd - best_lag);
  AlignedPair pair;
  pair.applied_lag = best_lag;
  pair.clean.rate = pair.degraded.rate = clean.rate;
  pair.clean.samples = clean.samples.segment(start, end - start);
  pair.degraded.samples = degraded.samples.segment(start + best_lag, end - start);
  const double rd = rms(pair.degraded.samples);
  pair.applied_gain = rd > 0.0 ? rms(pair.clean.samples) / rd : 1.0;
  if (pair.applied_gain != 1.0) pair.degraded.samples *= pair.applied_gain;
  return pair;
}

}  // namespace vda
