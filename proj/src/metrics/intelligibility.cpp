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

// Coherence SII and normalized covariance metric. Both weight bands by
// speech-intelligibility band importance.

#include <array>
#include <cmath>
#include <numbers>

#include "vda/dsp.hpp"
#include "vda/metrics.hpp"

namespace vda::metrics {
namespace {

constexpr int kSiiBands = 20;
constexpr double kSiiFmin = 100.0;
constexpr double kSiiFmax = 7000.0;
constexpr double kSdrRange = 15.0;  // dB; mapped onto [0, 1]
constexpr double kNcmPadSeconds = 0.1;
constexpr double kEnvelopeCutoffHz = 25.0;
constexpr double kEnvelopeRate = 100.0;
constexpr Eigen::Index kEnvelopeOversample = 8;

// Critical-band importance for average speech (centers in Hz).
constexpr std::array<double, 21> kImportanceHz = {
    150, 250, 350, 450, 570, 700, 840, 1000, 1170, 1370, 1600,
    1850, 2150, 2500, 2900, 3400, 4000, 4800, 5800, 7000, 8500};
constexpr std::array<double, 21> kImportance = {
    0.0103, 0.0261, 0.0419, 0.0577, 0.0577, 0.0577, 0.0577, 0.0577, 0.0577, 0.0577, 0.0577,
    0.0577, 0.0577, 0.0577, 0.0577, 0.0577, 0.0577, 0.0460, 0.0343, 0.0226, 0.0110};

double to_unit(double sdr_db) {
  return (std::clamp(sdr_db, -kSdrRange, kSdrRange) + kSdrRange) / (2.0 * kSdrRange);
}

dsp::Filterbank sii_bank(int rate, Eigen::Index fft_len) {
  const double top = std::min(kSiiFmax, 0.5 * rate - rate / double(fft_len));
  return dsp::make_filterbank(dsp::FilterbankKind::kCriticalBand, rate, fft_len, kSiiBands,
                              kSiiFmin, top);
}

// Smallest even n' >= n whose only prime factors are 2, 3 and 5.
Eigen::Index fast_length(Eigen::Index n) {
  for (Eigen::Index m = std::max<Eigen::Index>(n + (n & 1), 2);; m += 2) {
    Eigen::Index r = m;
    for (Eigen::Index f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

void require_same_shape(const AlignedPair& pair) {
  if (pair.clean.size() != pair.degraded.size() || pair.clean.rate != pair.degraded.rate)
    throw PreconditionError("pair signals differ in length or rate");
}

}  // namespace

Eigen::ArrayXd sii_importance(const Eigen::Ref<const Eigen::ArrayXd>& center_hz) {
  Eigen::ArrayXd w(center_hz.size());
  for (Eigen::Index b = 0; b < center_hz.size(); ++b) {
    const double f = std::clamp(center_hz[b], kImportanceHz.front(), kImportanceHz.back());
    std::size_t k = 0;
    while (k + 2 < kImportanceHz.size() && f > kImportanceHz[k + 1]) ++k;
    const double t = std::log(f / kImportanceHz[k]) / std::log(kImportanceHz[k + 1] / kImportanceHz[k]);
    w[b] = kImportance[k] + t * (kImportance[k + 1] - kImportance[k]);
  }
  return w / w.sum();
}

Csii csii(const AlignedPair& pair) {
  require_same_shape(pair);
  const int rate = pair.rate();
  const Eigen::Index len = dsp::default_frame_len(rate);
  const Eigen::Index hop = dsp::default_hop(rate);
  const Eigen::Index fft_len = dsp::next_pow2(len);
  const auto cf = dsp::frame(pair.clean, len, hop);
  const auto df = dsp::frame(pair.degraded, len, hop);
  if (cf.count() == 0) throw PreconditionError("csii: pair shorter than one analysis frame");

  const auto bank = sii_bank(rate, fft_len);
  const Eigen::ArrayXd importance = sii_importance(bank.center_hz);
  const Eigen::ArrayXd window = dsp::make_window(dsp::Window::kHamming, len);

  const Eigen::Index n = cf.count();
  const Eigen::Index bins = fft_len / 2 + 1;
  Eigen::MatrixXcd xs(bins, n), ys(bins, n);
  Eigen::ArrayXd level(n);
  const double overall = std::sqrt(pair.clean.samples.square().mean());
  for (Eigen::Index i = 0; i < n; ++i) {
    xs.col(i) = dsp::rfft(cf[i] * window, fft_len).matrix();
    ys.col(i) = dsp::rfft(df[i] * window, fft_len).matrix();
    const double frame_rms = std::sqrt(cf[i].square().mean());
    level[i] = frame_rms > 0.0 && overall > 0.0 ? 20.0 * std::log10(frame_rms / overall)
                                                : -std::numeric_limits<double>::infinity();
  }

  auto region_value = [&](double lo, double hi) -> std::optional<double> {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (level[i] >= lo && level[i] < hi) idx.push_back(i);
    if (idx.empty()) return std::nullopt;

    // Magnitude-squared coherence across the frames of the region.
    Eigen::ArrayXcd cross = Eigen::ArrayXcd::Zero(bins);
    Eigen::ArrayXd pxx = Eigen::ArrayXd::Zero(bins), pyy = Eigen::ArrayXd::Zero(bins);
    for (auto i : idx) {
      cross += xs.col(i).array() * ys.col(i).array().conjugate();
      pxx += xs.col(i).array().abs2();
      pyy += ys.col(i).array().abs2();
    }
    Eigen::ArrayXd msc = Eigen::ArrayXd::Zero(bins);
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double den = pxx[k] * pyy[k];
      if (den > 0.0) msc[k] = std::clamp(std::norm(cross[k]) / den, 0.0, 1.0);
    }

    double total = 0.0;
    int frames = 0;
    for (auto i : idx) {
      const Eigen::ArrayXd py = ys.col(i).array().abs2();
      const Eigen::ArrayXd signal = bank.apply(msc * py);
      const Eigen::ArrayXd noise = bank.apply((1.0 - msc) * py);
      double num = 0.0, wsum = 0.0;
      for (Eigen::Index b = 0; b < bank.bands(); ++b) {
        if (signal[b] <= 0.0 && noise[b] <= 0.0) continue;  // band carries nothing
        const double sdr = noise[b] <= 0.0 ? kSdrRange
                          : signal[b] <= 0.0 ? -kSdrRange
                                             : 10.0 * std::log10(signal[b] / noise[b]);
        num += importance[b] * to_unit(sdr);
        wsum += importance[b];
      }
      if (wsum > 0.0) {
        total += num / wsum;
        ++frames;
      }
    }
    if (frames == 0) return std::nullopt;
    return total / frames;
  };

  Csii out;
  out.high = region_value(0.0, std::numeric_limits<double>::infinity());
  out.mid = region_value(-10.0, 0.0);
  out.low = region_value(-30.0, -10.0);
  if (!out.high && !out.mid && !out.low)
    throw DegenerateInputError("csii: no frames in any level region");
  return out;
}

double ncm(const AlignedPair& pair) {
  require_same_shape(pair);
  if (pair.clean.rate <= 0 || pair.clean.duration() < 0.384)
    throw PreconditionError("ncm: pair shorter than 384 ms");
  const int rate = pair.rate();
  const Eigen::Index len = pair.size();
  // Padding keeps the circular band filtering from wrapping onto the signal.
  const Eigen::Index fft_len = fast_length(len + Eigen::Index(std::lround(kNcmPadSeconds * rate)));
  const auto bank = sii_bank(rate, fft_len);
  const Eigen::ArrayXd importance = sii_importance(bank.center_hz);

  const Eigen::ArrayXcd xf = dsp::rfft(pair.clean.samples, fft_len);
  const Eigen::ArrayXcd yf = dsp::rfft(pair.degraded.samples, fft_len);
  const double bin_hz = rate / double(fft_len);
  const Eigen::Index lp_bins = Eigen::Index(std::floor(kEnvelopeCutoffHz / bin_hz));
  const double step = rate / kEnvelopeRate;
  const Eigen::Index out_len = Eigen::Index(std::ceil(len / step));

  // Hilbert envelope of one band, low-passed and sampled at 100 Hz. The band
  // is shifted to baseband first, which leaves the envelope unchanged and lets
  // it be computed on a decimated grid.
  auto envelope = [&](const Eigen::ArrayXcd& spec, Eigen::Index b, Eigen::Index lo, Eigen::Index hi,
                      Eigen::Index dec_len) {
    const Eigen::Index centre = (lo + hi) / 2;
    Eigen::ArrayXcd z = Eigen::ArrayXcd::Zero(dec_len);
    for (Eigen::Index k = lo; k <= hi; ++k) {
      const Eigen::Index slot = ((k - centre) % dec_len + dec_len) % dec_len;
      z[slot] += 2.0 * spec[k] * bank.weights(b, k);
    }
    const double ratio = double(dec_len) / double(fft_len);
    const Eigen::Index dec_samples = std::min(dec_len, Eigen::Index(std::ceil(len * ratio)));
    Eigen::ArrayXd env = Eigen::ArrayXd::Zero(dec_len);
    env.head(dec_samples) = (dsp::ifft(z) * ratio).head(dec_samples).abs();
    const Eigen::ArrayXcd es = dsp::rfft(env, dec_len);

    // Evaluate the band-limited envelope directly at the 100 Hz instants.
    Eigen::ArrayXd out(out_len);
    for (Eigen::Index i = 0; i < out_len; ++i) {
      const double t = i * step * ratio;  // position on the decimated grid
      double acc = es[0].real();
      for (Eigen::Index k = 1; k <= lp_bins; ++k) {
        const double phase = 2.0 * std::numbers::pi * double(k) * t / double(dec_len);
        acc += 2.0 * (es[k].real() * std::cos(phase) - es[k].imag() * std::sin(phase));
      }
      out[i] = acc / double(dec_len);
    }
    return out;
  };

  double num = 0.0, wsum = 0.0;
  for (Eigen::Index b = 0; b < bank.bands(); ++b) {
    Eigen::Index lo = 0, hi = bank.bins() - 1;
    while (lo < hi && bank.weights(b, lo) == 0.0) ++lo;
    while (hi > lo && bank.weights(b, hi) == 0.0) --hi;
    // Room for the envelope spectrum, which is wider than the band itself.
    const Eigen::Index dec_len = std::min(
        fft_len, fast_length(std::max(kEnvelopeOversample * (hi - lo + 1), 4 * (lp_bins + 1))));
    Eigen::ArrayXd ex = envelope(xf, b, lo, hi, dec_len);
    Eigen::ArrayXd ey = envelope(yf, b, lo, hi, dec_len);
    ex -= ex.mean();
    ey -= ey.mean();
    const double den = std::sqrt(ex.square().sum() * ey.square().sum());
    const double rho = den > 0.0 ? (ex * ey).sum() / den : 0.0;
    double snr;
    if (rho <= 0.0) {
      snr = -kSdrRange;
    } else if (rho * rho >= 1.0) {
      snr = kSdrRange;
    } else {
      snr = 10.0 * std::log10(rho * rho / (1.0 - rho * rho));
    }
    num += importance[b] * to_unit(snr);
    wsum += importance[b];
  }
  return num / wsum;
}

}  // namespace vda::metrics
