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

// Frame-level acoustic descriptors in the style of the eGeMAPS minimal set,
// reduced to utterance means.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <fmt/format.h>
#include <unsupported/Eigen/Polynomials>

#include "vda/dsp.hpp"
#include "vda/error.hpp"
#include "vda/features.hpp"

namespace vda::features {
namespace {

constexpr int kRate = kCanonicalRate;
constexpr int kMelBands = 26;
constexpr int kCepstra = 4;
constexpr double kPitchMin = 60.0;
constexpr double kPitchMax = 500.0;
constexpr double kPreEmphasis = 0.97;
constexpr double kFormantMinHz = 90.0;
constexpr double kFormantMaxBandwidth = 600.0;
constexpr double kPowerFloor = 1e-20;
constexpr double kMinDuration = 0.1;

const char* const kNames[kFeatureCount] = {
    "intercept",          "loudness",           "alphaRatio",
    "hammarbergIndex",    "slope0-500",         "slope500-1500",
    "spectralFlux",       "mfcc1",              "mfcc2",
    "mfcc3",              "mfcc4",              "F0semitoneFrom27.5Hz",
    "jitterLocal",        "shimmerLocaldB",     "HNRdBACF",
    "logRelF0-H1-H2",     "logRelF0-H1-A3",     "F1frequency",
    "F1bandwidth",        "F1amplitudeLogRelF0", "F2frequency",
    "F2bandwidth",        "F2amplitudeLogRelF0", "F3frequency",
    "F3bandwidth",        "F3amplitudeLogRelF0"};

// Running mean per feature; features with no contributing frame stay 0.
struct Accumulator {
  FeatureArray sum = FeatureArray::Zero();
  Eigen::Array<int, kFeatureCount, 1> count = Eigen::Array<int, kFeatureCount, 1>::Zero();

  void add(int i, double v) {
    if (!std::isfinite(v)) return;
    sum[i] += v;
    ++count[i];
  }
  FeatureArray mean() const {
    FeatureArray out = FeatureArray::Zero();
    for (int i = 0; i < kFeatureCount; ++i)
      if (count[i] > 0) out[i] = sum[i] / count[i];
    return out;
  }
};

double band_energy(const Eigen::ArrayXd& power, double bin_hz, double lo, double hi) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < power.size(); ++k) {
    const double f = k * bin_hz;
    if (f >= lo && f < hi) acc += power[k];
  }
  return acc;
}

double band_peak(const Eigen::ArrayXd& mag, double bin_hz, double lo, double hi) {
  double peak = 0.0;
  for (Eigen::Index k = 0; k < mag.size(); ++k) {
    const double f = k * bin_hz;
    if (f >= lo && f < hi) peak = std::max(peak, mag[k]);
  }
  return peak;
}

// Least-squares slope of the dB power spectrum against frequency in Hz.
double spectral_slope(const Eigen::ArrayXd& power, double bin_hz, double lo, double hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (Eigen::Index k = 0; k < power.size(); ++k) {
    const double f = k * bin_hz;
    if (f < lo || f > hi) continue;
    const double y = 10.0 * std::log10(std::max(power[k], kPowerFloor));
    sx += f;
    sy += y;
    sxx += f * f;
    sxy += f * y;
    ++n;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || !(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

// Largest spectral magnitude near the h-th harmonic of f0.
double harmonic_magnitude(const Eigen::ArrayXd& mag, double bin_hz, double f0, int h) {
  const double target = h * f0;
  const Eigen::Index centre = Eigen::Index(std::lround(target / bin_hz));
  const Eigen::Index half = std::max<Eigen::Index>(1, Eigen::Index(std::lround(0.15 * f0 / bin_hz)));
  const Eigen::Index lo = std::max<Eigen::Index>(0, centre - half);
  const Eigen::Index hi = std::min<Eigen::Index>(mag.size() - 1, centre + half);
  if (lo > hi) return 0.0;
  return mag.segment(lo, hi - lo + 1).maxCoeff();
}

double db(double magnitude) { return 20.0 * std::log10(std::max(magnitude, 1e-10)); }

}  // namespace

const char* feature_name(int index) {
  if (index < 0 || index >= kFeatureCount) throw ValueError(fmt::format("feature index {} out of range", index));
  return kNames[index];
}

std::vector<Formant> formants(const Eigen::Ref<const Eigen::ArrayXd>& frame, double rate, int order,
                              int count) {
  const Eigen::Index n = frame.size();
  Eigen::ArrayXd x(n);
  x[0] = frame[0];
  for (Eigen::Index i = 1; i < n; ++i) x[i] = frame[i] - kPreEmphasis * frame[i - 1];
  x *= dsp::make_window(dsp::Window::kHamming, n);
  if (!(x.square().sum() > 0.0)) return {};
  const auto coeffs = dsp::lpc(x, order);

  // A(z) z^p = z^p + a1 z^(p-1) + ... + ap, coefficients in increasing degree.
  Eigen::VectorXd poly(order + 1);
  for (int k = 0; k <= order; ++k) poly[k] = coeffs.a[order - k];
  if (poly[0] == 0.0) return {};
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
  solver.compute(poly);

  std::vector<Formant> out;
  for (Eigen::Index k = 0; k < solver.roots().size(); ++k) {
    const std::complex<double> r = solver.roots()[k];
    if (r.imag() <= 0.0) continue;
    const double freq = std::arg(r) * rate / (2.0 * std::numbers::pi);
    const double bw = -(rate / std::numbers::pi) * std::log(std::abs(r));
    if (freq <= kFormantMinHz || freq >= 0.5 * rate - kFormantMinHz) continue;
    if (!(bw > 0.0) || bw >= kFormantMaxBandwidth) continue;
    out.push_back({freq, bw});
  }
  std::sort(out.begin(), out.end(),
            [](const Formant& a, const Formant& b) { return a.frequency < b.frequency; });
  if (int(out.size()) > count) out.resize(std::size_t(count));
  return out;
}

FeatureVector extract_features(const AudioSignal& input) {
  if (input.rate <= 0 || input.duration() < kMinDuration)
    throw PreconditionError("extract_features: signal shorter than 100 ms");
  const AudioSignal sig = resample(input, kRate);
  const Eigen::Index len = dsp::default_frame_len(kRate);
  const Eigen::Index hop = dsp::default_hop(kRate);
  const Eigen::Index fft_len = dsp::next_pow2(len);
  const double bin_hz = double(kRate) / double(fft_len);
  const auto frames = dsp::frame(sig, len, hop);

  static const dsp::Filterbank mel =
      dsp::make_filterbank(dsp::FilterbankKind::kMel, kRate, fft_len, kMelBands, 20.0);
  // Orthonormal DCT-II rows for cepstra 1..4.
  static const Eigen::MatrixXd dct = [] {
    Eigen::MatrixXd m(kCepstra, kMelBands);
    for (int k = 0; k < kCepstra; ++k)
      for (int b = 0; b < kMelBands; ++b)
        m(k, b) = std::sqrt(2.0 / kMelBands) * std::cos(std::numbers::pi * (k + 1) * (b + 0.5) / kMelBands);
    return m;
  }();

  Accumulator acc;
  Eigen::ArrayXd prev_mag;
  // NaN marks "previous frame unvoiced".
  double prev_period = std::numeric_limits<double>::quiet_NaN();
  double prev_amp = prev_period;
  int voiced = 0;
  double period_sum = 0.0;

  for (Eigen::Index t = 0; t < frames.count(); ++t) {
    const Eigen::ArrayXd raw = frames[t];
    const auto spec = dsp::spectrum(raw, dsp::Window::kHamming, kRate, fft_len);
    const Eigen::ArrayXd& mag = spec.magnitudes;
    const Eigen::ArrayXd power = mag.square();

    if (prev_mag.size() == mag.size()) acc.add(kSpectralFlux, (mag - prev_mag).square().mean());
    prev_mag = mag;

    if (power.sum() > 0.0) {
      const Eigen::ArrayXd mel_power = mel.apply(power);
      acc.add(kLoudness, mel_power.pow(0.3).sum());
      const Eigen::VectorXd cep = dct * mel_power.max(1e-10).log().matrix();
      for (int k = 0; k < kCepstra; ++k) acc.add(kMfcc1 + k, cep[k]);

      const double lo = band_energy(power, bin_hz, 50.0, 1000.0);
      const double hi = band_energy(power, bin_hz, 1000.0, 5000.0);
      if (lo > 0.0 && hi > 0.0) acc.add(kAlphaRatio, 10.0 * std::log10(lo / hi));
      const double plo = band_peak(mag, bin_hz, 0.0, 2000.0);
      const double phi = band_peak(mag, bin_hz, 2000.0, 5000.0);
      if (plo > 0.0 && phi > 0.0) acc.add(kHammarbergIndex, 20.0 * std::log10(plo / phi));
      acc.add(kSlope0To500, spectral_slope(power, bin_hz, 0.0, 500.0));
      acc.add(kSlope500To1500, spectral_slope(power, bin_hz, 500.0, 1500.0));
    }

    const auto peak = dsp::acf_peak(raw, kRate, kPitchMin, kPitchMax);
    if (!peak || peak->strength < dsp::kVoicingThreshold) {
      prev_period = prev_amp = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    ++voiced;
    const double f0 = peak->f0;
    acc.add(kF0Semitone, 12.0 * std::log2(f0 / 27.5));

    const double r = std::clamp(peak->strength, 1e-5, 1.0 - 1e-5);
    acc.add(kHnrDbAcf, 10.0 * std::log10(r / (1.0 - r)));

    // Amplitude over a whole number of periods so tonal frames compare equal.
    const double period = 1.0 / f0;
    period_sum += period;
    const int periods = std::max(1, int(std::floor(double(len) * f0 / kRate)));
    const Eigen::Index span = std::clamp<Eigen::Index>(Eigen::Index(std::lround(periods * kRate / f0)), 1, len);
    const double amp = std::sqrt(raw.head(span).square().mean());
    if (!std::isnan(prev_period)) acc.add(kJitterLocal, std::abs(period - prev_period));
    if (amp > 0.0 && prev_amp > 0.0)
      acc.add(kShimmerLocalDb, std::abs(20.0 * std::log10(amp / prev_amp)));
    prev_period = period;
    prev_amp = amp;

    const double h1 = db(harmonic_magnitude(mag, bin_hz, f0, 1));
    if (2.0 * f0 < 0.5 * kRate) acc.add(kLogRelF0H1H2, h1 - db(harmonic_magnitude(mag, bin_hz, f0, 2)));

    const auto fm = formants(raw, kRate);
    for (std::size_t k = 0; k < fm.size(); ++k) {
      const int base = kF1Frequency + 3 * int(k);
      const int h = std::max(1, int(std::lround(fm[k].frequency / f0)));
      const double amp_db = db(harmonic_magnitude(mag, bin_hz, f0, h)) - h1;
      acc.add(base, fm[k].frequency);
      acc.add(base + 1, fm[k].bandwidth);
      acc.add(base + 2, amp_db);
      if (k == 2) acc.add(kLogRelF0H1A3, -amp_db);
    }
  }

  FeatureVector fv;
  fv.x = acc.mean();
  // Mean absolute period difference relative to the mean period.
  if (acc.count[kJitterLocal] > 0) fv.x[kJitterLocal] /= period_sum / voiced;
  fv.voiced_frames = voiced;
  fv.x[kIntercept] = 1.0;
  return fv;
}

ErrorVector feature_error(const FeatureVector& clean, const FeatureVector& degraded) {
  ErrorVector ev;
  ev.e = (clean.x - degraded.x).abs();
  ev.e[kIntercept] = 1.0;
  return ev;
}

}  // namespace vda::features
