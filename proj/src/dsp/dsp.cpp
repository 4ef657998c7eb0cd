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

#include "vda/dsp.hpp"

#include <numbers>
#include <vector>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

namespace vda::dsp {
namespace {

Eigen::FFT<double>& half_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return f;
  }();
  return fft;
}

Eigen::FFT<double>& full_fft() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

}  // namespace

Eigen::ArrayXd make_window(Window w, Eigen::Index n) {
  Eigen::ArrayXd out(n);
  if (n == 1 || w == Window::kRect) return out.setOnes();
  const double denom = double(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = std::cos(2.0 * std::numbers::pi * double(i) / denom);
    out[i] = w == Window::kHann ? 0.5 - 0.5 * c : 0.54 - 0.46 * c;
  }
  return out;
}

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

Eigen::Index frame_count(Eigen::Index len, Eigen::Index frame_len, Eigen::Index hop) {
  if (frame_len <= 0 || hop <= 0 || len < frame_len) return 0;
  return (len - frame_len) / hop + 1;
}

FrameSequence frame(const Eigen::Ref<const Eigen::ArrayXd>& x, Eigen::Index frame_len,
                    Eigen::Index hop, int rate) {
  if (hop <= 0 || hop > frame_len)
    throw PreconditionError("frame: require 0 < hop <= frame_len");
  FrameSequence fs;
  fs.frame_len = frame_len;
  fs.hop = hop;
  fs.rate = rate;
  const Eigen::Index n = frame_count(x.size(), frame_len, hop);
  fs.frames.resize(frame_len, n);
  for (Eigen::Index i = 0; i < n; ++i) fs.frames.col(i) = x.segment(i * hop, frame_len).matrix();
  return fs;
}

Eigen::ArrayXd overlap_add(const Eigen::MatrixXd& frames, Eigen::Index hop) {
  if (frames.cols() == 0) return Eigen::ArrayXd();
  const Eigen::Index len = (frames.cols() - 1) * hop + frames.rows();
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(len);
  for (Eigen::Index i = 0; i < frames.cols(); ++i)
    out.segment(i * hop, frames.rows()) += frames.col(i).array();
  return out;
}

Eigen::ArrayXcd rfft(const Eigen::Ref<const Eigen::ArrayXd>& x, Eigen::Index n) {
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(n);
  const Eigen::Index m = std::min(n, x.size());
  padded.head(m) = x.head(m).matrix();
  Eigen::VectorXcd out;
  half_fft().fwd(out, padded);
  return out.array();
}

Eigen::ArrayXd irfft(const Eigen::Ref<const Eigen::ArrayXcd>& half, Eigen::Index n) {
  Eigen::VectorXcd in = half.matrix();
  Eigen::VectorXd out;
  half_fft().inv(out, in, n);
  return out.array();
}

Eigen::ArrayXcd ifft(const Eigen::Ref<const Eigen::ArrayXcd>& x) {
  Eigen::VectorXcd in = x.matrix();
  Eigen::VectorXcd out;
  full_fft().inv(out, in);
  return out.array();
}

Spectrum spectrum(const Eigen::Ref<const Eigen::ArrayXd>& frame, Window w, double rate,
                  Eigen::Index fft_len) {
  if (frame.size() < 2) throw PreconditionError("spectrum: frame length must be >= 2");
  if (fft_len == 0) fft_len = next_pow2(frame.size());
  if (fft_len < frame.size()) throw PreconditionError("spectrum: fft_len shorter than frame");
  Spectrum s;
  s.fft_len = fft_len;
  s.bin_hz = rate / double(fft_len);
  const Eigen::ArrayXd windowed = frame * make_window(w, frame.size());
  s.magnitudes = rfft(windowed, fft_len).abs();
  return s;
}

// --- Filterbanks -------------------------------------------------------------

Filterbank make_filterbank(FilterbankKind kind, double rate, Eigen::Index fft_len, int n_bands,
                           double fmin, std::optional<double> fmax) {
  if (!(fmin > 0.0)) throw ConfigError("filterbank: fmin must be positive");
  if (n_bands < 1) throw ConfigError("filterbank: need at least one band");
  if (fft_len < 2) throw ConfigError("filterbank: fft_len must be >= 2");
  const double nyquist = 0.5 * rate;
  const Eigen::Index bins = fft_len / 2 + 1;

  Filterbank fb;
  fb.kind = kind;
  fb.bin_hz = rate / double(fft_len);
  fb.weights = Eigen::MatrixXd::Zero(n_bands, bins);
  fb.center_hz.resize(n_bands);
  fb.lower_hz.resize(n_bands);
  fb.upper_hz.resize(n_bands);

  if (kind == FilterbankKind::kThirdOctave) {
    Eigen::ArrayXd edges(n_bands + 1);
    for (int k = 0; k <= n_bands; ++k) edges[k] = fmin * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    if (edges[n_bands] >= nyquist)
      throw ConfigError(fmt::format("filterbank: top edge {:.1f} Hz >= Nyquist {:.1f} Hz",
                                    edges[n_bands], nyquist));
    for (int b = 0; b < n_bands; ++b) {
      fb.center_hz[b] = fmin * std::pow(2.0, b / 3.0);
      fb.lower_hz[b] = edges[b];
      fb.upper_hz[b] = edges[b + 1];
      for (Eigen::Index k = 0; k < bins; ++k) {
        const double f = double(k) * fb.bin_hz;
        if (f >= edges[b] && f < edges[b + 1]) fb.weights(b, k) = 1.0;
      }
    }
  } else {
    const double top = fmax.value_or(nyquist - fb.bin_hz);
    if (top >= nyquist)
      throw ConfigError(fmt::format("filterbank: top edge {:.1f} Hz >= Nyquist {:.1f} Hz", top, nyquist));
    if (top <= fmin) throw ConfigError("filterbank: fmax must exceed fmin");
    const bool mel = kind == FilterbankKind::kMel;
    auto warp = [mel](double f) { return mel ? hz_to_mel(f) : hz_to_bark(f); };
    auto unwarp = [mel](double s) { return mel ? mel_to_hz(s) : bark_to_hz(s); };
    const double lo = warp(fmin);
    const double step = (warp(top) - lo) / double(n_bands + 1);
    for (int b = 0; b < n_bands; ++b) {
      const double sc = lo + (b + 1) * step;
      fb.lower_hz[b] = unwarp(sc - step);
      fb.center_hz[b] = unwarp(sc);
      fb.upper_hz[b] = unwarp(sc + step);
      for (Eigen::Index k = 0; k < bins; ++k) {
        const double f = double(k) * fb.bin_hz;
        if (f <= fb.lower_hz[b] || f >= fb.upper_hz[b]) continue;
        fb.weights(b, k) = std::max(0.0, 1.0 - std::abs(warp(f) - sc) / step);
      }
    }
  }
  for (int b = 0; b < n_bands; ++b) {
    if (!(fb.weights.row(b).maxCoeff() > 0.0))
      throw ConfigError(fmt::format("filterbank: band {} ({:.1f} Hz) covers no FFT bin", b,
                                    fb.center_hz[b]));
  }
  return fb;
}

// --- Pitch -------------------------------------------------------------------

std::optional<PitchEstimate> acf_peak(const Eigen::Ref<const Eigen::ArrayXd>& frame, double rate,
                                      double fmin, double fmax) {
  if (!(fmin > 0.0 && fmin < fmax && fmax <= 0.5 * rate))
    throw PreconditionError("pitch: require 0 < fmin < fmax <= rate/2");
  const Eigen::Index n = frame.size();
  const Eigen::ArrayXd x = frame - frame.mean();
  if (!(x.square().sum() > 0.0)) return std::nullopt;

  const Eigen::Index min_lag = std::max<Eigen::Index>(1, Eigen::Index(std::floor(rate / fmax)));
  const Eigen::Index max_lag = std::min<Eigen::Index>(n - 2, Eigen::Index(std::ceil(rate / fmin)));
  if (max_lag <= min_lag) return PitchEstimate{};

  // r(lag) normalized by the energies of both overlapping segments.
  auto nacf = [&](Eigen::Index lag) {
    const Eigen::Index m = n - lag;
    const auto a = x.head(m);
    const auto b = x.segment(lag, m);
    const double denom = std::sqrt(a.square().sum() * b.square().sum());
    return denom > 0.0 ? (a * b).sum() / denom : 0.0;
  };
  Eigen::ArrayXd r = Eigen::ArrayXd::Zero(max_lag + 2);
  for (Eigen::Index lag = min_lag - 1; lag <= max_lag + 1 && lag < n; ++lag) r[lag] = nacf(lag);

  const double global = r.segment(min_lag, max_lag - min_lag + 1).maxCoeff();
  if (!(global > 0.0)) return PitchEstimate{};
  // First local maximum close to the global one; avoids locking onto a
  // multiple of the period.
  Eigen::Index best = -1;
  for (Eigen::Index lag = min_lag; lag <= max_lag; ++lag) {
    if (r[lag] >= 0.9 * global && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
      best = lag;
      break;
    }
  }
  if (best < 0) {
    r.segment(min_lag, max_lag - min_lag + 1).maxCoeff(&best);
    best += min_lag;
  }
  const double ym = r[best - 1], y0 = r[best], yp = r[best + 1];
  const double curvature = ym - 2.0 * y0 + yp;
  double delta = 0.0;
  if (curvature < 0.0) delta = std::clamp(0.5 * (ym - yp) / curvature, -0.5, 0.5);
  PitchEstimate est;
  est.f0 = rate / (double(best) + delta);
  est.strength = std::min(1.0, y0 - 0.25 * (ym - yp) * delta);
  return est;
}

std::optional<double> pitch_acf(const Eigen::Ref<const Eigen::ArrayXd>& frame, double rate,
                                double fmin, double fmax) {
  auto est = acf_peak(frame, rate, fmin, fmax);
  if (!est || est->strength < kVoicingThreshold) return std::nullopt;
  return est->f0;
}

}  // namespace vda::dsp
