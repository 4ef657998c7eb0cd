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

#include <cmath>
#include <optional>

#include <Eigen/Core>

#include "vda/corpus.hpp"
#include "vda/error.hpp"

namespace vda::dsp {

enum class Window { kHann, kHamming, kRect };

/// Symmetric window of length n.
Eigen::ArrayXd make_window(Window w, Eigen::Index n);

Eigen::Index next_pow2(Eigen::Index n);

// Analysis defaults: 25 ms Hamming frames every 10 ms.
inline Eigen::Index default_frame_len(int rate) { return Eigen::Index(std::lround(0.025 * rate)); }
inline Eigen::Index default_hop(int rate) { return Eigen::Index(std::lround(0.010 * rate)); }

/// floor((len - frame_len) / hop) + 1 for len >= frame_len, else 0.
Eigen::Index frame_count(Eigen::Index len, Eigen::Index frame_len, Eigen::Index hop);

/// Frames are stored column-wise: frames.col(i) is frame i.
struct FrameSequence {
  Eigen::MatrixXd frames;
  Eigen::Index frame_len = 0;
  Eigen::Index hop = 0;
  int rate = 0;

  Eigen::Index count() const { return frames.cols(); }
  auto operator[](Eigen::Index i) const { return frames.col(i).array(); }
};

FrameSequence frame(const Eigen::Ref<const Eigen::ArrayXd>& x, Eigen::Index frame_len,
                    Eigen::Index hop, int rate = 0);
inline FrameSequence frame(const AudioSignal& sig, Eigen::Index frame_len, Eigen::Index hop) {
  return frame(sig.samples, frame_len, hop, sig.rate);
}

/// Overlap-add of column frames spaced by hop.
Eigen::ArrayXd overlap_add(const Eigen::MatrixXd& frames, Eigen::Index hop);

/// Real FFT of x zero-padded to n; returns the n/2 + 1 non-negative bins.
Eigen::ArrayXcd rfft(const Eigen::Ref<const Eigen::ArrayXd>& x, Eigen::Index n);
/// Inverse of rfft for an n-point transform.
Eigen::ArrayXd irfft(const Eigen::Ref<const Eigen::ArrayXcd>& half, Eigen::Index n);
/// Full complex inverse FFT (scaled by 1/n).
Eigen::ArrayXcd ifft(const Eigen::Ref<const Eigen::ArrayXcd>& x);

struct Spectrum {
  Eigen::ArrayXd magnitudes;
  double bin_hz = 0.0;
  Eigen::Index fft_len = 0;
};

/// |FFT| of the windowed frame. fft_len = 0 picks the next power of two.
/// With rate = 1 the bin spacing is in cycles per sample.
Spectrum spectrum(const Eigen::Ref<const Eigen::ArrayXd>& frame, Window w, double rate = 1.0,
                  Eigen::Index fft_len = 0);

// --- Filterbanks -------------------------------------------------------------

enum class FilterbankKind { kThirdOctave, kCriticalBand, kMel };

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }
// Traunmueller's Bark approximation.
inline double hz_to_bark(double f) { return 26.81 * f / (1960.0 + f) - 0.53; }
inline double bark_to_hz(double z) { return 1960.0 * (z + 0.53) / (26.28 - z); }

struct Filterbank {
  FilterbankKind kind{};
  Eigen::MatrixXd weights;  // bands x bins
  Eigen::ArrayXd center_hz;
  Eigen::ArrayXd lower_hz;
  Eigen::ArrayXd upper_hz;
  double bin_hz = 0.0;

  Eigen::Index bands() const { return weights.rows(); }
  Eigen::Index bins() const { return weights.cols(); }
  /// weights * values for a single column of per-bin values.
  Eigen::ArrayXd apply(const Eigen::Ref<const Eigen::ArrayXd>& bin_values) const {
    return (weights * bin_values.matrix()).array();
  }
};

/// Third-octave: rectangular bands with centers fmin * 2^(k/3), edges at the
/// geometric midpoints. Critical-band and mel: triangles evenly spaced on the
/// Bark or mel scale between fmin and fmax (default: one bin below Nyquist).
Filterbank make_filterbank(FilterbankKind kind, double rate, Eigen::Index fft_len, int n_bands,
                           double fmin, std::optional<double> fmax = std::nullopt);

// --- LPC ---------------------------------------------------------------------

template <typename Scalar>
struct LpcCoefficients {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> a;  // a[0] == 1
  Scalar gain{};                               // final prediction-error energy
};

/// Biased autocorrelation r[0..max_lag].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> autocorrelation(
    const Eigen::DenseBase<Derived>& x, Eigen::Index max_lag) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(max_lag + 1);
  for (Eigen::Index k = 0; k <= max_lag && k < n; ++k) {
    Scalar acc(0);
    for (Eigen::Index i = 0; i + k < n; ++i) acc += x.derived().coeff(i) * x.derived().coeff(i + k);
    r[k] = acc;
  }
  return r;
}

/// Levinson-Durbin recursion on autocorrelation r[0..order].
template <typename Derived>
LpcCoefficients<typename Derived::Scalar> levinson(const Eigen::DenseBase<Derived>& r, int order) {
  using Scalar = typename Derived::Scalar;
  const auto& rr = r.derived();
  if (!(rr.coeff(0) > Scalar(0))) throw DegenerateInputError("lpc: zero-energy frame");
  LpcCoefficients<Scalar> out;
  out.a = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(order + 1);
  out.a[0] = Scalar(1);
  Scalar err = rr.coeff(0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> prev = out.a;
  for (int i = 1; i <= order; ++i) {
    Scalar acc = rr.coeff(i);
    for (int j = 1; j < i; ++j) acc += out.a[j] * rr.coeff(i - j);
    const Scalar k = -acc / err;
    prev = out.a;
    for (int j = 1; j < i; ++j) out.a[j] = prev[j] + k * prev[i - j];
    out.a[i] = k;
    err *= (Scalar(1) - k * k);
    if (!(err > Scalar(0))) {  // exactly predictable: higher orders add nothing
      err = Scalar(0);
      break;
    }
  }
  out.gain = err;
  return out;
}

/// Autocorrelation-method LPC of an (already windowed) frame.
template <typename Derived>
LpcCoefficients<typename Derived::Scalar> lpc(const Eigen::DenseBase<Derived>& frame, int order) {
  if (order < 1 || order >= frame.size())
    throw PreconditionError("lpc: order must be in [1, frame length)");
  return levinson(autocorrelation(frame, order), order);
}

// --- Pitch -------------------------------------------------------------------

inline constexpr double kVoicingThreshold = 0.45;

struct PitchEstimate {
  double f0 = 0.0;        // Hz
  double strength = 0.0;  // normalized autocorrelation at the chosen peak
};

/// Normalized-ACF pitch with parabolic peak refinement over lags
/// [rate/fmax, rate/fmin]. Returns the chosen peak even when unvoiced;
/// nullopt only when the frame has no energy.
std::optional<PitchEstimate> acf_peak(const Eigen::Ref<const Eigen::ArrayXd>& frame, double rate,
                                      double fmin, double fmax);

/// F0 in Hz, or nullopt for unvoiced frames (peak strength below 0.45).
std::optional<double> pitch_acf(const Eigen::Ref<const Eigen::ArrayXd>& frame, double rate,
                                double fmin, double fmax);

}  // namespace vda::dsp
