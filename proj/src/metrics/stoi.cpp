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

// Short-time objective intelligibility: correlation of short-time
// third-octave band envelopes of clean and degraded speech at 10 kHz.

#include <cmath>
#include <numbers>

#include "vda/dsp.hpp"
#include "vda/metrics.hpp"

namespace vda::metrics {
namespace {

constexpr int kRate = 10000;
constexpr Eigen::Index kFrameLen = 256;
constexpr Eigen::Index kHop = 128;
constexpr Eigen::Index kFftLen = 512;
constexpr int kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr Eigen::Index kSegment = 30;  // frames per envelope segment (384 ms)
constexpr double kBeta = -15.0;        // lower SDR bound, dB
constexpr double kEps = 2.220446049250313e-16;

// Hann of length 258 with the zero endpoints dropped.
Eigen::ArrayXd stoi_window() {
  Eigen::ArrayXd w(kFrameLen);
  for (Eigen::Index i = 0; i < kFrameLen; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i + 1) / double(kFrameLen + 1));
  return w;
}

// Drops frames whose clean energy is more than 40 dB below the loudest one
// and rebuilds both signals by overlap-add of the kept windowed frames.
void remove_silent_frames(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y, const Eigen::ArrayXd& w,
                          Eigen::ArrayXd& x_out, Eigen::ArrayXd& y_out) {
  const auto xf = dsp::frame(x, kFrameLen, kHop);
  const auto yf = dsp::frame(y, kFrameLen, kHop);
  const Eigen::Index n = xf.count();
  Eigen::ArrayXd energy(n);
  for (Eigen::Index i = 0; i < n; ++i)
    energy[i] = 20.0 * std::log10((xf[i] * w).matrix().norm() + kEps);
  const double top = n ? energy.maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (energy[i] > top - kSilenceRangeDb) keep.push_back(i);
  Eigen::MatrixXd xk(kFrameLen, Eigen::Index(keep.size()));
  Eigen::MatrixXd yk(kFrameLen, Eigen::Index(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    xk.col(Eigen::Index(j)) = (xf[keep[j]] * w).matrix();
    yk.col(Eigen::Index(j)) = (yf[keep[j]] * w).matrix();
  }
  x_out = dsp::overlap_add(xk, kHop);
  y_out = dsp::overlap_add(yk, kHop);
}

// Third-octave band magnitudes, bands x frames.
Eigen::MatrixXd band_envelopes(const Eigen::ArrayXd& x, const Eigen::ArrayXd& w,
                               const dsp::Filterbank& bank) {
  const auto frames = dsp::frame(x, kFrameLen, kHop);
  Eigen::MatrixXd out(bank.bands(), frames.count());
  for (Eigen::Index i = 0; i < frames.count(); ++i) {
    const Eigen::ArrayXd power = dsp::rfft(frames[i] * w, kFftLen).abs2();
    out.col(i) = bank.apply(power).sqrt().matrix();
  }
  return out;
}

}  // namespace

double stoi(const AlignedPair& pair) {
  if (pair.clean.rate <= 0 || pair.clean.duration() < 0.384)
    throw PreconditionError("stoi: pair shorter than 384 ms");
  const Eigen::ArrayXd x10 = resample(pair.clean, kRate).samples;
  const Eigen::ArrayXd y10 = resample(pair.degraded, kRate).samples;
  const Eigen::ArrayXd w = stoi_window();

  Eigen::ArrayXd x, y;
  remove_silent_frames(x10, y10, w, x, y);

  static const dsp::Filterbank bank =
      dsp::make_filterbank(dsp::FilterbankKind::kThirdOctave, kRate, kFftLen, kBands, kMinFreq);
  const Eigen::MatrixXd xb = band_envelopes(x, w, bank);
  const Eigen::MatrixXd yb = band_envelopes(y, w, bank);
  const Eigen::Index frames = xb.cols();
  if (frames < kSegment)
    throw PreconditionError("stoi: fewer than 30 speech-active frames after silence removal");

  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index m = kSegment; m <= frames; ++m) {
    for (Eigen::Index b = 0; b < bank.bands(); ++b) {
      const Eigen::ArrayXd xs = xb.row(b).segment(m - kSegment, kSegment).transpose().array();
      const Eigen::ArrayXd ys = yb.row(b).segment(m - kSegment, kSegment).transpose().array();
      const double alpha = xs.matrix().norm() / (ys.matrix().norm() + kEps);
      const Eigen::ArrayXd yp = (alpha * ys).min(xs * (1.0 + clip));
      Eigen::ArrayXd xn = xs - xs.mean();
      Eigen::ArrayXd yn = yp - yp.mean();
      xn /= xn.matrix().norm() + kEps;
      yn /= yn.matrix().norm() + kEps;
      total += (xn * yn).sum();
      ++count;
    }
  }
  return total / double(count);
}

}  // namespace vda::metrics
