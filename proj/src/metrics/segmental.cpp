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

#include <algorithm>
#include <cmath>

#include "vda/dsp.hpp"
#include "vda/metrics.hpp"

namespace vda::metrics {
namespace {

constexpr int kLpcOrder = 10;
constexpr int kFwBands = 25;
constexpr int kWssBands = 36;
constexpr double kBandFmin = 50.0;
constexpr double kFwGamma = 0.2;
constexpr double kWssKmax = 20.0;
constexpr double kWssKlocmax = 1.0;

struct Framing {
  dsp::FrameSequence clean;
  dsp::FrameSequence degraded;
};

Framing frames_of(const AlignedPair& pair) {
  if (pair.clean.size() != pair.degraded.size() || pair.clean.rate != pair.degraded.rate)
    throw PreconditionError("pair signals differ in length or rate");
  const Eigen::Index len = dsp::default_frame_len(pair.rate());
  const Eigen::Index hop = dsp::default_hop(pair.rate());
  Framing f{dsp::frame(pair.clean, len, hop), dsp::frame(pair.degraded, len, hop)};
  if (f.clean.count() == 0) throw PreconditionError("pair shorter than one analysis frame");
  return f;
}

double clamp_snr(double db) { return std::clamp(db, kSnrFloor, kSnrCeil); }

// 10 log10(signal / error) with the degenerate cases pinned to the clamp range.
double ratio_db(double signal, double error) {
  if (error <= 0.0) return kSnrCeil;
  if (signal <= 0.0) return kSnrFloor;
  return clamp_snr(10.0 * std::log10(signal / error));
}

}  // namespace

double trimmed_mean(std::vector<double> values, double keep) {
  if (values.empty()) throw DegenerateInputError("trimmed_mean: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = std::max<std::size_t>(1, std::size_t(std::lround(keep * double(values.size()))));
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += values[i];
  return acc / double(n);
}

std::vector<bool> active_frame_mask(const AlignedPair& pair) {
  const Framing f = frames_of(pair);
  const Eigen::Index n = f.clean.count();
  Eigen::ArrayXd energy(n);
  for (Eigen::Index i = 0; i < n; ++i) energy[i] = f.clean[i].square().sum();
  const double top = energy.maxCoeff();
  std::vector<bool> mask(std::size_t(n), false);
  if (!(top > 0.0)) return mask;
  const double floor = top * std::pow(10.0, -kSilenceRangeDb / 10.0);
  for (Eigen::Index i = 0; i < n; ++i) mask[std::size_t(i)] = energy[i] > 0.0 && energy[i] >= floor;
  return mask;
}

double snr_seg(const AlignedPair& pair) {
  const Framing f = frames_of(pair);
  const auto mask = active_frame_mask(pair);
  double total = 0.0;
  int used = 0;
  for (Eigen::Index i = 0; i < f.clean.count(); ++i) {
    if (!mask[std::size_t(i)]) continue;
    const double signal = f.clean[i].square().sum();
    const double error = (f.clean[i] - f.degraded[i]).square().sum();
    total += ratio_db(signal, error);
    ++used;
  }
  if (used == 0) throw DegenerateInputError("snr_seg: all clean frames are silent");
  return clamp_snr(total / used);
}

double fw_snr_frame(const Eigen::Ref<const Eigen::ArrayXd>& clean_bands,
                    const Eigen::Ref<const Eigen::ArrayXd>& degraded_bands) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index b = 0; b < clean_bands.size(); ++b) {
    const double c = clean_bands[b];
    const double diff = c - degraded_bands[b];
    const double snr = ratio_db(c * c, diff * diff);
    const double w = std::pow(c, kFwGamma);
    num += w * snr;
    den += w;
  }
  if (!(den > 0.0)) throw DegenerateInputError("fw_snr_seg: clean frame has no band energy");
  // A weighted mean of clamped values can round just past the bounds.
  return clamp_snr(num / den);
}

double fw_snr_seg(const AlignedPair& pair) {
  const Framing f = frames_of(pair);
  const auto mask = active_frame_mask(pair);
  const Eigen::Index fft_len = dsp::next_pow2(f.clean.frame_len);
  const auto bank = dsp::make_filterbank(dsp::FilterbankKind::kCriticalBand, pair.rate(), fft_len,
                                         kFwBands, kBandFmin);
  double total = 0.0;
  int used = 0;
  for (Eigen::Index i = 0; i < f.clean.count(); ++i) {
    if (!mask[std::size_t(i)]) continue;
    const auto cs = dsp::spectrum(f.clean[i], dsp::Window::kHamming, pair.rate(), fft_len);
    const auto ds = dsp::spectrum(f.degraded[i], dsp::Window::kHamming, pair.rate(), fft_len);
    const Eigen::ArrayXd cb = bank.apply(cs.magnitudes);
    if (!(cb.maxCoeff() > 0.0)) continue;
    total += fw_snr_frame(cb, bank.apply(ds.magnitudes));
    ++used;
  }
  if (used == 0) throw DegenerateInputError("fw_snr_seg: all clean frames are silent");
  return clamp_snr(total / used);
}

double llr(const AlignedPair& pair) {
  const Framing f = frames_of(pair);
  const Eigen::ArrayXd w = dsp::make_window(dsp::Window::kHamming, f.clean.frame_len);
  std::vector<double> values;
  for (Eigen::Index i = 0; i < f.clean.count(); ++i) {
    const Eigen::ArrayXd c = f.clean[i] * w;
    const Eigen::ArrayXd d = f.degraded[i] * w;
    const Eigen::VectorXd rc = dsp::autocorrelation(c, kLpcOrder);
    const Eigen::VectorXd rd = dsp::autocorrelation(d, kLpcOrder);
    if (!(rc[0] > 0.0) || !(rd[0] > 0.0)) continue;
    const auto ac = dsp::levinson(rc, kLpcOrder).a;
    const auto ad = dsp::levinson(rd, kLpcOrder).a;
    Eigen::MatrixXd toeplitz(kLpcOrder + 1, kLpcOrder + 1);
    for (int r = 0; r <= kLpcOrder; ++r)
      for (int s = 0; s <= kLpcOrder; ++s) toeplitz(r, s) = rc[std::abs(r - s)];
    const double num = ad.dot(toeplitz * ad);
    const double den = ac.dot(toeplitz * ac);
    if (!(den > 0.0) || !(num > 0.0)) continue;
    values.push_back(std::log(num / den));
  }
  if (values.empty()) throw DegenerateInputError("llr: every frame is degenerate");
  return trimmed_mean(std::move(values));
}

double wss_frame(const Eigen::Ref<const Eigen::ArrayXd>& clean_db,
                 const Eigen::Ref<const Eigen::ArrayXd>& degraded_db) {
  const Eigen::Index nb = clean_db.size();
  if (nb < 2 || degraded_db.size() != nb) throw PreconditionError("wss: need >= 2 matching bands");

  // Weight of each slope: closeness to the spectrum's global maximum times
  // closeness to the nearest local peak in the slope's direction.
  auto weights = [nb](const Eigen::Ref<const Eigen::ArrayXd>& db, const Eigen::ArrayXd& slope) {
    const double global = db.maxCoeff();
    Eigen::ArrayXd w(nb - 1);
    for (Eigen::Index i = 0; i + 1 < nb; ++i) {
      Eigen::Index j = i;
      if (slope[i] > 0.0) {
        while (j < nb - 1 && slope[j] > 0.0) ++j;
      } else {
        while (j > 0 && slope[j - 1] <= 0.0) --j;
      }
      const double local = db[j];
      w[i] = kWssKmax / (kWssKmax + global - db[i]) * (kWssKlocmax / (kWssKlocmax + local - db[i]));
    }
    return w;
  };
  const Eigen::ArrayXd cs = clean_db.tail(nb - 1) - clean_db.head(nb - 1);
  const Eigen::ArrayXd ds = degraded_db.tail(nb - 1) - degraded_db.head(nb - 1);
  const Eigen::ArrayXd w = 0.5 * (weights(clean_db, cs) + weights(degraded_db, ds));
  return (w * (cs - ds).square()).sum() / w.sum();
}

double wss(const AlignedPair& pair) {
  const Framing f = frames_of(pair);
  const Eigen::Index fft_len = dsp::next_pow2(f.clean.frame_len);
  const auto bank = dsp::make_filterbank(dsp::FilterbankKind::kCriticalBand, pair.rate(), fft_len,
                                         kWssBands, kBandFmin);
  auto band_db = [&bank](const Eigen::ArrayXd& mag) {
    return (10.0 * bank.apply(mag.square()).max(1e-10).log10()).eval();
  };
  std::vector<double> values;
  for (Eigen::Index i = 0; i < f.clean.count(); ++i) {
    if (!(f.clean[i].square().sum() > 0.0)) continue;
    const auto cs = dsp::spectrum(f.clean[i], dsp::Window::kHamming, pair.rate(), fft_len);
    const auto ds = dsp::spectrum(f.degraded[i], dsp::Window::kHamming, pair.rate(), fft_len);
    values.push_back(wss_frame(band_db(cs.magnitudes), band_db(ds.magnitudes)));
  }
  if (values.empty()) throw DegenerateInputError("wss: every clean frame is silent");
  return trimmed_mean(std::move(values));
}

}  // namespace vda::metrics
