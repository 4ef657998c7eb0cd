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
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "vda/corpus.hpp"

namespace vda::test {

inline constexpr double kPi = std::numbers::pi;

// Small seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (double(eng_() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) { return lo + int(eng_() % std::uint64_t(hi - lo + 1)); }
  double normal() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
  Eigen::ArrayXd noise(Eigen::Index n, double sigma = 1.0) {
    Eigen::ArrayXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = sigma * normal();
    return x;
  }
  Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline AudioSignal sine(double freq, double seconds, int rate = 16000, double amp = 0.5, double phase = 0.0) {
  const Eigen::Index n = Eigen::Index(std::lround(seconds * rate));
  Eigen::ArrayXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * kPi * freq * double(i) / rate + phase);
  return {x, rate};
}

// AR(2)-coloured noise with a 4 Hz syllabic envelope, roughly speech-shaped.
inline AudioSignal speech_shaped(std::uint64_t seed, double seconds = 2.0, int rate = 16000) {
  Gen g(seed);
  const Eigen::Index n = Eigen::Index(std::lround(seconds * rate));
  Eigen::ArrayXd x(n);
  double y1 = 0.0, y2 = 0.0;
  const double r = 0.95, theta = 2.0 * kPi * 500.0 / rate;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = g.normal() + 2.0 * r * std::cos(theta) * y1 - r * r * y2;
    y2 = y1;
    y1 = y;
    const double env = 0.55 + 0.45 * std::sin(2.0 * kPi * 4.0 * double(i) / rate);
    x[i] = y * env * env;
  }
  x *= 0.3 / x.abs().maxCoeff();
  return {x, rate};
}

inline AlignedPair make_pair(const AudioSignal& clean, const Eigen::ArrayXd& degraded) {
  AlignedPair p;
  p.clean = clean;
  p.degraded = {degraded, clean.rate};
  return p;
}

inline Eigen::ArrayXd add_white_noise(const Eigen::ArrayXd& x, double snr_db, std::uint64_t seed) {
  Gen g(seed);
  const Eigen::ArrayXd w = g.noise(x.size());
  const double scale = std::sqrt(x.square().mean() / w.square().mean()) * std::pow(10.0, -snr_db / 20.0);
  return x + scale * w;
}

// O(n^2) DFT of x zero-padded to n.
inline Eigen::ArrayXcd naive_dft(const Eigen::ArrayXd& x, Eigen::Index n) {
  Eigen::ArrayXcd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index t = 0; t < x.size(); ++t)
      acc += x[t] * std::polar(1.0, -2.0 * kPi * double(k * t % n) / double(n));
    out[k] = acc;
  }
  return out;
}

// Normal equations solved by Gauss-Jordan elimination with partial pivoting.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd a(p, p + 1);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) s += x(r, i) * x(r, j);
      a(i, j) = s;
    }
    double s = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) s += x(r, i) * y[r];
    a(i, p) = s;
  }
  for (Eigen::Index c = 0; c < p; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < p; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    a.row(c).swap(a.row(piv));
    const double pivot = a(c, c);
    a.row(c) /= pivot;
    for (Eigen::Index r = 0; r < p; ++r) {
      const double f = a(r, c);
      if (r != c) a.row(r) -= f * a.row(c);
    }
  }
  return a.col(p);
}

// Per-test scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vda_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace vda::test
