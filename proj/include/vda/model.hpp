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

#include <array>
#include <bitset>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vda/corpus.hpp"
#include "vda/error.hpp"
#include "vda/features.hpp"

namespace vda::model {

// --- Interaction set ---------------------------------------------------------

inline constexpr int kInteractions = 8;
inline constexpr int kColumns = features::kFeatureCount * kInteractions;  // 208

// Factor bits: G = 1, C = 2, D = 4. Order: 1, G, C, D, G*C, G*D, C*D, G*C*D.
inline constexpr std::array<int, kInteractions> kInteractionFactors = {0, 1, 2, 4, 3, 5, 6, 7};

/// ASCII label, e.g. "1", "G", "G*C".
std::string interaction_label(int m);
/// Label with a middle dot, e.g. "G·C".
std::string interaction_display(int m);
/// Inverse of interaction_label; accepts "G*C", "GC" and "G·C".
int parse_interaction(std::string_view label);

inline int factor_bits(const ConditionLabel& l) { return (l.g ? 1 : 0) | (l.c ? 2 : 0) | (l.d ? 4 : 0); }

/// Product of the indicators in interaction m evaluated on a label.
inline double interaction_value(int m, const ConditionLabel& label) {
  const int f = kInteractionFactors[std::size_t(m)];
  return (factor_bits(label) & f) == f ? 1.0 : 0.0;
}

inline constexpr Eigen::Index column_index(int feature, int m) {
  return Eigen::Index(m) * features::kFeatureCount + feature;
}

struct ColumnLabel {
  int feature = 0;
  int interaction = 0;
};

std::vector<ColumnLabel> column_labels();

// --- Observations and design ---------------------------------------------------

enum class Outcome { kStoi, kPesq };
const char* outcome_name(Outcome o);
Outcome parse_outcome(std::string_view s);

struct ObservationRow {
  std::string utterance_id;
  features::ErrorVector error;
  ConditionLabel label;
  double y_stoi = 0.0;
  std::optional<double> y_pesq;

  /// Outcome value; DependencyError when PESQ is requested but absent.
  double outcome(Outcome o) const;
};

struct DesignMatrix {
  Eigen::MatrixXd x;  // n x 208
  std::vector<ColumnLabel> labels;
};

/// Column (i, m) of each row is m(label) * e[i]. Row order is preserved.
DesignMatrix build_design_matrix(const std::vector<ObservationRow>& rows);

/// Outcome vector with range checks (ValueError on non-finite or out-of-range).
Eigen::VectorXd outcome_vector(const std::vector<ObservationRow>& rows, Outcome o);

using FeatureMask = std::bitset<features::kFeatureCount>;
inline FeatureMask all_features() { return FeatureMask().set(); }
/// Comma-separated feature indices, e.g. "0,1,2,11"; "all" selects every index.
FeatureMask parse_feature_mask(std::string_view list);

// --- Least squares -------------------------------------------------------------

/// Two-sided p-value of a t statistic with the given degrees of freedom.
double t_pvalue(double t, double dof);

enum class Band { kStrong, kMedium, kWeak, kNone };
Band significance_band(double p);
const char* band_name(Band b);

inline constexpr double kRankTolerance = 1e-10;

template <typename Scalar>
struct OlsFit {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector theta;     // 0 for dropped columns
  Vector std_err;   // NaN for dropped columns
  Vector t_stat;    // NaN for dropped columns
  Vector p_value;   // NaN for dropped columns
  std::vector<bool> retained;
  Vector residuals;
  Scalar residual_variance{};
  Eigen::Index rank = 0;
  Eigen::Index dof = 0;

  bool is_retained(Eigen::Index j) const { return retained[std::size_t(j)]; }
};

/// Least squares with deterministic rank handling: columns are visited in
/// index order and kept only when they add a direction to the span of the
/// columns already kept. Columns outside `candidates` (when given) are
/// treated as dropped. Standard errors are classical, from s^2 (X'X)^-1.
template <typename DerivedX, typename DerivedY>
OlsFit<typename DerivedX::Scalar> ols(const Eigen::MatrixBase<DerivedX>& x_in,
                                      const Eigen::MatrixBase<DerivedY>& y_in,
                                      const std::vector<bool>& candidates = {}) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Matrix x = x_in;
  const Vector y = y_in;
  const Eigen::Index n = x.rows(), p = x.cols();
  if (y.size() != n) throw PreconditionError("ols: outcome length differs from row count");
  if (!y.allFinite()) throw ValueError("ols: outcome contains non-finite values");
  if (!x.allFinite()) throw ValueError("ols: design contains non-finite values");
  if (!candidates.empty() && Eigen::Index(candidates.size()) != p)
    throw PreconditionError("ols: candidate mask length differs from column count");

  // Gram-Schmidt with re-orthogonalization, in column order.
  const Scalar largest = p > 0 ? x.colwise().norm().maxCoeff() : Scalar(0);
  Matrix q(n, std::min(n, p));
  std::vector<Eigen::Index> kept;
  OlsFit<Scalar> fit;
  fit.retained.assign(std::size_t(p), false);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!candidates.empty() && !candidates[std::size_t(j)]) continue;
    const Scalar own = x.col(j).norm();
    if (!(own > Scalar(0))) continue;
    Vector v = x.col(j);
    const Eigen::Index r = Eigen::Index(kept.size());
    for (int pass = 0; pass < 2 && r > 0; ++pass) v -= q.leftCols(r) * (q.leftCols(r).transpose() * v);
    const Scalar resid = v.norm();
    if (resid <= Scalar(kRankTolerance) * own || resid <= Scalar(kRankTolerance) * largest) continue;
    if (r == q.cols()) break;
    q.col(r) = v / resid;
    kept.push_back(j);
    fit.retained[std::size_t(j)] = true;
  }
  fit.rank = Eigen::Index(kept.size());
  if (n <= fit.rank)
    throw UnderdeterminedError("ols: " + std::to_string(n) + " observations for rank " +
                               std::to_string(fit.rank));
  fit.dof = n - fit.rank;

  const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
  fit.theta = Vector::Zero(p);
  fit.std_err = Vector::Constant(p, nan);
  fit.t_stat = Vector::Constant(p, nan);
  fit.p_value = Vector::Constant(p, nan);

  Matrix xr(n, fit.rank);
  for (Eigen::Index k = 0; k < fit.rank; ++k) xr.col(k) = x.col(kept[std::size_t(k)]);
  Vector beta = Vector::Zero(0);
  Vector var_diag = Vector::Zero(0);
  if (fit.rank > 0) {
    const Eigen::HouseholderQR<Matrix> qr(xr);
    beta = qr.solve(y);
    const Matrix r = qr.matrixQR().topLeftCorner(fit.rank, fit.rank).template triangularView<Eigen::Upper>();
    const Matrix rinv = r.template triangularView<Eigen::Upper>().solve(Matrix::Identity(fit.rank, fit.rank));
    var_diag = rinv.rowwise().squaredNorm();
  }
  fit.residuals = y - xr * beta;
  fit.residual_variance = fit.residuals.squaredNorm() / Scalar(fit.dof);

  for (Eigen::Index k = 0; k < fit.rank; ++k) {
    const Eigen::Index j = kept[std::size_t(k)];
    const Scalar theta = beta[k];
    const Scalar se = std::sqrt(fit.residual_variance * var_diag[k]);
    fit.theta[j] = theta;
    fit.std_err[j] = se;
    if (se > Scalar(0)) {
      fit.t_stat[j] = theta / se;
      fit.p_value[j] = Scalar(t_pvalue(double(theta / se), double(fit.dof)));
    } else {
      fit.t_stat[j] = theta == Scalar(0) ? Scalar(0) : std::copysign(std::numeric_limits<Scalar>::infinity(), theta);
      fit.p_value[j] = theta == Scalar(0) ? Scalar(1) : Scalar(0);
    }
  }
  return fit;
}

struct RegressionFit {
  OlsFit<double> ols;
  std::vector<ColumnLabel> labels;
  Outcome outcome = Outcome::kStoi;
  Eigen::Index observations = 0;
};

/// Candidate mask over the 208 columns: columns whose feature is in `features`
/// and whose interaction is in `interactions` (bit m set).
std::vector<bool> column_mask(const FeatureMask& features, unsigned interactions = 0xFFu);

/// Pooled fit over all eight interactions.
RegressionFit fit_model(const std::vector<ObservationRow>& rows, Outcome outcome,
                        const FeatureMask& features = all_features());

// --- Oaxaca decomposition ------------------------------------------------------

struct OaxacaDecomposition {
  int indicator = 0;
  double endowment = 0.0;
  double coefficient = 0.0;
  double interaction = 0.0;
  double collective = 0.0;
};

/// Three-fold decomposition from the I = 0 viewpoint:
/// endowment = dX . theta0, coefficient = X1 . dtheta, interaction = dX . dtheta.
template <typename D0, typename T0, typename D1, typename T1>
OaxacaDecomposition three_fold(const Eigen::MatrixBase<D0>& means0, const Eigen::MatrixBase<T0>& theta0,
                               const Eigen::MatrixBase<D1>& means1, const Eigen::MatrixBase<T1>& theta1) {
  const auto dx = (means1 - means0).eval();
  const auto dtheta = (theta1 - theta0).eval();
  OaxacaDecomposition out;
  out.endowment = double(dx.dot(theta0));
  out.coefficient = double(means1.dot(dtheta));
  out.interaction = double(dx.dot(dtheta));
  out.collective = out.endowment + out.coefficient + out.interaction;
  return out;
}

/// Interactions sharing no factor with indicator I (bit mask over m).
unsigned reduced_interactions(int indicator);

/// Stratifies rows on I(label), fits each stratum over the reduced
/// interaction set and decomposes over columns retained in both fits.
OaxacaDecomposition oaxaca_decompose(const std::vector<ObservationRow>& rows, int indicator,
                                     Outcome outcome, const FeatureMask& features = all_features());

enum class ReferenceMode { kZeroError, kStratum };
const char* reference_name(ReferenceMode r);
ReferenceMode parse_reference(std::string_view s);

struct DecompositionTable {
  std::array<OaxacaDecomposition, kInteractions> rows{};
  Outcome outcome = Outcome::kStoi;
  ReferenceMode reference = ReferenceMode::kZeroError;
};

/// One decomposition per interaction. Row "1" compares against zero acoustic
/// error (pooled fit) or is all zeros in stratum mode.
DecompositionTable decomposition_table(const std::vector<ObservationRow>& rows, Outcome outcome,
                                       ReferenceMode reference = ReferenceMode::kZeroError,
                                       const FeatureMask& features = all_features());

}  // namespace vda::model
