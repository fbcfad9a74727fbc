#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "robising/errors.hpp"

namespace robising {

/// What a filter did. massRemoved is the fraction of input weight discarded.
struct FilterDiagnostics {
  int rounds = 0;
  double massRemoved = 0.0;
  double finalTopEigenvalue = 0.0;
  double thresholdUsed = 0.0;
  bool massCapReached = false;  ///< stopped because the next step would exceed the removal cap
  bool noTailCut = false;       ///< stopped because no tail threshold certified outliers
};

template <typename Scalar>
struct RobustMeanResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  FilterDiagnostics diagnostics;
};

/// Spectral filter for distributions with Σ ⪯ σ²I. Soft downweighting
/// w_i ← w_i (1 − τ_i/τ_max) along the top eigenvector until the weighted
/// top eigenvalue drops to stopFactor·σ².
struct BoundedCovConfig {
  double stopFactor = 9.0;
  int roundsPerDim = 5;
  double massCapFactor = 3.0;  ///< never remove more than massCapFactor·ε (and 1/2)
};

/// Filter for sub-exponential data with ‖Σ − I‖ ≤ τ. Stops once
/// λ_max(Σ_w) − 1 ≤ stopConstant·(τ + ε log 1/ε); otherwise removes every
/// point whose projection on the top eigenvector exceeds the smallest T ≥
/// minThreshold at which the empirical tail beyond T exceeds
/// tailMultiplier·exp(−T/tailScale) + ε/(k log k).
struct NearIdentityConfig {
  double stopConstant = 1.0;
  double tailMultiplier = 2.0;
  double tailScale = 1.0;
  double minThreshold = 1.0;
  int roundsPerDim = 5;
  double massCapFactor = 3.0;
};

/// Largest eigenpair of a symmetric PSD matrix by power iteration from the
/// all-ones direction (max 200 iterations, relative residual 1e-10). Falls
/// back to the basis vector of the largest diagonal entry when the all-ones
/// start is orthogonal to the top eigenspace.
template <typename Derived>
std::pair<typename Derived::Scalar, Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>>
top_eigenpair(const Eigen::MatrixBase<Derived>& sym, int maxIters = 200, double relTol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index k = sym.rows();
  auto iterate = [&](Vec v) {
    Scalar lambda = v.dot(sym * v);
    for (int it = 0; it < maxIters; ++it) {
      Vec w = sym * v;
      const Scalar norm = w.norm();
      if (norm == Scalar(0)) return std::make_pair(Scalar(0), v);
      lambda = v.dot(w);
      if ((w - lambda * v).norm() <= relTol * std::abs(lambda)) break;
      v = w / norm;
    }
    lambda = v.dot(sym * v);
    return std::make_pair(lambda, v);
  };
  auto result = iterate(Vec::Ones(k) / std::sqrt(static_cast<Scalar>(k)));
  Eigen::Index arg = 0;
  const Scalar diagMax = sym.diagonal().maxCoeff(&arg);
  if (result.first < diagMax * (Scalar(1) - Scalar(1e-8))) {
    auto alt = iterate(Vec::Unit(k, arg));
    if (alt.first > result.first) result = alt;
  }
  return result;
}

namespace detail {

// Row order sorted lexicographically; makes filtering rounds independent of
// input order.
template <typename Mat>
std::vector<Eigen::Index> canonical_order(const Mat& x) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    }
    return false;
  });
  return order;
}

template <typename Mat, typename Vec>
void weighted_moments(const Mat& x, const Vec& w, Vec& mean, Mat& cov) {
  const auto total = w.sum();
  mean = (x.transpose() * w) / total;
  Mat centered = x.rowwise() - mean.transpose();
  cov = (centered.transpose() * w.asDiagonal() * centered) / total;
  cov = ((cov + cov.transpose()) / 2).eval();
}

inline void check_filter_inputs(Eigen::Index n, double eps) {
  if (n < 2) throw ParameterError("robust mean needs at least two samples");
  if (!(eps >= 0.0 && eps < 1.0 / 3.0)) throw ParameterError("robust mean needs eps in [0, 1/3)");
}

inline double eps_log_inv_eps(double eps) { return eps > 0.0 ? eps * std::log(1.0 / eps) : 0.0; }

}  // namespace detail

/// Robust mean under bounded covariance (rows are points).
template <typename Derived>
RobustMeanResult<typename Derived::Scalar> robust_mean_bounded_cov(
    const Eigen::MatrixBase<Derived>& samples, double eps, double sigma,
    const BoundedCovConfig& cfg = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = samples.rows();
  const Eigen::Index k = samples.cols();
  detail::check_filter_inputs(n, eps);
  if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");

  RobustMeanResult<Scalar> out;
  auto& diag = out.diagnostics;
  diag.thresholdUsed = cfg.stopFactor * sigma * sigma;
  const double massCap = std::min(0.5, cfg.massCapFactor * eps);
  const int maxRounds = std::max<int>(1, cfg.roundsPerDim * static_cast<int>(k));

  // Round 0 on the untouched input: a no-op filter returns the plain mean.
  Vec mean = samples.colwise().mean().transpose();
  Mat centered = samples.rowwise() - mean.transpose();
  Mat cov = (centered.transpose() * centered) / static_cast<Scalar>(n);
  auto [lambda, u] = top_eigenpair(cov);
  diag.finalTopEigenvalue = static_cast<double>(lambda);
  if (lambda <= diag.thresholdUsed || massCap == 0.0) {
    out.mean = mean;
    return out;
  }

  const auto order = detail::canonical_order(samples.derived());
  Mat x(n, k);
  for (Eigen::Index r = 0; r < n; ++r) x.row(r) = samples.row(order[static_cast<std::size_t>(r)]);
  Vec w = Vec::Constant(n, Scalar(1) / static_cast<Scalar>(n));
  detail::weighted_moments(x, w, mean, cov);
  std::tie(lambda, u) = top_eigenpair(cov);

  for (int round = 0; round < maxRounds; ++round) {
    diag.finalTopEigenvalue = static_cast<double>(lambda);
    if (lambda <= diag.thresholdUsed) break;
    Vec scores = ((x.rowwise() - mean.transpose()) * u).array().square().matrix();
    Scalar tauMax = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (w(i) > 0) tauMax = std::max(tauMax, scores(i));
    }
    if (tauMax <= 0) break;
    Vec next = (w.array() * (Scalar(1) - scores.array() / tauMax)).cwiseMax(Scalar(0)).matrix();
    const double removed = 1.0 - static_cast<double>(next.sum());
    if (removed > massCap) {
      diag.massCapReached = true;
      break;
    }
    w = std::move(next);
    diag.massRemoved = removed;
    ++diag.rounds;
    detail::weighted_moments(x, w, mean, cov);
    std::tie(lambda, u) = top_eigenpair(cov);
    diag.finalTopEigenvalue = static_cast<double>(lambda);
  }
  out.mean = mean;
  return out;
}

/// Robust mean for sub-exponential data with covariance near identity (rows
/// are points).
template <typename Derived>
RobustMeanResult<typename Derived::Scalar> robust_mean_near_identity(
    const Eigen::MatrixBase<Derived>& samples, double eps, double tau,
    const NearIdentityConfig& cfg = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = samples.rows();
  const Eigen::Index k = samples.cols();
  detail::check_filter_inputs(n, eps);
  if (!(tau >= 0.0)) throw ParameterError("tau must be non-negative");
  if (eps > 0.0 && tau > 10.0 * std::sqrt(eps)) {
    warn("robust_mean_near_identity: tau is large relative to sqrt(eps)");
  }

  RobustMeanResult<Scalar> out;
  auto& diag = out.diagnostics;
  diag.thresholdUsed = cfg.stopConstant * (tau + detail::eps_log_inv_eps(eps));
  const double massCap = std::min(0.5, cfg.massCapFactor * eps);
  const int maxRounds = std::max<int>(1, cfg.roundsPerDim * static_cast<int>(k));
  const double kk = static_cast<double>(k);
  const double floorRate = eps / std::max(1.0, kk * std::log(std::max(kk, 2.0)));

  Vec mean = samples.colwise().mean().transpose();
  Mat centered = samples.rowwise() - mean.transpose();
  Mat cov = (centered.transpose() * centered) / static_cast<Scalar>(n);
  auto [lambda, u] = top_eigenpair(cov);
  diag.finalTopEigenvalue = static_cast<double>(lambda);
  if (lambda - 1 <= diag.thresholdUsed || massCap == 0.0) {
    out.mean = mean;
    return out;
  }

  const auto order = detail::canonical_order(samples.derived());
  Mat x(n, k);
  for (Eigen::Index r = 0; r < n; ++r) x.row(r) = samples.row(order[static_cast<std::size_t>(r)]);
  Vec w = Vec::Ones(n);  // 0/1 membership
  detail::weighted_moments(x, w, mean, cov);
  std::tie(lambda, u) = top_eigenpair(cov);

  std::vector<Scalar> sorted;
  for (int round = 0; round < maxRounds; ++round) {
    diag.finalTopEigenvalue = static_cast<double>(lambda);
    if (lambda - 1 <= diag.thresholdUsed) break;
    const Vec scores = ((x.rowwise() - mean.transpose()) * u).cwiseAbs();
    sorted.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (w(i) > 0) sorted.push_back(scores(i));
    }
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double active = static_cast<double>(sorted.size());

    // With m points strictly above T, T ranges over [s_(m+1), s_(m)); the
    // tail bound is decreasing in T, so the smallest admissible T in that
    // interval solves tailMultiplier·exp(−T/scale) + floorRate = m/active.
    // Only cuts that keep the cumulative removal under the cap are candidates.
    const double nn = static_cast<double>(n);
    const auto budget = static_cast<std::size_t>(std::floor((massCap - diag.massRemoved) * nn + 1e-9));
    double cut = std::numeric_limits<double>::infinity();
    bool overBudget = false;
    for (std::size_t m = 1; m <= sorted.size(); ++m) {
      const double frac = static_cast<double>(m) / active;
      const double excess = frac - floorRate;
      if (excess <= 0.0) continue;
      const double solve = excess >= cfg.tailMultiplier
                               ? -std::numeric_limits<double>::infinity()
                               : -cfg.tailScale * std::log(excess / cfg.tailMultiplier);
      const double lower = m < sorted.size() ? static_cast<double>(sorted[m]) : 0.0;
      double t = std::max({cfg.minThreshold, lower, solve});
      if (t == solve) t = std::nextafter(t, std::numeric_limits<double>::infinity());
      if (t < static_cast<double>(sorted[m - 1])) {
        if (m <= budget) {
          cut = std::min(cut, t);
        } else {
          overBudget = true;
        }
      }
    }
    if (!std::isfinite(cut)) {
      if (overBudget) {
        diag.massCapReached = true;
      } else {
        diag.noTailCut = true;
      }
      break;
    }
    Vec next = w;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (next(i) > 0 && static_cast<double>(scores(i)) > cut) next(i) = 0;
    }
    const double removed = 1.0 - static_cast<double>(next.sum()) / nn;
    w = std::move(next);
    diag.massRemoved = removed;
    ++diag.rounds;
    detail::weighted_moments(x, w, mean, cov);
    std::tie(lambda, u) = top_eigenpair(cov);
    diag.finalTopEigenvalue = static_cast<double>(lambda);
  }
  out.mean = mean;
  return out;
}

}  // namespace robising
