#pragma once

#include <cstdint>
#include <vector>

#include "robising/glauber.hpp"
#include "robising/ising.hpp"

namespace robising {

struct VarianceReport {
  double testMatrixNorm = 0.0;     ///< ‖A‖_F
  double linearNorm = 0.0;         ///< ‖b‖_2
  double empiricalVariance = 0.0;
  double ratio = 0.0;              ///< empiricalVariance / (‖A‖_F² + ‖b‖²)
  std::int64_t nSamples = 0;
  double ci95HalfWidth = 0.0;      ///< of the variance, from 20 batches
};

struct TailReport {
  std::vector<double> thresholds;
  std::vector<double> survival;      ///< empirical Pr[|f − Ef| > t]
  std::vector<double> logSurvival;   ///< -inf where the survival is 0
  double norm = 0.0;                 ///< (‖A‖_F² + ‖b‖²)^{1/2}
  double rawRate = 0.0;              ///< minus the slope of log-survival in t
  double fittedRate = 0.0;           ///< rawRate · norm
  int fitPoints = 0;                 ///< thresholds with survival >= 50/n
  bool truncated = false;            ///< fewer than two usable fit points
};

struct VerifyConfig {
  double gamma = 1e-3;
  double mixingConstant = 20.0;
  int batches = 20;
  int threads = worker_count();
};

/// Symmetric zero-diagonal d x d matrix with i.i.d. Gaussian upper triangle,
/// scaled to unit Frobenius norm.
MatrixXd random_test_matrix(Index d, Rng& rng);

/// f(x) = (x − v)ᵀA(x − v) + bᵀx at every row of `samples`.
VectorXd quadratic_form_values(const SampleSet& samples, const MatrixXd& A, const VectorXd& b,
                               const VectorXd& v);

/// Exact Var[f(X)] by enumeration.
double exact_variance(const IsingParameters& params, const MatrixXd& A, const VectorXd& b,
                      const VectorXd& v, int cap = kDefaultEnumerationCap);

/// One batch of n Glauber samples shared across `trials` random test
/// functions f(x) = (x − v)ᵀA(x − v) + bᵀx. With withLinear, (A, b) is drawn
/// and rescaled so ‖A‖_F² + ‖b‖² = 1; otherwise b = 0 and ‖A‖_F = 1. The
/// center v is E[X], enumerated when d fits the cap and empirical otherwise.
std::vector<VarianceReport> mc_variance_lower_bound(const IsingParameters& params, int trials,
                                                    std::int64_t n, bool withLinear,
                                                    std::uint64_t seed, const VerifyConfig& cfg = {});

/// Same sampling scheme for the upper bound, with f(x) = (x − v)ᵀA(x − v).
std::vector<VarianceReport> mc_variance_upper_bound(const IsingParameters& params, int trials,
                                                    std::int64_t n, std::uint64_t seed,
                                                    const VerifyConfig& cfg = {});

/// Var[bᵀX] for random unit b.
std::vector<VarianceReport> mc_linear_anticoncentration(const IsingParameters& params, int trials,
                                                        std::int64_t n, std::uint64_t seed,
                                                        const VerifyConfig& cfg = {});

/// Empirical survival of |f − Ef| at increasing thresholds with a
/// least-squares fit of log-survival over thresholds where the survival is at
/// least 50/n.
TailReport mc_tail_check(const IsingParameters& params, const MatrixXd& A, const VectorXd& b,
                         const VectorXd& v, std::int64_t n, const std::vector<double>& thresholds,
                         std::uint64_t seed, const VerifyConfig& cfg = {});

/// Survival and fit from precomputed values of f.
TailReport tail_from_values(const VectorXd& values, double norm, const std::vector<double>& thresholds);

}  // namespace robising
