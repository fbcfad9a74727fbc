#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "robising/expfam.hpp"
#include "robising/glauber.hpp"
#include "robising/ising.hpp"
#include "robising/robust_mean.hpp"

namespace robising {

struct LearnerConfig {
  double eps0 = 0.1;   ///< largest corruption level accepted
  double C0 = 3.0;     ///< τ_0 = C0·sqrt(ε)
  double Cref = 1.0;   ///< τ_{k+1} = Cref·(sqrt(ε τ_k) + ε log 1/ε)
  double Ctau = 1.0;   ///< near-identity filter runs with tau = Ctau·τ_k
  double Cn = 25.0;    ///< covariance samples n = min(budget, Cn·dim/τ_k²)
  int rounds = 0;      ///< refinement rounds; 0 picks max(2, ceil(log2 log2 1/ε) + 1)
  std::int64_t covarianceBudget = 200000;
  MomentSource covarianceSource = MomentSource::Sampled;
  double mixingConstant = 20.0;
  double mleAccuracyFactor = 0.1;  ///< MLE target distance = factor·τ
  double zeta = 0.01;              ///< failure probability handed to the MLE
  double sigmaCoreFraction = 0.8;  ///< σ plug-in: central fraction of samples kept
  double sigmaInflation = 1.5;     ///< σ² = max(1, inflation·λ_max(core covariance))
  MleConfig mle;
  BoundedCovConfig boundedFilter;
  NearIdentityConfig nearIdentityFilter;
  std::uint64_t seed = 0;
  /// Known generator; when set, each trace round records its error.
  std::optional<IsingParameters> truth;
};

struct RefinementRound {
  int k = 0;                        ///< 0 is the initial bounded-covariance round
  double tau = 0.0;                 ///< accuracy level τ_k of the round's output
  double covGap = 0.0;              ///< λ_min of the estimated Σ_T (NaN in round 0)
  std::int64_t covSamples = 0;      ///< synthetic samples behind Σ_T
  bool covShortfall = false;        ///< Cn·dim/τ_k² exceeded the budget
  FilterDiagnostics filter;
  VectorXd eta;                     ///< natural parameter after the round's MLE
  std::optional<IsingParameters> theta;
  double thetaError = 0.0;          ///< Frobenius error against cfg.truth (NaN if unknown)
  int mleIterations = 0;
  bool mleCapped = false;
  double wallMs = 0.0;
};

struct RefinementTrace {
  std::vector<RefinementRound> rounds;
  int K = 0;
  bool budgetShortfall = false;  ///< some round used fewer samples than requested
};

/// v-centered parameters: J = Θ, h = θ_field + Θv.
struct CenteredRecovery {
  VectorXd v;
  MatrixXd J;
  VectorXd h;
};

struct ExpFamLearnResult {
  VectorXd eta;
  RefinementTrace trace;
};

struct IsingLearnResult {
  IsingParameters theta;
  RefinementTrace trace;
};

struct ExternalLearnResult {
  IsingParameters theta;
  CenteredRecovery recovery;
  RefinementTrace trace;
};

/// Both sides of the feasibility inequality for the external-field learner:
/// 4(M/(1−M) + c1√ε)² ≤ (1−c0)(8 s² − 2M/(1−M) − c0), s = e^{−2(α+2M)}/(1+e^{−2(α+2M)}).
struct ConstraintCheck {
  bool ok = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

ConstraintCheck check_external_constraint(double M, double alpha, double c0, double c1, double eps);

/// max(2, ceil(log2 log2 (1/ε)) + 1); 2 when ε is 0 or log2 log2 (1/ε) ≤ 0.
int refinement_rounds(double eps);

/// One step of the τ recursion.
double next_tau(double tau, double eps, double Cref);

/// σ for the initial bounded-covariance round, from the covariance of the
/// samples closest to the coordinate-wise median.
double sigma_plugin(const MatrixXd& samples, double coreFraction = 0.8, double inflation = 1.5);

/// Robust estimation of η from ε-corrupted sufficient statistics (rows).
/// An initial bounded-covariance round followed by K rounds of
/// covariance estimation at the current η, whitening, near-identity filtering
/// and MLE.
ExpFamLearnResult robust_learn_expfam(const MatrixXd& stats, double eps,
                                      const ExponentialFamily& family, const LearnerConfig& cfg);

/// Zero-field Ising learner over Ω = {max row l1 <= 1−eta}.
IsingLearnResult robust_learn_ising_zero_field(const SampleSet& samples, double eps, double eta,
                                               const LearnerConfig& cfg = {});

/// Ising learner with external field over (M, alpha)-bounded models, through
/// the v-centered form. Throws ConstraintRefusal when the feasibility
/// inequality fails for (M, alpha, c0, c1, eps).
ExternalLearnResult robust_learn_ising_external(const SampleSet& samples, double eps,
                                                const DobrushinSpec& omega, double c0, double c1,
                                                const LearnerConfig& cfg = {});

/// MLE on the plain empirical mean of T, no filtering. Baseline for
/// head-to-head comparisons.
IsingParameters naive_mle_zero_field(const SampleSet& samples, double eta,
                                     const LearnerConfig& cfg = {});
IsingParameters naive_mle_external(const SampleSet& samples, const DobrushinSpec& omega,
                                   const LearnerConfig& cfg = {});

/// θ from v-centered (J, h): θ_ij = J_ij, θ_i = h_i − Σ_j J_ij v_j.
IsingParameters from_centered(const CenteredRecovery& rec);
/// (J, h) of θ at center v.
CenteredRecovery to_centered(const IsingParameters& params, const VectorXd& v);

}  // namespace robising
