#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "robising/glauber.hpp"
#include "robising/ising.hpp"

namespace robising {

// ---------------------------------------------------------------------------
// Sufficient statistics

enum class SuffStatKind { ZeroFieldPairs, CenteredWithLinear };

/// Layout of T(x). ZeroFieldPairs: (x_i x_j)_{i<j}. CenteredWithLinear:
/// ((x_i-v_i)(x_j-v_j))_{i<j} followed by (x_i)_i, for a center v.
struct SuffStatSpec {
  SuffStatKind kind = SuffStatKind::ZeroFieldPairs;
  Index d = 0;
  VectorXd center;

  static SuffStatSpec zero_field(Index d);
  static SuffStatSpec centered(VectorXd v);

  Index dim() const;
  void validate() const;
};

VectorXd suff_stats(const SuffStatSpec& spec, const Eigen::Ref<const VectorXd>& x);

/// Row-wise T(x) for a sample set (N x dim).
MatrixXd suff_stats_rows(const SuffStatSpec& spec, const SampleSet& samples);

// ---------------------------------------------------------------------------
// Moments

struct MomentEstimate {
  VectorXd mean;
  MatrixXd cov;
  std::int64_t nUsed = 0;
  double gammaUsed = 0.0;
};

/// Symmetrizes and clamps eigenvalues below zero to zero when the smallest
/// one is negative.
void clamp_psd(MatrixXd& cov);

/// Mean and covariance of T under P_θ by enumeration.
MomentEstimate exact_moments(const IsingParameters& params, const SuffStatSpec& spec,
                             int cap = kDefaultEnumerationCap);

/// Empirical mean and covariance of T over n independent Glauber chains at
/// accuracy gamma. Streams samples in blocks; fails with CapacityError when
/// n·dim(T) exceeds `budget`.
MomentEstimate estimate_moments(const IsingParameters& params, const SuffStatSpec& spec,
                                std::int64_t n, double gamma, std::uint64_t seed,
                                double mixingConstant = 20.0,
                                std::int64_t budget = kDefaultSampleBudget);

// ---------------------------------------------------------------------------
// Whitening

template <typename Scalar>
struct WhiteningPair {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inverseSqrt;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sqrt;
  Index clamped = 0;  ///< eigenvalues raised to the floor
};

/// Σ^{-1/2} and Σ^{1/2} from a symmetric eigendecomposition with eigenvalues
/// clamped below at `floor`.
template <typename Derived>
WhiteningPair<typename Derived::Scalar> whiten_factor(const Eigen::MatrixBase<Derived>& cov,
                                                      typename Derived::Scalar floor = 1e-6) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Mat sym = (cov + cov.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  auto values = eig.eigenvalues().eval();
  WhiteningPair<Scalar> out;
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) < floor) {
      values(i) = floor;
      ++out.clamped;
    }
  }
  const Mat& vecs = eig.eigenvectors();
  out.sqrt = vecs * values.cwiseSqrt().asDiagonal() * vecs.transpose();
  out.inverseSqrt = vecs * values.cwiseSqrt().cwiseInverse().asDiagonal() * vecs.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Projected gradient descent with approximate oracles

struct ApgdConfig {
  double smoothness = 10.0;       ///< L
  double strongConvexity = 0.1;   ///< m
  double targetDist = 1e-2;       ///< δ
  double gradientTol = 1e-2;      ///< δ1
  double projectionTol = 1e-2;    ///< δ2
  double diameter = 1.0;          ///< diam(Ω)
  int maxIters = 100000;
  bool recordIterates = false;

  void validate() const;
  /// ceil((L/m) log(diam/δ)), at least 1.
  int iteration_count() const;
  /// δ + (δ2 + δ1/L) / (1 - sqrt(1 - m/L)).
  double error_bound() const;
};

struct ApgdResult {
  VectorXd x;
  int iterations = 0;
  bool capped = false;  ///< iteration budget hit; x is the best iterate seen
  std::vector<VectorXd> iterates;
};

/// gradient(x, t) must be within δ1 of ∇f(x); t is the iteration index so
/// stochastic oracles can draw fresh randomness per call.
using GradientOracle = std::function<VectorXd(const VectorXd&, int)>;
/// projection(r) must be within δ2 of P_Ω(r) and lie in Ω.
using ProjectionOracle = std::function<VectorXd(const VectorXd&)>;

/// Runs x ← proj(x − grad(x)/L) for iteration_count() steps.
ApgdResult apgd_minimize(const GradientOracle& gradient, const ProjectionOracle& projection,
                         const VectorXd& start, const ApgdConfig& cfg);

// ---------------------------------------------------------------------------
// Exponential families and maximum likelihood

/// Exponential family P_η(x) ∝ exp(<η, T(x)>) restricted to a convex Ω.
class ExponentialFamily {
 public:
  virtual ~ExponentialFamily() = default;

  virtual Index dimension() const = 0;
  virtual double diameter() const = 0;
  virtual VectorXd interior_point() const = 0;
  /// Point of Ω within tol of the Euclidean projection of eta.
  virtual VectorXd project(const VectorXd& eta, double tol) const = 0;

  virtual bool has_exact_moments() const { return false; }
  virtual MomentEstimate exact_moments(const VectorXd& eta) const;
  virtual MomentEstimate sample_moments(const VectorXd& eta, std::int64_t n, double gamma,
                                        std::uint64_t seed) const = 0;
};

/// Where moments of T come from during learning.
enum class MomentSource { Exact, Sampled, Auto };

/// Ising model as an exponential family under a sufficient-statistic layout.
/// Natural parameters: upper-triangle couplings for ZeroFieldPairs; for the
/// v-centered layout, (J upper triangle, h) with J = Θ and h = θ_field + Θv.
/// Ω is {max row l1 <= M, |θ_i| <= α} in θ-coordinates; projections are taken
/// there and mapped forward.
class IsingFamily final : public ExponentialFamily {
 public:
  IsingFamily(SuffStatSpec spec, DobrushinSpec omega, double mixingConstant = 20.0,
              int enumerationCap = kDefaultEnumerationCap);

  Index dimension() const override { return spec_.dim(); }
  double diameter() const override;
  VectorXd interior_point() const override { return VectorXd::Zero(dimension()); }
  VectorXd project(const VectorXd& eta, double tol) const override;
  bool has_exact_moments() const override { return spec_.d <= cap_; }
  MomentEstimate exact_moments(const VectorXd& eta) const override;
  MomentEstimate sample_moments(const VectorXd& eta, std::int64_t n, double gamma,
                                std::uint64_t seed) const override;

  IsingParameters to_params(const VectorXd& eta) const;
  VectorXd from_params(const IsingParameters& params) const;

  const SuffStatSpec& spec() const { return spec_; }
  const DobrushinSpec& omega() const { return omega_; }

 private:
  SuffStatSpec spec_;
  DobrushinSpec omega_;
  double mixingConstant_;
  int cap_;
  MatrixXd stateStats_;  // T(x) for every state when enumerable
};

struct MleConfig {
  double smoothness = 10.0;
  double strongConvexity = 0.1;
  MomentSource gradientSource = MomentSource::Auto;
  double gradientSampleConstant = 25.0;   ///< n_grad = ceil(C·dim/δ1²)
  std::int64_t sampleBudget = 200000;
  double minDelta = 1e-3;                 ///< floor on δ, δ1, δ2
  int maxIters = 100000;
  std::uint64_t seed = 0;
};

struct MleResult {
  VectorXd eta;
  int iterations = 0;
  bool capped = false;
  bool sampleShortfall = false;
};

/// argmax_{η∈Ω} <η, μ'> − A(η) by APGD with δ1 = δ2 = δ.
MleResult mle_from_mean(const ExponentialFamily& family, const VectorXd& muPrime, double delta,
                        double zeta, const MleConfig& cfg,
                        const VectorXd& start = VectorXd());

/// Ising convenience form returning θ̂.
IsingParameters mle_from_mean(const VectorXd& muPrime, const SuffStatSpec& spec,
                              const DobrushinSpec& omega, double delta, double zeta,
                              const MleConfig& cfg = {});

}  // namespace robising
