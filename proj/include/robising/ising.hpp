#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "robising/errors.hpp"

namespace robising {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Default and absolute limits on the dimension handled by exact enumeration.
inline constexpr int kDefaultEnumerationCap = 12;
inline constexpr int kHardEnumerationCap = 16;

/// Number of unordered pairs i<j in dimension d.
constexpr Index pair_count(Index d) { return d * (d - 1) / 2; }

/// Position of pair (i, j), i < j, in the canonical upper-triangle order
/// (0,1),(0,2),...,(0,d-1),(1,2),...,(d-2,d-1).
constexpr Index pair_index(Index i, Index j, Index d) {
  return i * d - i * (i + 1) / 2 + (j - i - 1);
}

/// Flattens the strict upper triangle of a square matrix in canonical order.
VectorXd pack_upper(const MatrixXd& m);

/// Inverse of pack_upper: symmetric matrix with zero diagonal.
MatrixXd unpack_upper(const VectorXd& pairs, Index d);

/// Ising model parameters: a symmetric, zero-diagonal interaction matrix and
/// an external field. The density is proportional to
/// exp(x'Θx/2 + h'x) on {-1,+1}^d.
class IsingParameters {
 public:
  IsingParameters() = default;

  /// Validates symmetry (exact), zero diagonal and finiteness.
  IsingParameters(MatrixXd interaction, VectorXd field);

  static IsingParameters zeros(Index d);

  /// Builds from upper-triangle pair values and a field (empty field means zero).
  static IsingParameters from_pairs(const VectorXd& pairs, Index d,
                                    const VectorXd& field = VectorXd());

  Index dim() const { return field_.size(); }
  const MatrixXd& interaction() const { return interaction_; }
  const VectorXd& field() const { return field_; }
  VectorXd pairs() const { return pack_upper(interaction_); }

  /// Largest off-diagonal row l1 norm.
  double max_row_l1() const;
  double max_abs_field() const;

 private:
  MatrixXd interaction_;
  VectorXd field_;
};

/// ‖θ1 − θ2‖_F over the full interaction matrix plus the field difference.
double frobenius_distance(const IsingParameters& a, const IsingParameters& b);

/// Dobrushin slack η together with an (M, α) bound on the parameter set
/// Ω = {max row l1 <= M, max |θ_i| <= α}.
struct DobrushinSpec {
  double eta = 0.5;
  double M = 0.5;
  double alpha = 0.0;

  /// Zero-field Dobrushin set: M = 1 - η, α = 0.
  static DobrushinSpec dobrushin(double eta);
  void validate() const;
};

/// Results of brute-force enumeration over {±1}^d. The sufficient statistic
/// uses the full layout: pair products x_i x_j (canonical order) followed by
/// the spins x_1..x_d, so suffStatMean is the gradient of logZ with respect
/// to (upper-triangle interactions, field).
struct ExactSummary {
  double logZ = 0.0;
  VectorXd mean;
  MatrixXd pairMoments;
  VectorXd suffStatMean;
  MatrixXd suffStatCov;
};

bool check_dobrushin(const IsingParameters& params, double eta);
bool check_bounded(const IsingParameters& params, const DobrushinSpec& spec);

/// Throws DomainError unless every entry is exactly +1 or -1.
void require_spins(const Eigen::Ref<const VectorXd>& x);

/// (1/2) Σ_ij θ_ij x_i x_j + Σ_i θ_i x_i.
double unnormalized_log_density(const IsingParameters& params,
                                const Eigen::Ref<const VectorXd>& x);

/// Conditional law of X_keep given X_j = fixed[j] for every j not in keep.
/// `fixed` has length d; its entries at kept indices are ignored.
IsingParameters conditional_model(const IsingParameters& params,
                                  std::span<const Index> keep,
                                  const VectorXd& fixed);

/// Spin vector encoded by the low d bits of `state` (bit set means +1).
VectorXd spins_from_index(std::uint64_t state, Index d);
std::uint64_t index_from_spins(const Eigen::Ref<const VectorXd>& x);

/// Exact probabilities of all 2^d states, indexed as in spins_from_index.
/// Throws CapacityError when d exceeds cap (cap itself must be <= 16).
std::vector<double> enumerate_probabilities(const IsingParameters& params,
                                            int cap = kDefaultEnumerationCap,
                                            double* logZ = nullptr);

ExactSummary exact_summary(const IsingParameters& params,
                           int cap = kDefaultEnumerationCap);

/// Exact total variation distance between two Ising laws.
double exact_tv(const IsingParameters& p1, const IsingParameters& p2,
                int cap = kDefaultEnumerationCap);

/// Result of projecting onto Ω.
struct ProjectionResult {
  IsingParameters params;
  int sweeps = 0;
  double lastMove = 0.0;
};

/// Approximate Euclidean projection onto Ω (row l1 balls plus a field box)
/// by Dykstra's alternating projections. The output satisfies the constraints
/// exactly; it is within `tol` of the true projection.
ProjectionResult project_parameter_set_detailed(const IsingParameters& raw,
                                                const DobrushinSpec& spec,
                                                double tol);

IsingParameters project_parameter_set(const IsingParameters& raw,
                                      const DobrushinSpec& spec, double tol);

/// Euclidean projection of v onto the l1 ball of the given radius.
VectorXd project_l1_ball(const VectorXd& v, double radius);

/// Random (M, α)-bounded model: Gaussian upper triangle rescaled so the
/// largest row l1 norm equals M exactly, field uniform in [-α, α].
template <typename Rng>
IsingParameters random_bounded_model(Index d, double M, double alpha, Rng& rng);

}  // namespace robising

#include "robising/detail/random_model.hpp"
