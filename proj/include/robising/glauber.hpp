#pragma once

#include <cstdint>
#include <random>

#include "robising/ising.hpp"
#include "robising/parallel.hpp"

namespace robising {

using Rng = std::mt19937_64;

/// n x d matrix of spins, one configuration per row.
using SampleSet = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Upper bound on n*d entries materialized by sample_batch.
inline constexpr std::int64_t kDefaultSampleBudget = std::int64_t{1} << 28;

struct ChainConfig {
  double gamma = 1e-3;           ///< target TV accuracy of each chain's law
  double mixingConstant = 20.0;  ///< C in t = ceil(C d (log d + log 1/γ))
  std::uint64_t masterSeed = 0;

  void validate() const;
};

/// Seed of chain `index` under `master` (splitmix64 of master + (index+1)·φ).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Number of Glauber steps t = ceil(C·d·(log d + log(1/γ))), at least 1.
std::int64_t chain_steps(Index d, const ChainConfig& cfg);

/// Heat-bath probability that site i becomes +1 given the other spins:
/// sigmoid(2(θ_i + Σ_{j≠i} θ_ij x_j)).
double plus_probability(const IsingParameters& params, const Eigen::Ref<const VectorXd>& x,
                        Index i);

/// One Glauber update in place: uniform site, heat-bath resample.
void glauber_step(const IsingParameters& params, VectorXd& state, Rng& rng);

/// Runs chain_steps(d, cfg) updates from a uniformly random start drawn from
/// `rng` and returns the final state. Warns when the model violates
/// Dobrushin's condition (the mixing guarantee is then void).
VectorXd sample(const IsingParameters& params, const ChainConfig& cfg, Rng& rng);

/// n independent chains; chain i is seeded with derive_seed(masterSeed, i).
/// Output is identical for every thread count.
SampleSet sample_batch(const IsingParameters& params, std::int64_t n, const ChainConfig& cfg,
                       std::int64_t budget = kDefaultSampleBudget,
                       int threads = worker_count());

/// Streams chains [first, first+count) into `out` without materializing
/// the rest; used by moment estimators. `out` is resized to count x d.
void sample_range(const IsingParameters& params, std::int64_t first, std::int64_t count,
                  const ChainConfig& cfg, SampleSet& out, int threads = worker_count());

}  // namespace robising
