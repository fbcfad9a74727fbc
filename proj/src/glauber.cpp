#include "robising/glauber.hpp"

#include <cmath>
#include <string>

namespace robising {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Hot loop: row-major couplings, spins as doubles.
class Chain {
 public:
  explicit Chain(const IsingParameters& params)
      : d_(params.dim()), coupling_(params.interaction()), field_(params.field()) {}

  void run(VectorXd& x, std::int64_t steps, Rng& rng) const {
    std::uniform_int_distribution<Index> site(0, d_ - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::int64_t t = 0; t < steps; ++t) {
      const Index i = site(rng);
      const double local = field_(i) + coupling_.row(i).dot(x.transpose());
      const double p = 1.0 / (1.0 + std::exp(-2.0 * local));
      x(i) = unif(rng) < p ? 1.0 : -1.0;
    }
  }

  VectorXd draw(std::int64_t steps, Rng& rng) const {
    std::bernoulli_distribution coin(0.5);
    VectorXd x(d_);
    for (Index i = 0; i < d_; ++i) x(i) = coin(rng) ? 1.0 : -1.0;
    run(x, steps, rng);
    return x;
  }

 private:
  Index d_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> coupling_;
  VectorXd field_;
};

void warn_if_not_dobrushin(const IsingParameters& params) {
  if (params.max_row_l1() >= 1.0) {
    warn("Glauber sampling outside Dobrushin's condition (max row l1 = " +
         std::to_string(params.max_row_l1()) + "); mixing guarantee void");
  }
}

}  // namespace

void ChainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("chain gamma must lie in (0, 1)");
  if (!(mixingConstant > 0.0)) throw ParameterError("mixing constant must be positive");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

std::int64_t chain_steps(Index d, const ChainConfig& cfg) {
  cfg.validate();
  const double dd = static_cast<double>(d);
  const double t = cfg.mixingConstant * dd * (std::log(dd) + std::log(1.0 / cfg.gamma));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(t)));
}

double plus_probability(const IsingParameters& params, const Eigen::Ref<const VectorXd>& x,
                        Index i) {
  const double local = params.field()(i) + params.interaction().row(i).dot(x.transpose());
  return 1.0 / (1.0 + std::exp(-2.0 * local));
}

void glauber_step(const IsingParameters& params, VectorXd& state, Rng& rng) {
  if (state.size() != params.dim()) throw ParameterError("state has wrong length");
  Chain(params).run(state, 1, rng);
}

VectorXd sample(const IsingParameters& params, const ChainConfig& cfg, Rng& rng) {
  warn_if_not_dobrushin(params);
  return Chain(params).draw(chain_steps(params.dim(), cfg), rng);
}

void sample_range(const IsingParameters& params, std::int64_t first, std::int64_t count,
                  const ChainConfig& cfg, SampleSet& out, int threads) {
  const Index d = params.dim();
  const std::int64_t steps = chain_steps(d, cfg);
  const Chain chain(params);
  out.resize(count, d);
  parallel_for(
      count,
      [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r) {
          Rng rng(derive_seed(cfg.masterSeed, static_cast<std::uint64_t>(first + r)));
          VectorXd x = chain.draw(steps, rng);
          for (Index i = 0; i < d; ++i) out(r, i) = static_cast<std::int8_t>(x(i));
        }
      },
      threads);
}

SampleSet sample_batch(const IsingParameters& params, std::int64_t n, const ChainConfig& cfg,
                       std::int64_t budget, int threads) {
  if (n < 1) throw ParameterError("sample_batch needs n >= 1");
  if (n > budget / std::max<Index>(1, params.dim())) {
    throw CapacityError("sample_batch: n*d exceeds the memory budget");
  }
  warn_if_not_dobrushin(params);
  SampleSet out;
  sample_range(params, 0, n, cfg, out, threads);
  return out;
}

}  // namespace robising
