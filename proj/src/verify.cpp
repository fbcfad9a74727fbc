#include "robising/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace robising {

namespace {

// Two-sided 95% Student t quantile with 19 degrees of freedom.
constexpr double kT19 = 2.093;

void check_counts(int trials, std::int64_t n, const VerifyConfig& cfg) {
  if (trials < 1) throw ParameterError("trials must be at least 1");
  if (n < 2) throw ParameterError("n must be at least 2");
  if (cfg.batches < 2) throw ParameterError("need at least two batches");
}

SampleSet draw(const IsingParameters& params, std::int64_t n, std::uint64_t seed, const VerifyConfig& cfg) {
  ChainConfig chain;
  chain.gamma = cfg.gamma;
  chain.mixingConstant = cfg.mixingConstant;
  chain.masterSeed = derive_seed(seed, 0);
  return sample_batch(params, n, chain, kDefaultSampleBudget, cfg.threads);
}

VectorXd mean_spins(const IsingParameters& params, const SampleSet& samples) {
  if (params.dim() <= kDefaultEnumerationCap) return exact_summary(params).mean;
  return samples.cast<double>().colwise().mean().transpose();
}

double variance(const VectorXd& f) {
  const double mean = f.mean();
  return (f.array() - mean).square().sum() / static_cast<double>(f.size() - 1);
}

VarianceReport report_for(const VectorXd& f, double normA, double normB, int batches) {
  VarianceReport r;
  r.testMatrixNorm = normA;
  r.linearNorm = normB;
  r.nSamples = f.size();
  r.empiricalVariance = variance(f);
  r.ratio = r.empiricalVariance / (normA * normA + normB * normB);
  const Index per = f.size() / batches;
  if (per >= 2) {
    VectorXd batchVar(batches);
    for (int k = 0; k < batches; ++k) batchVar(k) = variance(f.segment(k * per, per));
    r.ci95HalfWidth = kT19 * std::sqrt(variance(batchVar) / batches);
  } else {
    r.ci95HalfWidth = std::numeric_limits<double>::infinity();
  }
  return r;
}

VectorXd gaussian_vector(Index k, Rng& rng) {
  std::normal_distribution<double> gauss;
  VectorXd v(k);
  for (Index i = 0; i < k; ++i) v(i) = gauss(rng);
  return v;
}

}  // namespace

MatrixXd random_test_matrix(Index d, Rng& rng) {
  if (d < 2) throw ParameterError("test matrices need d >= 2");
  std::normal_distribution<double> gauss;
  MatrixXd A = MatrixXd::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      A(i, j) = gauss(rng);
      A(j, i) = A(i, j);
    }
  }
  return A / A.norm();
}

VectorXd quadratic_form_values(const SampleSet& samples, const MatrixXd& A, const VectorXd& b,
                               const VectorXd& v) {
  const Index d = samples.cols();
  if (A.rows() != d || A.cols() != d || b.size() != d || v.size() != d) {
    throw ParameterError("test function has the wrong dimension");
  }
  const MatrixXd x = samples.cast<double>();
  const MatrixXd y = x.rowwise() - v.transpose();
  return ((y * A).array() * y.array()).rowwise().sum().matrix() + x * b;
}

double exact_variance(const IsingParameters& params, const MatrixXd& A, const VectorXd& b,
                      const VectorXd& v, int cap) {
  const Index d = params.dim();
  const auto prob = enumerate_probabilities(params, cap);
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < prob.size(); ++s) {
    const VectorXd x = spins_from_index(s, d);
    const VectorXd y = x - v;
    const double f = y.dot(A * y) + b.dot(x);
    m1 += prob[s] * f;
    m2 += prob[s] * f * f;
  }
  return std::max(0.0, m2 - m1 * m1);
}

std::vector<VarianceReport> mc_variance_lower_bound(const IsingParameters& params, int trials,
                                                    std::int64_t n, bool withLinear,
                                                    std::uint64_t seed, const VerifyConfig& cfg) {
  check_counts(trials, n, cfg);
  const Index d = params.dim();
  const SampleSet samples = draw(params, n, seed, cfg);
  const VectorXd v = mean_spins(params, samples);

  Rng rng(derive_seed(seed, 1));
  std::vector<MatrixXd> As;
  std::vector<VectorXd> bs;
  for (int t = 0; t < trials; ++t) {
    MatrixXd A = random_test_matrix(d, rng);
    VectorXd b = VectorXd::Zero(d);
    if (withLinear) {
      // Unit-Frobenius A and unit b, then a uniform split of the total norm.
      b = gaussian_vector(d, rng);
      b /= b.norm();
      const double share = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      A *= std::sqrt(share);
      b *= std::sqrt(1.0 - share);
    }
    As.push_back(std::move(A));
    bs.push_back(std::move(b));
  }
  std::vector<VarianceReport> out(static_cast<std::size_t>(trials));
  parallel_for(
      trials,
      [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t t = lo; t < hi; ++t) {
          const auto i = static_cast<std::size_t>(t);
          out[i] = report_for(quadratic_form_values(samples, As[i], bs[i], v), As[i].norm(), bs[i].norm(),
                              cfg.batches);
        }
      },
      cfg.threads);
  return out;
}

std::vector<VarianceReport> mc_variance_upper_bound(const IsingParameters& params, int trials,
                                                    std::int64_t n, std::uint64_t seed,
                                                    const VerifyConfig& cfg) {
  return mc_variance_lower_bound(params, trials, n, false, seed, cfg);
}

std::vector<VarianceReport> mc_linear_anticoncentration(const IsingParameters& params, int trials,
                                                        std::int64_t n, std::uint64_t seed,
                                                        const VerifyConfig& cfg) {
  check_counts(trials, n, cfg);
  const Index d = params.dim();
  const SampleSet samples = draw(params, n, seed, cfg);
  const MatrixXd x = samples.cast<double>();
  Rng rng(derive_seed(seed, 1));
  std::vector<VarianceReport> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    VectorXd b = gaussian_vector(d, rng);
    b /= b.norm();
    out.push_back(report_for(x * b, 0.0, b.norm(), cfg.batches));
  }
  return out;
}

TailReport tail_from_values(const VectorXd& values, double norm, const std::vector<double>& thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()) ||
      std::adjacent_find(thresholds.begin(), thresholds.end()) != thresholds.end()) {
    throw ParameterError("thresholds must be strictly increasing");
  }
  if (!(norm > 0.0)) throw ParameterError("test function must be non-zero");
  const double n = static_cast<double>(values.size());
  const VectorXd dev = (values.array() - values.mean()).abs().matrix();
  std::vector<double> sorted(dev.data(), dev.data() + dev.size());
  std::sort(sorted.begin(), sorted.end());

  TailReport r;
  r.norm = norm;
  r.thresholds = thresholds;
  std::vector<double> fitT;
  std::vector<double> fitLog;
  for (double t : thresholds) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    const double s = static_cast<double>(above) / n;
    r.survival.push_back(s);
    r.logSurvival.push_back(s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity());
    if (s * n >= 50.0) {
      fitT.push_back(t);
      fitLog.push_back(std::log(s));
    }
  }
  r.fitPoints = static_cast<int>(fitT.size());
  r.truncated = r.fitPoints < 2;
  if (!r.truncated) {
    const Eigen::Map<const VectorXd> tt(fitT.data(), static_cast<Index>(fitT.size()));
    const Eigen::Map<const VectorXd> ll(fitLog.data(), static_cast<Index>(fitLog.size()));
    const VectorXd tc = tt.array() - tt.mean();
    const double slope = tc.dot(ll) / tc.squaredNorm();
    r.rawRate = -slope;
    r.fittedRate = r.rawRate * norm;
  }
  return r;
}

TailReport mc_tail_check(const IsingParameters& params, const MatrixXd& A, const VectorXd& b,
                         const VectorXd& v, std::int64_t n, const std::vector<double>& thresholds,
                         std::uint64_t seed, const VerifyConfig& cfg) {
  check_counts(1, n, cfg);
  const SampleSet samples = draw(params, n, seed, cfg);
  const double norm = std::sqrt(A.squaredNorm() + b.squaredNorm());
  return tail_from_values(quadratic_form_values(samples, A, b, v), norm, thresholds);
}

}  // namespace robising
