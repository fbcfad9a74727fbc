#include "robising/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace robising {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double eps_log_inv_eps(double eps) { return eps > 0.0 ? eps * std::log(1.0 / eps) : 0.0; }

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

void check_eps(double eps, const LearnerConfig& cfg) {
  if (!(cfg.eps0 > 0.0 && cfg.eps0 < 0.5)) throw ParameterError("eps0 must lie in (0, 1/2)");
  if (!(eps >= 0.0 && eps < cfg.eps0)) throw ParameterError("eps must lie in [0, eps0)");
  if (!(cfg.C0 > 0.0 && cfg.Cref > 0.0 && cfg.Ctau > 0.0 && cfg.Cn > 0.0)) {
    throw ParameterError("refinement constants must be positive");
  }
  if (!(cfg.mleAccuracyFactor > 0.0)) throw ParameterError("mle accuracy factor must be positive");
  if (cfg.covarianceBudget < 2) throw ParameterError("covariance budget must be at least 2");
}

// MLE accuracy for a round working at level tau; kept inside (0, 1).
double mle_delta(double tau, const LearnerConfig& cfg) {
  return std::clamp(cfg.mleAccuracyFactor * tau, cfg.mle.minDelta, 0.5);
}

MomentEstimate covariance_at(const ExponentialFamily& family, const VectorXd& eta, double tau,
                             Index d, const LearnerConfig& cfg, std::uint64_t seed,
                             RefinementRound& row) {
  const bool exact = cfg.covarianceSource == MomentSource::Exact ||
                     (cfg.covarianceSource == MomentSource::Auto && family.has_exact_moments());
  if (exact) {
    row.covSamples = 0;
    return family.exact_moments(eta);
  }
  const double k = static_cast<double>(family.dimension());
  const double budget = static_cast<double>(cfg.covarianceBudget);
  const double wanted = tau > 0.0 ? std::ceil(cfg.Cn * k / (tau * tau)) : budget + 1.0;
  row.covShortfall = wanted > budget;
  row.covSamples = static_cast<std::int64_t>(std::max(2.0, std::min(wanted, budget)));
  const double dd = static_cast<double>(d);
  const double gamma = std::clamp(tau * tau / (dd * dd), 1e-8, 0.1);
  return family.sample_moments(eta, row.covSamples, gamma, seed);
}

}  // namespace

ConstraintCheck check_external_constraint(double M, double alpha, double c0, double c1, double eps) {
  if (!(M >= 0.0 && M < 1.0)) throw ParameterError("constraint check needs 0 <= M < 1");
  if (!(alpha >= 0.0) || !(eps >= 0.0) || !(c1 >= 0.0) || !std::isfinite(c0)) {
    throw ParameterError("constraint check needs alpha, eps, c1 >= 0 and finite c0");
  }
  const double ratio = M / (1.0 - M);
  const double e = std::exp(-2.0 * (alpha + 2.0 * M));
  const double s = e / (1.0 + e);
  ConstraintCheck out;
  out.lhs = 4.0 * std::pow(ratio + c1 * std::sqrt(eps), 2);
  out.rhs = (1.0 - c0) * (8.0 * s * s - 2.0 * ratio - c0);
  out.ok = out.lhs <= out.rhs;
  return out;
}

int refinement_rounds(double eps) {
  if (!(eps > 0.0) || eps >= 0.5) return 2;
  const double inner = std::log2(std::log2(1.0 / eps));
  return std::max(2, static_cast<int>(std::ceil(inner)) + 1);
}

double next_tau(double tau, double eps, double Cref) {
  return Cref * (std::sqrt(eps * tau) + eps_log_inv_eps(eps));
}

double sigma_plugin(const MatrixXd& samples, double coreFraction, double inflation) {
  const Index n = samples.rows();
  const Index k = samples.cols();
  if (n < 2) throw ParameterError("sigma plug-in needs at least two samples");
  if (!(coreFraction > 0.0 && coreFraction <= 1.0)) throw ParameterError("core fraction must lie in (0, 1]");
  VectorXd median(k);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Index c = 0; c < k; ++c) {
    for (Index r = 0; r < n; ++r) column[static_cast<std::size_t>(r)] = samples(r, c);
    auto mid = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(column.begin(), mid, column.end());
    median(c) = *mid;
  }
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    dist[static_cast<std::size_t>(r)] = {(samples.row(r) - median.transpose()).squaredNorm(), r};
  }
  const Index keep = std::max<Index>(2, static_cast<Index>(std::ceil(coreFraction * static_cast<double>(n))));
  std::nth_element(dist.begin(), dist.begin() + (keep - 1), dist.end());
  MatrixXd core(keep, k);
  for (Index r = 0; r < keep; ++r) core.row(r) = samples.row(dist[static_cast<std::size_t>(r)].second);
  const VectorXd mean = core.colwise().mean().transpose();
  const MatrixXd centered = core.rowwise() - mean.transpose();
  const MatrixXd cov = centered.transpose() * centered / static_cast<double>(keep);
  const double top = Eigen::SelfAdjointEigenSolver<MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  return std::sqrt(std::max(1.0, inflation * top));
}

ExpFamLearnResult robust_learn_expfam(const MatrixXd& stats, double eps,
                                      const ExponentialFamily& family, const LearnerConfig& cfg) {
  check_eps(eps, cfg);
  if (stats.cols() != family.dimension()) throw ParameterError("statistics have the wrong width");
  if (stats.rows() < 2) throw ParameterError("learner needs at least two samples");
  if (!stats.allFinite()) throw ParameterError("statistics must be finite");

  const auto* ising = dynamic_cast<const IsingFamily*>(&family);
  const Index d = ising ? ising->spec().d : family.dimension();

  ExpFamLearnResult out;
  RefinementTrace& trace = out.trace;
  trace.K = cfg.rounds > 0 ? cfg.rounds : refinement_rounds(eps);

  MleConfig mleCfg = cfg.mle;
  double tau = cfg.C0 * std::sqrt(eps);

  // Initial round: bounded-covariance filter on the raw statistics.
  {
    const auto start = std::chrono::steady_clock::now();
    RefinementRound row;
    row.k = 0;
    row.tau = tau;
    row.covGap = kNaN;
    const double sigma = sigma_plugin(stats, cfg.sigmaCoreFraction, cfg.sigmaInflation);
    auto filtered = robust_mean_bounded_cov(stats, eps, sigma, cfg.boundedFilter);
    row.filter = filtered.diagnostics;
    mleCfg.seed = derive_seed(cfg.seed, 0);
    MleResult mle = mle_from_mean(family, filtered.mean, mle_delta(tau, cfg), cfg.zeta, mleCfg);
    row.eta = mle.eta;
    row.mleIterations = mle.iterations;
    row.mleCapped = mle.capped;
    row.wallMs = elapsed_ms(start);
    trace.rounds.push_back(std::move(row));
  }

  for (int k = 1; k <= trace.K; ++k) {
    const auto start = std::chrono::steady_clock::now();
    const VectorXd& current = trace.rounds.back().eta;
    const double nextTau = next_tau(tau, eps, cfg.Cref);
    RefinementRound row;
    row.k = k;
    row.tau = nextTau;
    const MomentEstimate moments =
        covariance_at(family, current, tau, d, cfg, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(k)), row);
    trace.budgetShortfall = trace.budgetShortfall || row.covShortfall;
    row.covGap = Eigen::SelfAdjointEigenSolver<MatrixXd>(moments.cov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();

    const auto white = whiten_factor(moments.cov);
    const MatrixXd whitened = (stats.rowwise() - moments.mean.transpose()) * white.inverseSqrt;
    auto filtered = robust_mean_near_identity(whitened, eps, cfg.Ctau * tau, cfg.nearIdentityFilter);
    row.filter = filtered.diagnostics;
    const VectorXd muPrime = white.sqrt * filtered.mean + moments.mean;

    mleCfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
    MleResult mle = mle_from_mean(family, muPrime, mle_delta(nextTau, cfg), cfg.zeta, mleCfg, current);
    row.eta = mle.eta;
    row.mleIterations = mle.iterations;
    row.mleCapped = mle.capped;
    row.wallMs = elapsed_ms(start);
    trace.rounds.push_back(std::move(row));
    tau = nextTau;
  }
  out.eta = trace.rounds.back().eta;
  return out;
}

namespace {

void annotate(RefinementTrace& trace, const IsingFamily& family, const LearnerConfig& cfg) {
  for (auto& row : trace.rounds) {
    row.theta = family.to_params(row.eta);
    row.thetaError = cfg.truth ? frobenius_distance(*row.theta, *cfg.truth) : kNaN;
  }
}

MatrixXd spins_as_double(const SampleSet& samples) {
  MatrixXd x = samples.cast<double>();
  for (Index i = 0; i < x.size(); ++i) {
    const double s = x.data()[i];
    if (s != 1.0 && s != -1.0) throw DomainError("samples must be +-1 spins");
  }
  return x;
}

}  // namespace

IsingLearnResult robust_learn_ising_zero_field(const SampleSet& samples, double eps, double eta,
                                               const LearnerConfig& cfg) {
  const DobrushinSpec omega = DobrushinSpec::dobrushin(eta);
  spins_as_double(samples);
  IsingFamily family(SuffStatSpec::zero_field(samples.cols()), omega, cfg.mixingConstant);
  const MatrixXd stats = suff_stats_rows(family.spec(), samples);
  ExpFamLearnResult fit = robust_learn_expfam(stats, eps, family, cfg);
  annotate(fit.trace, family, cfg);
  return {family.to_params(fit.eta), std::move(fit.trace)};
}

ExternalLearnResult robust_learn_ising_external(const SampleSet& samples, double eps,
                                                const DobrushinSpec& omega, double c0, double c1,
                                                const LearnerConfig& cfg) {
  check_eps(eps, cfg);
  const ConstraintCheck check = check_external_constraint(omega.M, omega.alpha, c0, c1, eps);
  if (!check.ok) {
    throw ConstraintRefusal("external-field learner: feasibility inequality fails (lhs " +
                                std::to_string(check.lhs) + " > rhs " + std::to_string(check.rhs) + ")",
                            check.lhs, check.rhs);
  }
  const MatrixXd x = spins_as_double(samples);
  const double sigma = sigma_plugin(x, cfg.sigmaCoreFraction, cfg.sigmaInflation);
  const VectorXd v = robust_mean_bounded_cov(x, eps, sigma, cfg.boundedFilter).mean;

  IsingFamily family(SuffStatSpec::centered(v), omega, cfg.mixingConstant);
  const MatrixXd stats = suff_stats_rows(family.spec(), samples);
  ExpFamLearnResult fit = robust_learn_expfam(stats, eps, family, cfg);
  annotate(fit.trace, family, cfg);

  ExternalLearnResult out{family.to_params(fit.eta), {}, std::move(fit.trace)};
  out.recovery.v = v;
  out.recovery.J = out.theta.interaction();
  out.recovery.h = fit.eta.tail(v.size());
  return out;
}

IsingParameters naive_mle_zero_field(const SampleSet& samples, double eta, const LearnerConfig& cfg) {
  spins_as_double(samples);
  IsingFamily family(SuffStatSpec::zero_field(samples.cols()), DobrushinSpec::dobrushin(eta),
                     cfg.mixingConstant);
  const VectorXd mean = suff_stats_rows(family.spec(), samples).colwise().mean().transpose();
  MleConfig mleCfg = cfg.mle;
  mleCfg.seed = derive_seed(cfg.seed, 0);
  return family.to_params(mle_from_mean(family, mean, cfg.mle.minDelta, cfg.zeta, mleCfg).eta);
}

IsingParameters naive_mle_external(const SampleSet& samples, const DobrushinSpec& omega,
                                   const LearnerConfig& cfg) {
  const MatrixXd x = spins_as_double(samples);
  const VectorXd v = x.colwise().mean().transpose();
  IsingFamily family(SuffStatSpec::centered(v), omega, cfg.mixingConstant);
  const VectorXd mean = suff_stats_rows(family.spec(), samples).colwise().mean().transpose();
  MleConfig mleCfg = cfg.mle;
  mleCfg.seed = derive_seed(cfg.seed, 0);
  return family.to_params(mle_from_mean(family, mean, cfg.mle.minDelta, cfg.zeta, mleCfg).eta);
}

IsingParameters from_centered(const CenteredRecovery& rec) {
  if (rec.J.rows() != rec.v.size() || rec.h.size() != rec.v.size()) {
    throw ParameterError("centered recovery has inconsistent sizes");
  }
  return IsingParameters(rec.J, rec.h - rec.J * rec.v);
}

CenteredRecovery to_centered(const IsingParameters& params, const VectorXd& v) {
  if (v.size() != params.dim()) throw ParameterError("center has the wrong length");
  return {v, params.interaction(), params.field() + params.interaction() * v};
}

}  // namespace robising
