#include "robising/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace robising {

namespace {

// Rows: T(x) for every state of {±1}^d in spins_from_index order.
MatrixXd state_statistics(const SuffStatSpec& spec) {
  const std::uint64_t states = std::uint64_t{1} << spec.d;
  MatrixXd out(static_cast<Index>(states), spec.dim());
  for (std::uint64_t s = 0; s < states; ++s) {
    out.row(static_cast<Index>(s)) = suff_stats(spec, spins_from_index(s, spec.d)).transpose();
  }
  return out;
}

MomentEstimate weighted_moments(const MatrixXd& stats, const VectorXd& prob) {
  MomentEstimate m;
  m.mean = stats.transpose() * prob;
  MatrixXd centered = stats.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * prob.asDiagonal() * centered;
  clamp_psd(m.cov);
  m.nUsed = 0;
  m.gammaUsed = 0.0;
  return m;
}

VectorXd softmax(const VectorXd& logits) {
  const double hi = logits.maxCoeff();
  VectorXd p = (logits.array() - hi).exp().matrix();
  return p / p.sum();
}

}  // namespace

SuffStatSpec SuffStatSpec::zero_field(Index d) {
  SuffStatSpec s;
  s.kind = SuffStatKind::ZeroFieldPairs;
  s.d = d;
  s.validate();
  return s;
}

SuffStatSpec SuffStatSpec::centered(VectorXd v) {
  SuffStatSpec s;
  s.kind = SuffStatKind::CenteredWithLinear;
  s.d = v.size();
  s.center = std::move(v);
  s.validate();
  return s;
}

Index SuffStatSpec::dim() const {
  return kind == SuffStatKind::ZeroFieldPairs ? pair_count(d) : pair_count(d) + d;
}

void SuffStatSpec::validate() const {
  if (d < 1) throw ParameterError("sufficient statistic dimension must be positive");
  if (kind == SuffStatKind::CenteredWithLinear) {
    if (center.size() != d) throw ParameterError("centered statistics need a center of length d");
    if (!center.allFinite()) throw ParameterError("center must be finite");
  }
}

VectorXd suff_stats(const SuffStatSpec& spec, const Eigen::Ref<const VectorXd>& x) {
  spec.validate();
  if (x.size() != spec.d) throw ParameterError("spin vector has wrong length");
  require_spins(x);
  VectorXd t(spec.dim());
  const Index d = spec.d;
  Index k = 0;
  if (spec.kind == SuffStatKind::ZeroFieldPairs) {
    for (Index i = 0; i < d; ++i) {
      for (Index j = i + 1; j < d; ++j) t(k++) = x(i) * x(j);
    }
    return t;
  }
  const VectorXd c = x - spec.center;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) t(k++) = c(i) * c(j);
  }
  t.tail(d) = x;
  return t;
}

MatrixXd suff_stats_rows(const SuffStatSpec& spec, const SampleSet& samples) {
  spec.validate();
  if (samples.cols() != spec.d) throw ParameterError("sample set has wrong dimension");
  MatrixXd out(samples.rows(), spec.dim());
  for (Index r = 0; r < samples.rows(); ++r) {
    const VectorXd x = samples.row(r).cast<double>().transpose();
    out.row(r) = suff_stats(spec, x).transpose();
  }
  return out;
}

void clamp_psd(MatrixXd& cov) {
  cov = (0.5 * (cov + cov.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  if (eig.eigenvalues().size() == 0 || eig.eigenvalues().minCoeff() >= 0.0) return;
  const VectorXd vals = eig.eigenvalues().cwiseMax(0.0);
  cov = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  cov = (0.5 * (cov + cov.transpose())).eval();
}

MomentEstimate exact_moments(const IsingParameters& params, const SuffStatSpec& spec, int cap) {
  if (params.dim() != spec.d) throw ParameterError("model and statistic dimensions differ");
  std::vector<double> prob = enumerate_probabilities(params, cap);
  const VectorXd p = Eigen::Map<const VectorXd>(prob.data(), static_cast<Index>(prob.size()));
  return weighted_moments(state_statistics(spec), p);
}

MomentEstimate estimate_moments(const IsingParameters& params, const SuffStatSpec& spec,
                                std::int64_t n, double gamma, std::uint64_t seed,
                                double mixingConstant, std::int64_t budget) {
  spec.validate();
  if (params.dim() != spec.d) throw ParameterError("model and statistic dimensions differ");
  if (n < 2) throw ParameterError("estimate_moments needs n >= 2");
  const Index k = spec.dim();
  if (n > budget / std::max<Index>(1, k)) {
    throw CapacityError("estimate_moments: n*dim(T) exceeds the sample budget");
  }
  ChainConfig chain{gamma, mixingConstant, seed};
  chain.validate();

  constexpr std::int64_t kBlock = 8192;
  VectorXd shift;
  VectorXd sum = VectorXd::Zero(k);
  MatrixXd cross = MatrixXd::Zero(k, k);
  SampleSet block;
  for (std::int64_t first = 0; first < n; first += kBlock) {
    const std::int64_t count = std::min(kBlock, n - first);
    sample_range(params, first, count, chain, block);
    MatrixXd stats = suff_stats_rows(spec, block);
    // Shift by the first block's mean to keep the second-moment sum well conditioned.
    if (shift.size() == 0) shift = stats.colwise().mean().transpose();
    stats.rowwise() -= shift.transpose();
    sum += stats.colwise().sum().transpose();
    cross.selfadjointView<Eigen::Lower>().rankUpdate(stats.transpose());
  }
  cross = cross.selfadjointView<Eigen::Lower>();
  const double nn = static_cast<double>(n);
  MomentEstimate m;
  const VectorXd centeredMean = sum / nn;
  m.mean = centeredMean + shift;
  m.cov = cross / nn - centeredMean * centeredMean.transpose();
  clamp_psd(m.cov);
  m.nUsed = n;
  m.gammaUsed = gamma;
  return m;
}

// ---------------------------------------------------------------------------

void ApgdConfig::validate() const {
  if (!(strongConvexity > 0.0 && strongConvexity <= smoothness)) {
    throw ParameterError("APGD needs 0 < m <= L");
  }
  if (!(targetDist > 0.0 && gradientTol > 0.0 && projectionTol > 0.0)) {
    throw ParameterError("APGD tolerances must be positive");
  }
  if (maxIters < 1) throw ParameterError("APGD needs maxIters >= 1");
}

int ApgdConfig::iteration_count() const {
  const double ratio = smoothness / strongConvexity;
  const double logs = std::log(std::max(diameter, targetDist) / targetDist);
  const double t = std::ceil(ratio * logs);
  if (t > static_cast<double>(std::numeric_limits<int>::max())) return std::numeric_limits<int>::max();
  return std::max(1, static_cast<int>(t));
}

double ApgdConfig::error_bound() const {
  const double rate = std::sqrt(1.0 - strongConvexity / smoothness);
  return targetDist + (projectionTol + gradientTol / smoothness) / (1.0 - rate);
}

ApgdResult apgd_minimize(const GradientOracle& gradient, const ProjectionOracle& projection,
                         const VectorXd& start, const ApgdConfig& cfg) {
  cfg.validate();
  const int planned = cfg.iteration_count();
  const int iters = std::min(planned, cfg.maxIters);
  ApgdResult out;
  out.capped = planned > cfg.maxIters;
  VectorXd x = start;
  VectorXd best = x;
  double bestStep = std::numeric_limits<double>::infinity();
  if (cfg.recordIterates) out.iterates.push_back(x);
  for (int t = 0; t < iters; ++t) {
    const VectorXd g = gradient(x, t);
    VectorXd next = projection(x - g / cfg.smoothness);
    const double step = (next - x).norm();
    if (step < bestStep) {
      bestStep = step;
      best = next;
    }
    x = std::move(next);
    if (cfg.recordIterates) out.iterates.push_back(x);
  }
  out.iterations = iters;
  out.x = out.capped ? best : x;
  return out;
}

// ---------------------------------------------------------------------------

MomentEstimate ExponentialFamily::exact_moments(const VectorXd&) const {
  throw CapacityError("this exponential family has no exact moment oracle");
}

IsingFamily::IsingFamily(SuffStatSpec spec, DobrushinSpec omega, double mixingConstant,
                         int enumerationCap)
    : spec_(std::move(spec)), omega_(omega), mixingConstant_(mixingConstant), cap_(enumerationCap) {
  spec_.validate();
  if (!(omega_.M >= 0.0) || !(omega_.alpha >= 0.0)) throw ParameterError("M and alpha must be non-negative");
  if (spec_.kind == SuffStatKind::ZeroFieldPairs) omega_.alpha = 0.0;
  if (cap_ > kHardEnumerationCap) throw ParameterError("enumeration cap above hard cap");
  if (has_exact_moments()) stateStats_ = state_statistics(spec_);
}

double IsingFamily::diameter() const {
  const double d = static_cast<double>(spec_.d);
  const double pairPart = d * omega_.M * omega_.M / 2.0;
  if (spec_.kind == SuffStatKind::ZeroFieldPairs) return 2.0 * std::sqrt(pairPart);
  const double vmax = spec_.center.cwiseAbs().maxCoeff();
  const double fieldPart = d * std::pow(omega_.alpha + omega_.M * vmax, 2);
  return 2.0 * std::sqrt(pairPart + fieldPart);
}

IsingParameters IsingFamily::to_params(const VectorXd& eta) const {
  const Index d = spec_.d;
  const Index np = pair_count(d);
  if (eta.size() != dimension()) throw ParameterError("natural parameter has wrong length");
  MatrixXd theta = unpack_upper(eta.head(np), d);
  if (spec_.kind == SuffStatKind::ZeroFieldPairs) return IsingParameters(std::move(theta), VectorXd::Zero(d));
  VectorXd field = eta.tail(d) - theta * spec_.center;
  return IsingParameters(std::move(theta), std::move(field));
}

VectorXd IsingFamily::from_params(const IsingParameters& params) const {
  const Index d = spec_.d;
  if (params.dim() != d) throw ParameterError("model dimension mismatch");
  const Index np = pair_count(d);
  VectorXd eta(dimension());
  eta.head(np) = params.pairs();
  if (spec_.kind == SuffStatKind::CenteredWithLinear) {
    eta.tail(d) = params.field() + params.interaction() * spec_.center;
  }
  return eta;
}

VectorXd IsingFamily::project(const VectorXd& eta, double tol) const {
  return from_params(project_parameter_set(to_params(eta), omega_, tol));
}

MomentEstimate IsingFamily::exact_moments(const VectorXd& eta) const {
  if (!has_exact_moments()) throw CapacityError("dimension above enumeration cap");
  // log P_η(x) = <η, T(x)> - A(η) over the precomputed state statistics.
  const VectorXd p = softmax(stateStats_ * eta);
  return weighted_moments(stateStats_, p);
}

MomentEstimate IsingFamily::sample_moments(const VectorXd& eta, std::int64_t n, double gamma,
                                           std::uint64_t seed) const {
  return estimate_moments(to_params(eta), spec_, n, gamma, seed, mixingConstant_);
}

// ---------------------------------------------------------------------------

MleResult mle_from_mean(const ExponentialFamily& family, const VectorXd& muPrime, double delta,
                        double zeta, const MleConfig& cfg, const VectorXd& start) {
  if (muPrime.size() != family.dimension()) throw ParameterError("mean target has wrong length");
  if (!muPrime.allFinite()) throw ParameterError("mean target must be finite");
  if (!(delta > 0.0 && delta < 1.0) || !(zeta > 0.0 && zeta < 1.0)) {
    throw ParameterError("mle_from_mean needs delta, zeta in (0, 1)");
  }
  const double tol = std::max(delta, cfg.minDelta);
  bool exact = false;
  switch (cfg.gradientSource) {
    case MomentSource::Exact:
      if (!family.has_exact_moments()) throw CapacityError("exact gradients unavailable at this dimension");
      exact = true;
      break;
    case MomentSource::Sampled: exact = false; break;
    case MomentSource::Auto: exact = family.has_exact_moments(); break;
  }

  MleResult result;
  const double k = static_cast<double>(family.dimension());
  const double wanted = std::ceil(cfg.gradientSampleConstant * k / (tol * tol));
  const std::int64_t nGrad = static_cast<std::int64_t>(
      std::max(2.0, std::min(wanted, static_cast<double>(cfg.sampleBudget))));
  result.sampleShortfall = !exact && wanted > static_cast<double>(cfg.sampleBudget);
  const double gamma = std::clamp(tol * tol * zeta / (100.0 * static_cast<double>(nGrad)), 1e-12, 0.5);

  GradientOracle grad = [&](const VectorXd& eta, int t) -> VectorXd {
    if (exact) return family.exact_moments(eta).mean - muPrime;
    return family.sample_moments(eta, nGrad, gamma, derive_seed(cfg.seed, static_cast<std::uint64_t>(t))).mean -
           muPrime;
  };
  ProjectionOracle proj = [&](const VectorXd& r) { return family.project(r, tol); };

  ApgdConfig apgd;
  apgd.smoothness = cfg.smoothness;
  apgd.strongConvexity = cfg.strongConvexity;
  apgd.targetDist = tol;
  apgd.gradientTol = tol;
  apgd.projectionTol = tol;
  apgd.diameter = family.diameter();
  apgd.maxIters = cfg.maxIters;

  const VectorXd x0 = start.size() == family.dimension() ? family.project(start, tol) : family.interior_point();
  ApgdResult run = apgd_minimize(grad, proj, x0, apgd);
  result.eta = std::move(run.x);
  result.iterations = run.iterations;
  result.capped = run.capped;
  return result;
}

IsingParameters mle_from_mean(const VectorXd& muPrime, const SuffStatSpec& spec,
                              const DobrushinSpec& omega, double delta, double zeta,
                              const MleConfig& cfg) {
  IsingFamily family(spec, omega);
  return family.to_params(mle_from_mean(family, muPrime, delta, zeta, cfg).eta);
}

}  // namespace robising
