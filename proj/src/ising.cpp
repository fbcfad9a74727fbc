#include "robising/ising.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>

namespace robising {

namespace {

void default_sink(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

WarningSink g_sink = &default_sink;

int checked_cap(Index d, int cap) {
  if (cap < 1 || cap > kHardEnumerationCap) {
    throw ParameterError("enumeration cap must lie in [1, " +
                         std::to_string(kHardEnumerationCap) + "]");
  }
  if (d > cap) {
    throw CapacityError("dimension " + std::to_string(d) + " exceeds enumeration cap " +
                        std::to_string(cap));
  }
  return cap;
}

double log_sum_exp(const std::vector<double>& v) {
  double hi = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

}  // namespace

void set_warning_sink(WarningSink sink) { g_sink = sink; }

void warn(const std::string& message) {
  if (g_sink != nullptr) g_sink(message);
}

VectorXd pack_upper(const MatrixXd& m) {
  const Index d = m.rows();
  VectorXd out(pair_count(d));
  Index k = 0;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) out(k++) = m(i, j);
  }
  return out;
}

MatrixXd unpack_upper(const VectorXd& pairs, Index d) {
  if (pairs.size() != pair_count(d)) {
    throw ParameterError("pair vector length does not match dimension");
  }
  MatrixXd m = MatrixXd::Zero(d, d);
  Index k = 0;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      m(i, j) = m(j, i) = pairs(k++);
    }
  }
  return m;
}

IsingParameters::IsingParameters(MatrixXd interaction, VectorXd field)
    : interaction_(std::move(interaction)), field_(std::move(field)) {
  const Index d = field_.size();
  if (d < 1) throw ParameterError("Ising dimension must be positive");
  if (interaction_.rows() != d || interaction_.cols() != d) {
    throw ParameterError("interaction matrix must be d x d");
  }
  if (!interaction_.allFinite() || !field_.allFinite()) {
    throw ParameterError("Ising parameters must be finite");
  }
  for (Index i = 0; i < d; ++i) {
    if (interaction_(i, i) != 0.0) throw ParameterError("interaction diagonal must be zero");
    for (Index j = i + 1; j < d; ++j) {
      if (interaction_(i, j) != interaction_(j, i)) {
        throw ParameterError("interaction matrix must be symmetric");
      }
    }
  }
}

IsingParameters IsingParameters::zeros(Index d) {
  return IsingParameters(MatrixXd::Zero(d, d), VectorXd::Zero(d));
}

IsingParameters IsingParameters::from_pairs(const VectorXd& pairs, Index d,
                                            const VectorXd& field) {
  return IsingParameters(unpack_upper(pairs, d), field.size() == 0 ? VectorXd::Zero(d) : field);
}

double IsingParameters::max_row_l1() const {
  return interaction_.cwiseAbs().rowwise().sum().maxCoeff();
}

double IsingParameters::max_abs_field() const { return field_.cwiseAbs().maxCoeff(); }

double frobenius_distance(const IsingParameters& a, const IsingParameters& b) {
  if (a.dim() != b.dim()) throw ParameterError("dimension mismatch");
  return std::sqrt((a.interaction() - b.interaction()).squaredNorm() +
                   (a.field() - b.field()).squaredNorm());
}

DobrushinSpec DobrushinSpec::dobrushin(double eta) {
  DobrushinSpec s{eta, 1.0 - eta, 0.0};
  s.validate();
  return s;
}

void DobrushinSpec::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
  if (!(M >= 0.0) || !std::isfinite(M)) throw ParameterError("M must be non-negative");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be non-negative");
}

bool check_dobrushin(const IsingParameters& params, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
  return params.max_row_l1() <= 1.0 - eta;
}

bool check_bounded(const IsingParameters& params, const DobrushinSpec& spec) {
  return params.max_row_l1() <= spec.M && params.max_abs_field() <= spec.alpha;
}

void require_spins(const Eigen::Ref<const VectorXd>& x) {
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) != 1.0 && x(i) != -1.0) throw DomainError("spin entries must be +1 or -1");
  }
}

double unnormalized_log_density(const IsingParameters& params,
                                const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != params.dim()) throw ParameterError("spin vector has wrong length");
  require_spins(x);
  return 0.5 * x.dot(params.interaction() * x) + params.field().dot(x);
}

IsingParameters conditional_model(const IsingParameters& params, std::span<const Index> keep,
                                  const VectorXd& fixed) {
  const Index d = params.dim();
  if (keep.empty()) throw ParameterError("kept index set must be nonempty");
  if (fixed.size() != d) throw ParameterError("fixed spin vector must have length d");
  std::vector<char> kept(static_cast<std::size_t>(d), 0);
  for (Index i : keep) {
    if (i < 0 || i >= d) throw ParameterError("kept index out of range");
    if (kept[static_cast<std::size_t>(i)]) throw ParameterError("kept indices overlap");
    kept[static_cast<std::size_t>(i)] = 1;
  }
  const Index m = static_cast<Index>(keep.size());
  MatrixXd sub(m, m);
  VectorXd h(m);
  for (Index a = 0; a < m; ++a) {
    const Index i = keep[static_cast<std::size_t>(a)];
    for (Index b = 0; b < m; ++b) sub(a, b) = params.interaction()(i, keep[static_cast<std::size_t>(b)]);
    double hi = params.field()(i);
    for (Index j = 0; j < d; ++j) {
      if (kept[static_cast<std::size_t>(j)]) continue;
      if (fixed(j) != 1.0 && fixed(j) != -1.0) throw DomainError("fixed spins must be +1 or -1");
      hi += params.interaction()(i, j) * fixed(j);
    }
    h(a) = hi;
  }
  return IsingParameters(std::move(sub), std::move(h));
}

VectorXd spins_from_index(std::uint64_t state, Index d) {
  VectorXd x(d);
  for (Index i = 0; i < d; ++i) x(i) = ((state >> i) & 1u) ? 1.0 : -1.0;
  return x;
}

std::uint64_t index_from_spins(const Eigen::Ref<const VectorXd>& x) {
  std::uint64_t s = 0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) > 0.0) s |= (std::uint64_t{1} << i);
  }
  return s;
}

std::vector<double> enumerate_probabilities(const IsingParameters& params, int cap,
                                            double* logZ) {
  const Index d = params.dim();
  checked_cap(d, cap);
  const std::uint64_t states = std::uint64_t{1} << d;
  std::vector<double> logw(states);
  for (std::uint64_t s = 0; s < states; ++s) {
    VectorXd x = spins_from_index(s, d);
    logw[s] = 0.5 * x.dot(params.interaction() * x) + params.field().dot(x);
  }
  const double lz = log_sum_exp(logw);
  for (double& w : logw) w = std::exp(w - lz);
  if (logZ != nullptr) *logZ = lz;
  return logw;
}

ExactSummary exact_summary(const IsingParameters& params, int cap) {
  const Index d = params.dim();
  ExactSummary out;
  std::vector<double> prob = enumerate_probabilities(params, cap, &out.logZ);
  const std::uint64_t states = prob.size();
  const Index k = pair_count(d) + d;

  MatrixXd stats(static_cast<Index>(states), k);
  for (std::uint64_t s = 0; s < states; ++s) {
    VectorXd x = spins_from_index(s, d);
    Index c = 0;
    for (Index i = 0; i < d; ++i) {
      for (Index j = i + 1; j < d; ++j) stats(static_cast<Index>(s), c++) = x(i) * x(j);
    }
    stats.row(static_cast<Index>(s)).tail(d) = x.transpose();
  }
  Eigen::Map<const VectorXd> p(prob.data(), static_cast<Index>(states));
  out.suffStatMean = stats.transpose() * p;
  MatrixXd centered = stats.rowwise() - out.suffStatMean.transpose();
  out.suffStatCov = centered.transpose() * p.asDiagonal() * centered;
  out.suffStatCov = 0.5 * (out.suffStatCov + out.suffStatCov.transpose()).eval();

  out.mean = out.suffStatMean.tail(d);
  out.pairMoments = unpack_upper(out.suffStatMean.head(pair_count(d)), d);
  out.pairMoments.diagonal().setOnes();
  return out;
}

double exact_tv(const IsingParameters& p1, const IsingParameters& p2, int cap) {
  if (p1.dim() != p2.dim()) throw ParameterError("exact_tv: dimension mismatch");
  std::vector<double> a = enumerate_probabilities(p1, cap);
  std::vector<double> b = enumerate_probabilities(p2, cap);
  double acc = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) acc += std::abs(a[s] - b[s]);
  return std::clamp(0.5 * acc, 0.0, 1.0);
}

VectorXd project_l1_ball(const VectorXd& v, double radius) {
  if (radius < 0.0) throw ParameterError("l1 radius must be non-negative");
  if (v.lpNorm<1>() <= radius) return v;
  if (radius == 0.0) return VectorXd::Zero(v.size());
  std::vector<double> u(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double shift = 0.0;
  for (std::size_t r = 0; r < u.size(); ++r) {
    cumsum += u[r];
    const double t = (cumsum - radius) / static_cast<double>(r + 1);
    if (u[r] - t > 0.0) shift = t;
  }
  VectorXd w(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - shift, 0.0);
    w(i) = v(i) >= 0.0 ? mag : -mag;
  }
  return w;
}

ProjectionResult project_parameter_set_detailed(const IsingParameters& raw,
                                                const DobrushinSpec& spec, double tol) {
  if (!(tol > 0.0)) throw ParameterError("projection tolerance must be positive");
  if (!(spec.M >= 0.0) || !(spec.alpha >= 0.0)) throw ParameterError("M and alpha must be non-negative");
  const Index d = raw.dim();
  const Index npairs = pair_count(d);

  // Pair indices touched by each row constraint.
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      if (j == i) continue;
      rows[static_cast<std::size_t>(i)].push_back(i < j ? pair_index(i, j, d) : pair_index(j, i, d));
    }
  }

  VectorXd x = raw.pairs();
  const double diam = std::sqrt(2.0) * x.norm() + std::sqrt(2.0 * static_cast<double>(d)) * spec.M + 1.0;
  const int cap = static_cast<int>(
      10 * d * std::max<Index>(1, static_cast<Index>(std::ceil(std::log(diam / tol)))));

  ProjectionResult result;
  std::vector<VectorXd> increments(static_cast<std::size_t>(d), VectorXd::Zero(std::max<Index>(d - 1, 0)));
  VectorXd sub(std::max<Index>(d - 1, 0));
  bool converged = npairs == 0;
  while (!converged) {
    if (result.sweeps >= cap) {
      throw NumericError("Dykstra projection did not converge", result.lastMove);
    }
    const VectorXd before = x;
    for (Index i = 0; i < d; ++i) {
      const auto& idx = rows[static_cast<std::size_t>(i)];
      VectorXd& inc = increments[static_cast<std::size_t>(i)];
      for (std::size_t a = 0; a < idx.size(); ++a) sub(static_cast<Index>(a)) = x(idx[a]) + inc(static_cast<Index>(a));
      VectorXd y = project_l1_ball(sub, spec.M);
      inc = sub - y;
      for (std::size_t a = 0; a < idx.size(); ++a) x(idx[a]) = y(static_cast<Index>(a));
    }
    ++result.sweeps;
    // Frobenius norm of the full symmetric matrix counts each pair twice.
    result.lastMove = std::sqrt(2.0) * (x - before).norm();
    converged = result.lastMove < tol / 2.0;
  }

  // Dykstra ends inside the last set only; shrink rows that still exceed M.
  // Scaling pair (i,j) by min(s_i, s_j) keeps every row within its bound.
  MatrixXd theta = unpack_upper(x, d);
  VectorXd scale = VectorXd::Ones(d);
  for (Index i = 0; i < d; ++i) {
    const double row = theta.row(i).cwiseAbs().sum();
    if (row > spec.M) scale(i) = row > 0.0 ? (spec.M / row) * (1.0 - 4.0 * std::numeric_limits<double>::epsilon()) : 0.0;
  }
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) theta(i, j) *= std::min(scale(i), scale(j));
  }
  VectorXd field = raw.field().cwiseMax(-spec.alpha).cwiseMin(spec.alpha);
  result.params = IsingParameters(std::move(theta), std::move(field));
  return result;
}

IsingParameters project_parameter_set(const IsingParameters& raw, const DobrushinSpec& spec,
                                      double tol) {
  return project_parameter_set_detailed(raw, spec, tol).params;
}

}  // namespace robising
