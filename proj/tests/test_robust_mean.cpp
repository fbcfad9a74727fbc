#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "robising/contamination.hpp"
#include "robising/expfam.hpp"
#include "robising/robust_mean.hpp"

using namespace robising;

namespace {

MatrixXd gaussian(Index n, Index k, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  return MatrixXd::NullaryExpr(n, k, [&] { return g(rng); });
}

MatrixXd with_outliers(MatrixXd x, double eps, const VectorXd& where, std::uint64_t seed) {
  for (Index r : choose_rows(x.rows(), eps, seed)) x.row(r) = where.transpose();
  return x;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

MatrixXd uniform_pair_stats(Index d, Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  SampleSet spins(n, d);
  for (Index i = 0; i < spins.size(); ++i) spins.data()[i] = coin(rng) ? 1 : -1;
  return suff_stats_rows(SuffStatSpec::zero_field(d), spins);
}

int warnings = 0;
void count_warning(const std::string&) { ++warnings; }

}  // namespace

TEST_CASE("top eigenpair matches a dense solver") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MatrixXd G = gaussian(30, 6, seed);
    const MatrixXd S = G.transpose() * G / 30.0;
    const auto [lambda, u] = top_eigenpair(S);
    const double ref = Eigen::SelfAdjointEigenSolver<MatrixXd>(S).eigenvalues().maxCoeff();
    CHECK(lambda == doctest::Approx(ref).epsilon(1e-8));
    CHECK((S * u - lambda * u).norm() < 1e-6);
  }
}

TEST_CASE("top eigenpair recovers when the all-ones start is orthogonal to it") {
  Eigen::Vector2d u(1.0, -1.0);
  u /= u.norm();
  const MatrixXd S = MatrixXd::Identity(2, 2) + 5.0 * u * u.transpose();
  CHECK(top_eigenpair(S).first == doctest::Approx(6.0));
}

TEST_CASE("degenerate input returns the common point") {
  VectorXd p(3);
  p << 1.5, -2.0, 0.25;
  const MatrixXd x = p.transpose().replicate(50, 1);
  CHECK(robust_mean_bounded_cov(x, 0.1, 1.0).mean == p);
  CHECK(robust_mean_near_identity(x, 0.1, 0.1).mean == p);
}

TEST_CASE("no-op filters return the empirical mean bit-exactly") {
  const MatrixXd x = gaussian(500, 5, 1);
  const VectorXd mean = x.colwise().mean().transpose();
  CHECK(robust_mean_bounded_cov(x, 0.0, 1.0).mean == mean);
  CHECK(robust_mean_near_identity(x, 0.0, 0.2).mean == mean);
  // eps > 0 but the top eigenvalue is under the stopping threshold.
  const auto r = robust_mean_bounded_cov(x, 0.1, 1.0);
  CHECK(r.diagnostics.rounds == 0);
  CHECK(r.mean == mean);
  const auto s = robust_mean_near_identity(x, 0.1, 1.0);
  CHECK(s.diagnostics.rounds == 0);
  CHECK(s.mean == mean);
}

TEST_CASE("bounded-covariance filter on a far spherical outlier cluster") {
  std::vector<double> errs, naive;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Index k = 20;
    VectorXd far = VectorXd::Zero(k);
    far(0) = 100.0;
    const MatrixXd x = with_outliers(gaussian(2000, k, t), 0.05, far, t + 1000);
    const auto r = robust_mean_bounded_cov(x, 0.05, 1.0);
    errs.push_back(r.mean.norm());
    naive.push_back(x.colwise().mean().norm());
    CHECK(r.diagnostics.massRemoved <= 3 * 0.05 + 1e-12);
    CHECK(r.diagnostics.rounds <= 5 * k);
  }
  CHECK(median(errs) <= 1.0);
  CHECK(median(naive) == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("near-identity filter on clean whitened pair statistics") {
  // Pair statistics of uniform spins have mean 0 and identity covariance.
  const Index n = 5000;
  for (std::uint64_t t = 0; t < 5; ++t) {
    const MatrixXd y = uniform_pair_stats(8, n, t);
    const double k = static_cast<double>(y.cols());
    const auto r = robust_mean_near_identity(y, 0.05, 0.1);
    CHECK(r.mean.norm() <= 2.0 * std::sqrt(k / n) * std::log(static_cast<double>(n)));
  }
}

TEST_CASE("near-identity filter removes a whitened cluster") {
  std::vector<double> errs;
  for (std::uint64_t t = 0; t < 10; ++t) {
    MatrixXd y = uniform_pair_stats(10, 5000, t);
    Rng rng(t + 50);
    std::normal_distribution<double> g;
    VectorXd u = VectorXd::NullaryExpr(y.cols(), [&] { return g(rng); });
    u *= 20.0 / u.norm();
    y = with_outliers(y, 0.05, u, t + 60);
    const auto r = robust_mean_near_identity(y, 0.05, 0.0);
    CHECK(r.diagnostics.massRemoved >= 0.05);
    CHECK(r.diagnostics.massRemoved <= 0.15);
    errs.push_back(r.mean.norm());
  }
  // Clean error scale is sqrt(45 / 4750) ~ 0.1; the cluster alone would add 1.
  CHECK(median(errs) < 0.2);
}

TEST_CASE("permutation invariance") {
  VectorXd far = VectorXd::Constant(6, 10.0);
  const MatrixXd x = with_outliers(gaussian(400, 6, 3), 0.1, far, 4);
  std::vector<Index> perm(400);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), Rng(9));
  MatrixXd shuffled(400, 6);
  for (Index r = 0; r < 400; ++r) shuffled.row(r) = x.row(perm[static_cast<std::size_t>(r)]);
  const auto a = robust_mean_bounded_cov(x, 0.1, 1.0);
  REQUIRE(a.diagnostics.rounds > 0);
  CHECK(a.mean == robust_mean_bounded_cov(shuffled, 0.1, 1.0).mean);
  const auto b = robust_mean_near_identity(x, 0.1, 0.1);
  REQUIRE(b.diagnostics.rounds > 0);
  CHECK(b.mean == robust_mean_near_identity(shuffled, 0.1, 0.1).mean);
}

TEST_CASE("translation and rotation equivariance") {
  VectorXd far = VectorXd::Zero(5);
  far(1) = 30.0;
  const MatrixXd x = with_outliers(gaussian(600, 5, 11), 0.05, far, 12);
  VectorXd c(5);
  c << 3.0, -1.0, 0.5, 7.0, -2.0;
  const MatrixXd shifted = x.rowwise() + c.transpose();
  CHECK((robust_mean_bounded_cov(shifted, 0.05, 1.0).mean - robust_mean_bounded_cov(x, 0.05, 1.0).mean - c).norm() <
        1e-9);
  CHECK((robust_mean_near_identity(shifted, 0.05, 0.1).mean - robust_mean_near_identity(x, 0.05, 0.1).mean - c)
            .norm() < 1e-9);
  const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(gaussian(5, 5, 13)).householderQ();
  const MatrixXd rotated = x * Q.transpose();
  CHECK((robust_mean_bounded_cov(rotated, 0.05, 1.0).mean - Q * robust_mean_bounded_cov(x, 0.05, 1.0).mean).norm() <
        1e-8);
}

TEST_CASE("breakdown sanity: outliers at distance 1e6") {
  const Index k = 10;
  const MatrixXd clean = gaussian(2000, k, 21);
  VectorXd far = VectorXd::Zero(k);
  far(3) = 1e6;
  const MatrixXd x = with_outliers(clean, 0.05, far, 22);
  const double cleanErr = robust_mean_bounded_cov(clean, 0.05, 1.0).mean.norm();
  CHECK(robust_mean_bounded_cov(x, 0.05, 1.0).mean.norm() <= 10.0 * cleanErr);
  CHECK(robust_mean_near_identity(x, 0.05, 0.1).mean.norm() <= 10.0 * cleanErr);
}

TEST_CASE("mass removal is capped") {
  // Two equal clusters: no filter may discard more than 3 eps of the mass.
  MatrixXd x = gaussian(1000, 4, 31);
  x.topRows(500).array() += 10.0;
  const auto a = robust_mean_bounded_cov(x, 0.05, 1.0);
  CHECK(a.diagnostics.massRemoved <= 0.15 + 1e-12);
  const auto b = robust_mean_near_identity(x, 0.05, 0.1);
  CHECK(b.diagnostics.massRemoved <= 0.15 + 1e-12);
}

TEST_CASE("argument checks and warnings") {
  const MatrixXd x = gaussian(10, 2, 1);
  CHECK_THROWS_AS(robust_mean_bounded_cov(x, 0.4, 1.0), ParameterError);
  CHECK_THROWS_AS(robust_mean_bounded_cov(x, 0.1, 0.0), ParameterError);
  CHECK_THROWS_AS(robust_mean_bounded_cov(x.topRows(1), 0.1, 1.0), ParameterError);
  CHECK_THROWS_AS(robust_mean_near_identity(x, 0.1, -1.0), ParameterError);
  warnings = 0;
  set_warning_sink(count_warning);
  robust_mean_near_identity(x, 0.01, 5.0);
  CHECK(warnings == 1);
  set_warning_sink(nullptr);
}

TEST_CASE("single precision instantiation") {
  const Eigen::MatrixXf x = gaussian(300, 3, 5).cast<float>();
  const auto r = robust_mean_bounded_cov(x, 0.05, 1.0);
  CHECK(r.mean.size() == 3);
  CHECK(r.mean.norm() < 0.5f);
}
