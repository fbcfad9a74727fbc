#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "robising/contamination.hpp"

using namespace robising;

namespace {

SampleSet uniform_spins(Index n, Index d, std::uint64_t seed) {
  ChainConfig chain;
  chain.masterSeed = seed;
  return sample_batch(IsingParameters::zeros(d), n, chain);
}

}  // namespace

TEST_CASE("attack names round trip") {
  for (AttackKind k : {AttackKind::ReplaceWithPoint, AttackKind::MeanShiftDirection,
                       AttackKind::PairCorrelationBoost, AttackKind::HeavyTailInjection}) {
    CHECK(attack_from_name(attack_name(k)) == k);
  }
  CHECK_THROWS_AS(attack_from_name("flip-everything"), ParameterError);
}

TEST_CASE("row selection: count, order, uniqueness, determinism") {
  for (Index n : {Index{1}, Index{19}, Index{999}, Index{1000}}) {
    for (double eps : {0.0, 0.05, 0.3}) {
      const auto rows = choose_rows(n, eps, 4);
      CHECK(rows.size() == static_cast<std::size_t>(std::floor(eps * static_cast<double>(n))));
      CHECK(std::is_sorted(rows.begin(), rows.end()));
      CHECK(std::set<Index>(rows.begin(), rows.end()).size() == rows.size());
      for (Index r : rows) CHECK((r >= 0 && r < n));
      CHECK(rows == choose_rows(n, eps, 4));
    }
  }
  CHECK(choose_rows(1000, 0.05, 1) != choose_rows(1000, 0.05, 2));
}

TEST_CASE("eps = 0 leaves the data untouched") {
  const SampleSet x = uniform_spins(300, 5, 1);
  for (const char* name : {"replace-with-point", "mean-shift-direction", "pair-correlation-boost"}) {
    AttackSpec a;
    a.kind = attack_from_name(name);
    const CorruptedSamples c = corrupt(x, a);
    CHECK(c.samples == x);
    CHECK(c.replaced.empty());
  }
}

TEST_CASE("replace-with-point alters exactly the chosen rows") {
  const SampleSet x = uniform_spins(1000, 6, 2);
  AttackSpec a;
  a.eps = 0.05;
  a.seed = 3;
  a.point = VectorXd::Ones(6);
  a.point(2) = -1.0;
  const CorruptedSamples c = corrupt(x, a);
  REQUIRE(c.replaced.size() == 50);
  std::set<Index> hit(c.replaced.begin(), c.replaced.end());
  for (Index r = 0; r < x.rows(); ++r) {
    if (hit.count(r)) {
      CHECK(c.samples.row(r).cast<double>() == a.point.transpose());
    } else {
      CHECK(c.samples.row(r) == x.row(r));
    }
  }
  CHECK(corrupt(x, a).samples == c.samples);
}

TEST_CASE("all-ones mean shift moves pair means by about eps") {
  const Index d = 4;
  const SampleSet x = uniform_spins(20000, d, 5);
  AttackSpec a;
  a.kind = AttackKind::MeanShiftDirection;
  a.eps = 0.1;
  a.seed = 6;
  const SampleSet y = corrupt(x, a).samples;
  const SuffStatSpec spec = SuffStatSpec::zero_field(d);
  const VectorXd shift = suff_stats_rows(spec, y).colwise().mean() - suff_stats_rows(spec, x).colwise().mean();
  // Replaced rows go from pair products averaging 0 to all +1.
  for (Index j = 0; j < shift.size(); ++j) CHECK(shift(j) == doctest::Approx(0.1).epsilon(0.3));
}

TEST_CASE("maximizing spins agrees with brute force") {
  Rng rng(8);
  std::normal_distribution<double> g;
  const Index d = 5;
  for (int trial = 0; trial < 5; ++trial) {
    VectorXd v = VectorXd::NullaryExpr(d, [&] { return 0.5 * g(rng); });
    const SuffStatSpec spec = SuffStatSpec::centered(v);
    const VectorXd w = VectorXd::NullaryExpr(spec.dim(), [&] { return g(rng); });
    double best = -1e300;
    for (std::uint64_t s = 0; s < (1u << d); ++s) best = std::max(best, w.dot(suff_stats(spec, spins_from_index(s, d))));
    CHECK(w.dot(suff_stats(spec, maximizing_spins(spec, w))) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("pair-correlation boost only touches the listed pair") {
  const SampleSet x = uniform_spins(500, 5, 9);
  AttackSpec a;
  a.kind = AttackKind::PairCorrelationBoost;
  a.eps = 0.2;
  a.pairs = {{1, 3}};
  const CorruptedSamples c = corrupt(x, a);
  for (Index r : c.replaced) {
    CHECK(c.samples(r, 1) == 1);
    CHECK(c.samples(r, 3) == 1);
    for (Index i : {0, 2, 4}) CHECK(c.samples(r, i) == x(r, i));
  }
  a.pairs = {{1, 1}};
  CHECK_THROWS_AS(corrupt(x, a), ParameterError);
}

TEST_CASE("heavy tails are refused on spins and injected on statistics") {
  const SampleSet x = uniform_spins(400, 4, 10);
  AttackSpec a;
  a.kind = AttackKind::HeavyTailInjection;
  a.eps = 0.05;
  a.seed = 11;
  CHECK_THROWS_AS(corrupt(x, a), ParameterError);

  const SuffStatSpec spec = SuffStatSpec::zero_field(4);
  const MatrixXd t = suff_stats_rows(spec, x);
  const CorruptedStats c = corrupt_stats(t, spec, a);
  REQUIRE(c.replaced.size() == 20);
  std::set<Index> hit(c.replaced.begin(), c.replaced.end());
  double sumNorm = 0.0;
  for (Index r = 0; r < t.rows(); ++r) {
    if (hit.count(r)) {
      sumNorm += c.stats.row(r).norm();
    } else {
      CHECK(c.stats.row(r) == t.row(r));
    }
  }
  CHECK(sumNorm / 20.0 > 10.0);
}

TEST_CASE("attack validation") {
  AttackSpec a;
  a.eps = 0.6;
  CHECK_THROWS_AS(a.validate(), ParameterError);
  a.eps = 0.1;
  a.magnitude = -1.0;
  CHECK_THROWS_AS(a.validate(), ParameterError);
}
