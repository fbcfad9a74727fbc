#include "robising/contamination.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace robising {

AttackKind attack_from_name(const std::string& name) {
  if (name == "replace-with-point") return AttackKind::ReplaceWithPoint;
  if (name == "mean-shift-direction") return AttackKind::MeanShiftDirection;
  if (name == "pair-correlation-boost") return AttackKind::PairCorrelationBoost;
  if (name == "heavy-tail-injection") return AttackKind::HeavyTailInjection;
  throw ParameterError("unknown attack '" + name + "'");
}

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::ReplaceWithPoint: return "replace-with-point";
    case AttackKind::MeanShiftDirection: return "mean-shift-direction";
    case AttackKind::PairCorrelationBoost: return "pair-correlation-boost";
    case AttackKind::HeavyTailInjection: return "heavy-tail-injection";
  }
  return "unknown";
}

void AttackSpec::validate() const {
  if (!(eps >= 0.0 && eps < 0.5)) throw ParameterError("attack eps must lie in [0, 1/2)");
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) throw ParameterError("attack magnitude must be positive");
}

std::vector<Index> choose_rows(Index n, double eps, std::uint64_t seed) {
  const Index m = static_cast<Index>(std::floor(eps * static_cast<double>(n)));
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  Rng rng(derive_seed(seed, 0));
  // Partial Fisher-Yates: the first m slots become a uniform m-subset.
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(m));
  std::sort(all.begin(), all.end());
  return all;
}

VectorXd maximizing_spins(const SuffStatSpec& spec, const VectorXd& w) {
  spec.validate();
  if (w.size() != spec.dim()) throw ParameterError("attack direction has the wrong length");
  const Index d = spec.d;
  if (d <= 20) {
    const std::uint64_t states = std::uint64_t{1} << d;
    std::uint64_t best = states - 1;
    double bestValue = w.dot(suff_stats(spec, spins_from_index(best, d)));
    for (std::uint64_t s = 0; s < states; ++s) {
      const double value = w.dot(suff_stats(spec, spins_from_index(s, d)));
      if (value > bestValue) {
        bestValue = value;
        best = s;
      }
    }
    return spins_from_index(best, d);
  }
  VectorXd x = VectorXd::Ones(d);
  double value = w.dot(suff_stats(spec, x));
  for (bool improved = true; improved;) {
    improved = false;
    for (Index i = 0; i < d; ++i) {
      x(i) = -x(i);
      const double flipped = w.dot(suff_stats(spec, x));
      if (flipped > value) {
        value = flipped;
        improved = true;
      } else {
        x(i) = -x(i);
      }
    }
  }
  return x;
}

CorruptedSamples corrupt(const SampleSet& samples, const AttackSpec& attack) {
  attack.validate();
  const Index n = samples.rows();
  const Index d = samples.cols();
  if (attack.kind == AttackKind::HeavyTailInjection) {
    throw ParameterError("heavy-tail-injection applies to sufficient statistics, not spins");
  }
  CorruptedSamples out{samples, choose_rows(n, attack.eps, attack.seed)};
  if (out.replaced.empty()) return out;

  switch (attack.kind) {
    case AttackKind::ReplaceWithPoint: {
      const VectorXd point = attack.point.size() ? attack.point : VectorXd::Ones(d);
      if (point.size() != d) throw ParameterError("attack point has the wrong length");
      require_spins(point);
      for (Index r : out.replaced) out.samples.row(r) = point.cast<std::int8_t>().transpose();
      break;
    }
    case AttackKind::MeanShiftDirection: {
      const SuffStatSpec spec = SuffStatSpec::zero_field(d);
      const VectorXd w = attack.direction.size() ? attack.direction : VectorXd::Ones(spec.dim());
      const VectorXd x = maximizing_spins(spec, w);
      for (Index r : out.replaced) out.samples.row(r) = x.cast<std::int8_t>().transpose();
      break;
    }
    case AttackKind::PairCorrelationBoost: {
      auto pairs = attack.pairs;
      if (pairs.empty()) pairs.emplace_back(0, 1);
      for (const auto& [i, j] : pairs) {
        if (i < 0 || j < 0 || i >= d || j >= d || i == j) throw ParameterError("attack pair out of range");
      }
      for (Index r : out.replaced) {
        for (const auto& [i, j] : pairs) {
          out.samples(r, i) = 1;
          out.samples(r, j) = 1;
        }
      }
      break;
    }
    case AttackKind::HeavyTailInjection: break;
  }
  return out;
}

CorruptedStats corrupt_stats(const MatrixXd& stats, const SuffStatSpec& spec, const AttackSpec& attack) {
  attack.validate();
  spec.validate();
  const Index k = stats.cols();
  if (k != spec.dim()) throw ParameterError("statistics do not match the layout");
  CorruptedStats out{stats, choose_rows(stats.rows(), attack.eps, attack.seed)};
  if (out.replaced.empty()) return out;

  switch (attack.kind) {
    case AttackKind::ReplaceWithPoint: {
      const VectorXd point = attack.point.size() ? attack.point : VectorXd::Ones(k);
      if (point.size() != k) throw ParameterError("attack point has the wrong length");
      for (Index r : out.replaced) out.stats.row(r) = point.transpose();
      break;
    }
    case AttackKind::MeanShiftDirection: {
      const VectorXd w = attack.direction.size() ? attack.direction : VectorXd::Ones(k);
      const VectorXd t = suff_stats(spec, maximizing_spins(spec, w));
      for (Index r : out.replaced) out.stats.row(r) = t.transpose();
      break;
    }
    case AttackKind::HeavyTailInjection: {
      Rng rng(derive_seed(attack.seed, 1));
      std::normal_distribution<double> gauss;
      std::cauchy_distribution<double> cauchy;
      for (Index r : out.replaced) {
        VectorXd u(k);
        for (Index c = 0; c < k; ++c) u(c) = gauss(rng);
        u /= u.norm();
        out.stats.row(r) = (attack.magnitude * std::abs(cauchy(rng)) * u).transpose();
      }
      break;
    }
    case AttackKind::PairCorrelationBoost:
      throw ParameterError("pair-correlation-boost applies to spins, not sufficient statistics");
  }
  return out;
}

}  // namespace robising
