#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "robising/expfam.hpp"
#include "robising/glauber.hpp"

namespace robising {

enum class AttackKind { ReplaceWithPoint, MeanShiftDirection, PairCorrelationBoost, HeavyTailInjection };

/// CLI names: replace-with-point, mean-shift-direction, pair-correlation-boost,
/// heavy-tail-injection.
AttackKind attack_from_name(const std::string& name);
std::string attack_name(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::ReplaceWithPoint;
  double eps = 0.0;
  std::uint64_t seed = 0;

  /// replace-with-point: spin vector written into every replaced row
  /// (default all +1).
  VectorXd point;
  /// mean-shift-direction: weights w on T(x); replaced rows maximize <w, T(x)>
  /// (default all ones). Spin attacks use the zero-field pair statistics.
  VectorXd direction;
  /// pair-correlation-boost: pairs (i, j) set to x_i = x_j = +1 in a copy of
  /// the original row (default {(0, 1)}).
  std::vector<std::pair<Index, Index>> pairs;
  /// heavy-tail-injection: scale of the injected vectors.
  double magnitude = 100.0;

  void validate() const;
};

struct CorruptedSamples {
  SampleSet samples;
  std::vector<Index> replaced;  ///< sorted indices of the altered rows
};

struct CorruptedStats {
  MatrixXd stats;
  std::vector<Index> replaced;
};

/// floor(eps·n) uniformly chosen rows, sorted.
std::vector<Index> choose_rows(Index n, double eps, std::uint64_t seed);

/// Replaces exactly floor(eps·n) uniformly chosen rows of a spin sample set
/// by adversarial rows; every other row is left untouched.
CorruptedSamples corrupt(const SampleSet& samples, const AttackSpec& attack);

/// The same replacement model on sufficient-statistic rows. Supports
/// replace-with-point (a fixed statistic vector), mean-shift-direction
/// (T of the maximizing spin vector under `spec`) and heavy-tail-injection
/// (magnitude · random unit direction · |Cauchy|).
CorruptedStats corrupt_stats(const MatrixXd& stats, const SuffStatSpec& spec, const AttackSpec& attack);

/// Spin vector maximizing <w, T(x)>: exhaustive for d <= 20, greedy
/// coordinate ascent from all +1 otherwise.
VectorXd maximizing_spins(const SuffStatSpec& spec, const VectorXd& w);

}  // namespace robising
