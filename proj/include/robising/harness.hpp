#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robising/contamination.hpp"
#include "robising/ising.hpp"
#include "robising/learner.hpp"

namespace robising {

enum class LearnerMode { ZeroField, External };

/// Model generator recipe: random (M, alpha)-bounded model from `seed`.
struct ModelRecipe {
  Index d = 8;
  double eta = 0.5;
  double M = 0.45;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::optional<std::string> modelFile;  ///< takes precedence over the recipe
  ModelRecipe recipe;
  std::int64_t nSamples = 50000;
  double sampleGamma = 1e-3;
  double eps = 0.05;
  std::string attack = "mean-shift-direction";
  LearnerMode mode = LearnerMode::ZeroField;
  double c0 = 0.1;
  double c1 = 1.0;
  LearnerConfig learner;
  int repetitions = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ResultRow {
  int rep = 0;
  double eps = 0.0;
  double frobeniusError = 0.0;
  std::optional<double> tvError;  ///< empty when d exceeds the enumeration cap
  double wallMs = 0.0;
};

/// Learner constants as a flat JSON object, and the reverse (unknown keys
/// are rejected).
nlohmann::json constants_to_json(const LearnerConfig& cfg);
void apply_constants(const nlohmann::json& j, LearnerConfig& cfg);

ExperimentConfig experiment_from_json(const nlohmann::json& j);
/// Full resolved configuration; loadable by experiment_from_json.
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);

IsingParameters experiment_model(const ExperimentConfig& cfg);

/// Generate, corrupt, learn and score every repetition. Repetition r uses
/// seeds derived from derive_seed(cfg.seed, r) and runs in parallel.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Header rep,eps,frobenius_error,tv_error_if_enumerable,wall_ms.
void write_results(const std::vector<ResultRow>& rows, const std::string& path);

/// Command-line entry point. Exit codes: 0 success, 1 numeric failure,
/// 2 usage or parameter error, 3 constraint refusal.
int cli_main(int argc, char** argv);

}  // namespace robising
