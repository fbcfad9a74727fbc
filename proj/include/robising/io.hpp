#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "robising/glauber.hpp"
#include "robising/ising.hpp"
#include "robising/learner.hpp"

namespace robising {

/// %.17g rendering; round-trips every double.
std::string format_double(double x);

/// {"d": d, "interaction": [[...], ...], "field": [...]}.
nlohmann::json model_to_json(const IsingParameters& params);
/// Rejects asymmetry or non-zero diagonal beyond 1e-12, then symmetrizes.
IsingParameters model_from_json(const nlohmann::json& j);

IsingParameters load_model(const std::string& path);
void save_model(const IsingParameters& params, const std::string& path);

nlohmann::json load_json(const std::string& path);
void save_json(const nlohmann::json& j, const std::string& path);

/// One configuration per line, comma separated, entries exactly "1" or "-1".
/// An optional first line "# d=<d> seed=<seed>" is written and checked.
SampleSet read_samples(const std::string& path);
void write_samples(const SampleSet& samples, const std::string& path,
                   std::optional<std::uint64_t> seed = std::nullopt);

/// Columns k, tau_k, mass_removed, cov_gap, wall_ms (cov_gap empty in round 0).
void write_trace(const RefinementTrace& trace, const std::string& path);

/// Mean row followed by the covariance rows.
void write_moments(const VectorXd& mean, const MatrixXd& cov, const std::string& path);

}  // namespace robising
