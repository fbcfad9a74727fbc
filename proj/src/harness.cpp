#include "robising/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "robising/io.hpp"
#include "robising/verify.hpp"

namespace robising {

namespace {

using nlohmann::json;

std::string source_name(MomentSource s) {
  switch (s) {
    case MomentSource::Exact: return "exact";
    case MomentSource::Sampled: return "sampled";
    case MomentSource::Auto: return "auto";
  }
  return "auto";
}

MomentSource source_from_name(const std::string& s) {
  if (s == "exact") return MomentSource::Exact;
  if (s == "sampled") return MomentSource::Sampled;
  if (s == "auto") return MomentSource::Auto;
  throw ParameterError("unknown moment source '" + s + "'");
}

// Visits every tunable learner constant with its JSON key.
template <typename Cfg, typename F>
void for_each_constant(Cfg& c, F&& f) {
  f("eps0", c.eps0);
  f("C0", c.C0);
  f("Cref", c.Cref);
  f("Ctau", c.Ctau);
  f("Cn", c.Cn);
  f("rounds", c.rounds);
  f("covariance_budget", c.covarianceBudget);
  f("covariance_source", c.covarianceSource);
  f("mixing_constant", c.mixingConstant);
  f("mle_accuracy_factor", c.mleAccuracyFactor);
  f("zeta", c.zeta);
  f("sigma_core_fraction", c.sigmaCoreFraction);
  f("sigma_inflation", c.sigmaInflation);
  f("mle_smoothness", c.mle.smoothness);
  f("mle_strong_convexity", c.mle.strongConvexity);
  f("mle_gradient_source", c.mle.gradientSource);
  f("mle_gradient_sample_constant", c.mle.gradientSampleConstant);
  f("mle_sample_budget", c.mle.sampleBudget);
  f("mle_min_delta", c.mle.minDelta);
  f("mle_max_iters", c.mle.maxIters);
  f("bounded_stop_factor", c.boundedFilter.stopFactor);
  f("bounded_rounds_per_dim", c.boundedFilter.roundsPerDim);
  f("bounded_mass_cap_factor", c.boundedFilter.massCapFactor);
  f("near_stop_constant", c.nearIdentityFilter.stopConstant);
  f("near_tail_multiplier", c.nearIdentityFilter.tailMultiplier);
  f("near_tail_scale", c.nearIdentityFilter.tailScale);
  f("near_min_threshold", c.nearIdentityFilter.minThreshold);
  f("near_rounds_per_dim", c.nearIdentityFilter.roundsPerDim);
  f("near_mass_cap_factor", c.nearIdentityFilter.massCapFactor);
}

std::string mode_name(LearnerMode m) { return m == LearnerMode::ZeroField ? "zero-field" : "external"; }

LearnerMode mode_from_name(const std::string& s) {
  if (s == "zero-field") return LearnerMode::ZeroField;
  if (s == "external") return LearnerMode::External;
  throw ParameterError("unknown learner mode '" + s + "'");
}

// Output files must not alias inputs.
void check_distinct(const std::string& in, const std::string& out) {
  std::error_code ec;
  if (std::filesystem::exists(out) && std::filesystem::equivalent(in, out, ec)) {
    throw ParameterError("output '" + out + "' would overwrite input '" + in + "'");
  }
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw ParameterError("repetitions must be at least 1");
  if (!(eps >= 0.0 && eps < 0.5)) throw ParameterError("eps must lie in [0, 0.5)");
  if (nSamples < 2) throw ParameterError("n_samples must be at least 2");
  if (modelFile && !std::filesystem::exists(*modelFile)) throw ParameterError("model file '" + *modelFile + "' not found");
  if (!modelFile && recipe.d < 2) throw ParameterError("generator d must be at least 2");
  attack_from_name(attack);
}

json constants_to_json(const LearnerConfig& cfg) {
  json out = json::object();
  for_each_constant(cfg, [&](const char* key, const auto& value) {
    using T = std::decay_t<decltype(value)>;
    if constexpr (std::is_same_v<T, MomentSource>) {
      out[key] = source_name(value);
    } else {
      out[key] = value;
    }
  });
  return out;
}

void apply_constants(const json& j, LearnerConfig& cfg) {
  if (!j.is_object()) throw ParameterError("constants must be a JSON object");
  std::size_t used = 0;
  for_each_constant(cfg, [&](const char* key, auto& value) {
    if (!j.contains(key)) return;
    ++used;
    using T = std::decay_t<decltype(value)>;
    try {
      if constexpr (std::is_same_v<T, MomentSource>) {
        value = source_from_name(j.at(key).get<std::string>());
      } else {
        value = j.at(key).get<T>();
      }
    } catch (const json::exception&) {
      throw ParameterError(std::string("constant '") + key + "' has the wrong type");
    }
  });
  if (used != j.size()) {
    for (const auto& [key, _] : j.items()) {
      bool known = false;
      for_each_constant(cfg, [&](const char* k, auto&) { known = known || key == k; });
      if (!known) throw ParameterError("unknown constant '" + key + "'");
    }
  }
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    const auto& model = j.at("model");
    if (model.contains("file")) {
      cfg.modelFile = model.at("file").get<std::string>();
    }
    if (model.contains("generator")) {
      const auto& g = model.at("generator");
      cfg.recipe.d = g.value("d", cfg.recipe.d);
      cfg.recipe.eta = g.value("eta", cfg.recipe.eta);
      cfg.recipe.M = g.value("M", cfg.recipe.M);
      cfg.recipe.alpha = g.value("alpha", cfg.recipe.alpha);
      cfg.recipe.seed = g.value("seed", cfg.recipe.seed);
    } else if (!cfg.modelFile) {
      throw ParameterError("model needs a file or a generator");
    }
    if (model.contains("eta")) cfg.recipe.eta = model.at("eta").get<double>();
    if (model.contains("M")) cfg.recipe.M = model.at("M").get<double>();
    if (model.contains("alpha")) cfg.recipe.alpha = model.at("alpha").get<double>();
    cfg.nSamples = j.value("n_samples", cfg.nSamples);
    cfg.sampleGamma = j.value("sample_gamma", cfg.sampleGamma);
    cfg.eps = j.value("eps", cfg.eps);
    cfg.attack = j.value("attack", cfg.attack);
    cfg.mode = mode_from_name(j.value("mode", mode_name(cfg.mode)));
    cfg.c0 = j.value("c0", cfg.c0);
    cfg.c1 = j.value("c1", cfg.c1);
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("constants")) apply_constants(j.at("constants"), cfg.learner);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
  json model = json::object();
  if (cfg.modelFile) model["file"] = *cfg.modelFile;
  model["generator"] = {{"d", cfg.recipe.d},
                        {"eta", cfg.recipe.eta},
                        {"M", cfg.recipe.M},
                        {"alpha", cfg.recipe.alpha},
                        {"seed", cfg.recipe.seed}};
  return {{"model", model},
          {"n_samples", cfg.nSamples},
          {"sample_gamma", cfg.sampleGamma},
          {"eps", cfg.eps},
          {"attack", cfg.attack},
          {"mode", mode_name(cfg.mode)},
          {"c0", cfg.c0},
          {"c1", cfg.c1},
          {"repetitions", cfg.repetitions},
          {"seed", cfg.seed},
          {"constants", constants_to_json(cfg.learner)}};
}

IsingParameters experiment_model(const ExperimentConfig& cfg) {
  if (cfg.modelFile) return load_model(*cfg.modelFile);
  Rng rng(cfg.recipe.seed);
  return random_bounded_model(cfg.recipe.d, cfg.recipe.M, cfg.recipe.alpha, rng);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const IsingParameters model = experiment_model(cfg);
  std::vector<ResultRow> rows(static_cast<std::size_t>(cfg.repetitions));
  parallel_for(cfg.repetitions, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t r = lo; r < hi; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const std::uint64_t repSeed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
      ChainConfig chain;
      chain.gamma = cfg.sampleGamma;
      chain.mixingConstant = cfg.learner.mixingConstant;
      chain.masterSeed = derive_seed(repSeed, 1);
      const SampleSet clean = sample_batch(model, cfg.nSamples, chain);

      AttackSpec attack;
      attack.kind = attack_from_name(cfg.attack);
      attack.eps = cfg.eps;
      attack.seed = derive_seed(repSeed, 2);
      const SampleSet corrupted = corrupt(clean, attack).samples;

      LearnerConfig learner = cfg.learner;
      learner.seed = derive_seed(repSeed, 3);
      learner.truth = model;
      std::optional<IsingParameters> estimate;
      if (cfg.mode == LearnerMode::ZeroField) {
        estimate = robust_learn_ising_zero_field(corrupted, cfg.eps, cfg.recipe.eta, learner).theta;
      } else {
        const DobrushinSpec omega{cfg.recipe.eta, cfg.recipe.M, cfg.recipe.alpha};
        estimate = robust_learn_ising_external(corrupted, cfg.eps, omega, cfg.c0, cfg.c1, learner).theta;
      }
      ResultRow& row = rows[static_cast<std::size_t>(r)];
      row.rep = static_cast<int>(r);
      row.eps = cfg.eps;
      row.frobeniusError = frobenius_distance(*estimate, model);
      if (model.dim() <= kDefaultEnumerationCap) row.tvError = exact_tv(*estimate, model);
      row.wallMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  });
  return rows;
}

void write_results(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write '" + path + "'");
  out << "rep,eps,frobenius_error,tv_error_if_enumerable,wall_ms\n";
  for (const auto& r : rows) {
    out << r.rep << ',' << format_double(r.eps) << ',' << format_double(r.frobeniusError) << ','
        << (r.tvError ? format_double(*r.tvError) : std::string()) << ',' << format_double(r.wallMs) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

int run_sample(const std::string& modelPath, std::int64_t n, double gamma, std::uint64_t seed,
               double mixing, const std::string& outPath) {
  check_distinct(modelPath, outPath);
  const IsingParameters model = load_model(modelPath);
  ChainConfig chain;
  chain.gamma = gamma;
  chain.mixingConstant = mixing;
  chain.masterSeed = seed;
  write_samples(sample_batch(model, n, chain), outPath, seed);
  return 0;
}

int run_oracle(const std::string& modelPath, const std::string& stats, const std::string& otherPath) {
  const IsingParameters model = load_model(modelPath);
  const ExactSummary summary = exact_summary(model);
  json out = json::object();
  std::stringstream list(stats);
  std::string item;
  while (std::getline(list, item, ',')) {
    if (item == "partition") {
      out["logZ"] = summary.logZ;
    } else if (item == "mean") {
      out["mean"] = vector_json(summary.mean);
    } else if (item == "cov") {
      out["cov"] = matrix_json(summary.pairMoments - summary.mean * summary.mean.transpose());
    } else if (item == "tv") {
      if (otherPath.empty()) throw ParameterError("--stats tv needs --other");
      out["tv"] = exact_tv(model, load_model(otherPath));
    } else {
      throw ParameterError("unknown statistic '" + item + "'");
    }
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_corrupt(const std::string& inPath, double eps, const std::string& name, std::uint64_t seed,
                const std::string& outPath) {
  check_distinct(inPath, outPath);
  AttackSpec attack;
  attack.kind = attack_from_name(name);
  attack.eps = eps;
  attack.seed = seed;
  write_samples(corrupt(read_samples(inPath), attack).samples, outPath);
  return 0;
}

struct LearnArgs {
  std::string in;
  double eps = 0.0;
  std::string mode = "zero-field";
  double eta = 0.5;
  double M = 0.5;
  double alpha = 0.0;
  double c0 = 0.1;
  double c1 = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string trace;
  std::string constants;
};

int run_learn(const LearnArgs& a) {
  check_distinct(a.in, a.out);
  LearnerConfig cfg;
  if (!a.constants.empty()) apply_constants(load_json(a.constants), cfg);
  cfg.seed = a.seed;
  const SampleSet samples = read_samples(a.in);
  std::optional<IsingParameters> theta;
  RefinementTrace trace;
  if (mode_from_name(a.mode) == LearnerMode::ZeroField) {
    auto fit = robust_learn_ising_zero_field(samples, a.eps, a.eta, cfg);
    theta = std::move(fit.theta);
    trace = std::move(fit.trace);
  } else {
    auto fit = robust_learn_ising_external(samples, a.eps, DobrushinSpec{a.eta, a.M, a.alpha}, a.c0, a.c1, cfg);
    theta = std::move(fit.theta);
    trace = std::move(fit.trace);
  }
  if (a.out.empty()) {
    std::cout << model_to_json(*theta).dump(2) << '\n';
  } else {
    save_model(*theta, a.out);
  }
  if (!a.trace.empty()) write_trace(trace, a.trace);
  return 0;
}

int run_verify(const std::string& modelPath, const std::string& check, int trials, std::int64_t n,
               std::uint64_t seed, const std::string& outPath) {
  const IsingParameters model = load_model(modelPath);
  json summary = {{"check", check}, {"trials", trials}, {"n", n}, {"seed", seed}};
  if (check == "tails") {
    Rng rng(derive_seed(seed, 7));
    const MatrixXd A = random_test_matrix(model.dim(), rng);
    const VectorXd v = model.dim() <= kDefaultEnumerationCap ? exact_summary(model).mean : VectorXd::Zero(model.dim());
    std::vector<double> thresholds;
    for (int i = 1; i <= 80; ++i) thresholds.push_back(0.1 * i);
    const TailReport r = mc_tail_check(model, A, VectorXd::Zero(model.dim()), v, n, thresholds, seed);
    summary["fitted_rate"] = r.fittedRate;
    summary["raw_rate"] = r.rawRate;
    summary["fit_points"] = r.fitPoints;
    summary["truncated"] = r.truncated;
    summary["thresholds"] = r.thresholds;
    summary["survival"] = r.survival;
  } else {
    std::vector<VarianceReport> reports;
    if (check == "anticoncentration") {
      reports = mc_variance_lower_bound(model, trials, n, model.max_abs_field() > 0.0, seed);
    } else if (check == "upper") {
      reports = mc_variance_upper_bound(model, trials, n, seed);
    } else if (check == "linear") {
      reports = mc_linear_anticoncentration(model, trials, n, seed);
    } else {
      throw ParameterError("unknown check '" + check + "'");
    }
    std::vector<double> ratios;
    for (const auto& r : reports) ratios.push_back(r.ratio);
    summary["min_ratio"] = *std::min_element(ratios.begin(), ratios.end());
    summary["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
    summary["median_ratio"] = median(ratios);
    if (!outPath.empty()) {
      check_distinct(modelPath, outPath);
      std::ofstream out(outPath);
      if (!out) throw ParameterError("cannot write '" + outPath + "'");
      out << "trial,test_matrix_norm,linear_norm,empirical_variance,ratio,n_samples,ci95_half_width\n";
      for (std::size_t t = 0; t < reports.size(); ++t) {
        const auto& r = reports[t];
        out << t << ',' << format_double(r.testMatrixNorm) << ',' << format_double(r.linearNorm) << ','
            << format_double(r.empiricalVariance) << ',' << format_double(r.ratio) << ',' << r.nSamples << ','
            << format_double(r.ci95HalfWidth) << '\n';
      }
    }
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_experiment_cli(const std::string& configPath, const std::string& outDir) {
  const ExperimentConfig cfg = experiment_from_json(load_json(configPath));
  std::filesystem::create_directories(outDir);
  const auto rows = run_experiment(cfg);
  write_results(rows, (std::filesystem::path(outDir) / "results.csv").string());
  json manifest = experiment_to_json(cfg);
  manifest["threads"] = worker_count();
  save_json(manifest, (std::filesystem::path(outDir) / "manifest.json").string());
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Robust Ising model learning toolkit"};
  app.require_subcommand(1);

  std::string model, other, in, out, stats = "partition,mean,cov", attack, check = "anticoncentration";
  std::int64_t n = 10000;
  double gamma = 1e-3, mixing = 20.0, eps = 0.0;
  std::uint64_t seed = 0;
  int trials = 100;
  LearnArgs learn;

  auto* sampleCmd = app.add_subcommand("sample", "Draw Glauber samples from a model");
  sampleCmd->add_option("--model", model, "Model JSON")->required();
  sampleCmd->add_option("--n", n, "Number of samples")->required();
  sampleCmd->add_option("--gamma", gamma, "Per-chain TV accuracy");
  sampleCmd->add_option("--mixing", mixing, "Mixing constant C");
  sampleCmd->add_option("--seed", seed, "Master seed");
  sampleCmd->add_option("--out", out, "Output CSV")->required();

  auto* oracleCmd = app.add_subcommand("oracle", "Exact quantities by enumeration");
  oracleCmd->add_option("--model", model, "Model JSON")->required();
  oracleCmd->add_option("--stats", stats, "Comma list of partition, mean, cov, tv");
  oracleCmd->add_option("--other", other, "Second model for tv");

  auto* corruptCmd = app.add_subcommand("corrupt", "Replace a fraction of samples adversarially");
  corruptCmd->add_option("--in", in, "Input CSV")->required();
  corruptCmd->add_option("--eps", eps, "Corrupted fraction")->required();
  corruptCmd->add_option("--attack", attack, "Attack name")->required();
  corruptCmd->add_option("--seed", seed, "Seed");
  corruptCmd->add_option("--out", out, "Output CSV")->required();

  auto* learnCmd = app.add_subcommand("learn", "Robustly learn a model from samples");
  learnCmd->add_option("--in", learn.in, "Input CSV")->required();
  learnCmd->add_option("--eps", learn.eps, "Corrupted fraction")->required();
  learnCmd->add_option("--mode", learn.mode, "zero-field or external");
  learnCmd->add_option("--eta", learn.eta, "Dobrushin slack");
  learnCmd->add_option("--M", learn.M, "Row l1 bound (external mode)");
  learnCmd->add_option("--alpha", learn.alpha, "Field bound (external mode)");
  learnCmd->add_option("--c0", learn.c0, "Feasibility constant c0 (external mode)");
  learnCmd->add_option("--c1", learn.c1, "Feasibility constant c1 (external mode)");
  learnCmd->add_option("--seed", learn.seed, "Seed");
  learnCmd->add_option("--constants", learn.constants, "JSON file of learner constants");
  learnCmd->add_option("--out", learn.out, "Output model JSON");
  learnCmd->add_option("--trace", learn.trace, "Output trace CSV");

  auto* verifyCmd = app.add_subcommand("verify", "Monte Carlo checks of variance and tail bounds");
  verifyCmd->add_option("--model", model, "Model JSON")->required();
  verifyCmd->add_option("--check", check, "anticoncentration, upper, linear or tails");
  verifyCmd->add_option("--trials", trials, "Random test functions");
  verifyCmd->add_option("--n", n, "Samples");
  verifyCmd->add_option("--seed", seed, "Seed");
  verifyCmd->add_option("--out", out, "Per-trial CSV");

  auto* experimentCmd = app.add_subcommand("experiment", "Run a generate, corrupt, learn, score pipeline");
  experimentCmd->add_option("--config", in, "Experiment JSON (a manifest also works)")->required();
  experimentCmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sampleCmd) return run_sample(model, n, gamma, seed, mixing, out);
    if (*oracleCmd) return run_oracle(model, stats, other);
    if (*corruptCmd) return run_corrupt(in, eps, attack, seed, out);
    if (*learnCmd) return run_learn(learn);
    if (*verifyCmd) return run_verify(model, check, trials, n, seed, out);
    if (*experimentCmd) return run_experiment_cli(in, out);
  } catch (const ConstraintRefusal& e) {
    std::cerr << "refused: " << e.what() << "\nlhs = " << format_double(e.lhs())
              << "\nrhs = " << format_double(e.rhs()) << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << " (residual " << format_double(e.residual()) << ")\n";
    return 1;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace robising
