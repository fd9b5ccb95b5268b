#ifndef LSM_CLI_HPP_
#define LSM_CLI_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsm/estimator.hpp"
#include "lsm/metrics.hpp"
#include "lsm/model.hpp"
#include "lsm/types.hpp"

namespace lsm::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitBudget = 3;

struct MetricsOptions {
  bool nu = true;
  bool xi_single_mode = true;
  bool xi_exact = false;
  bool xi_switched = true;
  int xi_samples = 200;
  bool xi_comparable_only = false;
  bool gamma = true;
  int gamma_m = 0;  // 0: use nu
  bool d_hat = true;
  bool estimate_D = true;
  int d_samples = 30;
  bool lambda = true;
  int descent_restarts = 20;
  std::vector<int> r_grid;  // empty: full 0..N
  long long budget = kDefaultSubsetBudget;
};

struct AnalysisOptions {
  bool comparability = true;
  bool lemma5 = true;
  bool proposition1 = true;
  bool lemma7 = true;
  bool theorem1 = true;
  bool theorem2 = true;
  bool corollary1 = true;
  double recovery_tol = 1e-6;
};

struct ExperimentOptions {
  int trials = 0;
  std::string axis;  // one of N, noise_std, outlier_count, balance
  std::vector<double> values;
  bool bounds = false;
};

// Parsed, schema-validated scenario.  Unknown JSON keys are rejected.
struct ScenarioConfig {
  int n = 1;
  int s = 1;
  std::optional<Matrix> A_true;  // nullopt: drawn at random per seed
  FeatureMapSpec feature_map = FeatureMapSpec::identity(1);
  SwitchingSpec switching;
  int N = 16;
  double input_std = 1.0;
  std::uint64_t seed = 0;
  NoiseSpec noise;
  EstimatorConfig estimator;
  bool estimator_trace = false;
  MetricsOptions metrics;
  AnalysisOptions analysis;
  ExperimentOptions experiment;
  std::string out_dir = "out";

  std::string canonical_json;  // normalized config text (hash input)
  std::string config_hash;
};

ScenarioConfig parse_config_text(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

// Subcommand bodies.  Each returns a process exit code and writes its
// outputs under `out_dir`.
int cmd_simulate(const ScenarioConfig& cfg, const std::string& out_dir);
int cmd_estimate(const ScenarioConfig& cfg, const std::string& dataset_csv,
                 const std::string& out_dir, int threads);
int cmd_metrics(const ScenarioConfig& cfg, const std::string& dataset_csv,
                const std::string& out_dir, int threads);
int cmd_bounds(const ScenarioConfig& cfg, const std::string& dataset_csv,
               const std::string& estimate_json, const std::string& metrics_json,
               const std::string& out_dir);
int cmd_experiment(const ScenarioConfig& cfg, const std::string& out_dir,
                   int threads);

// Full argv entry point (CLI parsing + error-to-exit-code mapping).
int run(int argc, const char* const* argv);

}  // namespace lsm::cli

#endif  // LSM_CLI_HPP_
