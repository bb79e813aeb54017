#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mpo/algorithms.hpp"

namespace mpo {

struct EnvConfig {
  enum class Name { ShortCorridor, RandomMdp };
  Name name = Name::ShortCorridor;
  double gamma = 1.0;
  long h_max = 1000;
  // RandomMdp only
  int num_states = 2;
  int num_actions = 2;
  std::uint64_t mdp_seed = 1;
};

struct ExperimentConfig {
  EnvConfig env;
  AlgoConfig algo;
  std::string algo_label = "algo";
  std::vector<AlgoConfig> extra_algos;           // compare configs
  std::vector<std::string> extra_algo_labels;
  std::vector<long> seeds;
  std::string output_dir = "out";
  long log_every = 1;
  bool oracle_logging = false;

  void validate() const;  // throws ValidationError listing every violation
};

// Strict JSON schema: top-level keys env, algo (or algos for comparisons),
// seeds, output, oracle_logging. Unknown keys anywhere are hard errors.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string serialize_experiment_config(const ExperimentConfig& config);

std::pair<Mdp, FeatureMap> build_env(const EnvConfig& env);

// CSV schema (bit-exact): header
// iteration,trajectories,est_return,exact_J,bregman_grad_norm,theta_norm,truncated
// with floating values printed to 17 significant digits and oracle columns
// empty when oracle logging is off.
std::string run_record_csv(const RunRecord& record);
std::string aggregate_csv(const std::vector<RunRecord>& records);

struct ExperimentResult {
  std::vector<RunRecord> records;          // one per seed
  std::vector<std::string> csv_paths;
  std::string aggregate_path;
  std::vector<double> final_exact_j;       // oracle value of each final theta
};

// One run per seed, one CSV per seed plus an aggregate CSV. Deterministic:
// identical config bytes and seeds give identical output bytes.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SweepRow {
  double p = 0.0;
  double mean_final_exact_j = 0.0;
  double std_final_exact_j = 0.0;
  bool best = false;
};

// The default grid {1.1, ..., 1.9, 2, 3, 4, 5}.
std::vector<double> default_p_grid();

// Runs the configured algorithm once per p over all seeds and marks the p
// with the best mean final value.
std::vector<SweepRow> sweep_p(const ExperimentConfig& config, const std::vector<double>& p_values);

// Learning-rate grid preset {0.01, 0.02, 0.04, 0.08, 0.1}.
std::vector<double> learning_rate_grid();

struct CompareColumn {
  std::string label;
  std::vector<long> trajectories;       // cumulative budget per logged row
  std::vector<double> mean_est_return;  // over seeds
  std::vector<double> mean_exact_j;     // empty when oracle logging is off
  double final_mean_exact_j = 0.0;
};

// Aligns algorithms on cumulative trajectories so different batch sizes are
// compared at equal sample budgets; emits one comparison CSV.
std::vector<CompareColumn> compare(const ExperimentConfig& config);
std::string compare_csv(const std::vector<CompareColumn>& columns);

std::string format_double(double v);  // %.17g, lossless round-trip

}  // namespace mpo
