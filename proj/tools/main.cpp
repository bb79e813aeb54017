#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mpo/errors.hpp"
#include "mpo/harness.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitOracleGuard = 2;
constexpr int kExitIo = 3;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw mpo::IoError("cannot read config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

mpo::ExperimentConfig load_config(const std::string& path, long seed_offset,
                                  const std::string& out_override) {
  mpo::ExperimentConfig cfg = mpo::parse_experiment_config(read_file(path));
  if (seed_offset != 0) {
    for (long& s : cfg.seeds) s += seed_offset;
  }
  if (!out_override.empty()) cfg.output_dir = out_override;
  return cfg;
}

void print_run_summary(const mpo::ExperimentConfig& cfg, const mpo::ExperimentResult& result) {
  std::printf("env=%s algo=%s alpha=%s seeds=%zu\n",
              cfg.env.name == mpo::EnvConfig::Name::ShortCorridor ? "short_corridor"
                                                                  : "random_mdp",
              cfg.algo_label.c_str(), mpo::format_double(cfg.algo.alpha).c_str(),
              cfg.seeds.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    std::printf("seed %ld: final_exact_J=%s trajectories=%ld output=%s csv=%s\n", cfg.seeds[i],
                mpo::format_double(result.final_exact_j[i]).c_str(),
                result.records[i].total_trajectories, result.records[i].output_rule.c_str(),
                result.csv_paths[i].c_str());
    mean += result.final_exact_j[i];
  }
  std::printf("mean final_exact_J=%s aggregate=%s\n",
              mpo::format_double(mean / static_cast<double>(cfg.seeds.size())).c_str(),
              result.aggregate_path.c_str());
}

int cmd_run(const std::string& config_path, long seed_offset, const std::string& out_override,
            bool grid) {
  mpo::ExperimentConfig cfg = load_config(config_path, seed_offset, out_override);
  if (!grid) {
    const mpo::ExperimentResult result = mpo::run_experiment(cfg);
    print_run_summary(cfg, result);
    return 0;
  }
  // Learning-rate grid search: run every preset alpha, report the best by
  // mean final exact value.
  double best_alpha = 0.0;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (double alpha : mpo::learning_rate_grid()) {
    mpo::ExperimentConfig trial = cfg;
    trial.algo.alpha = alpha;
    trial.algo_label = cfg.algo_label + "_a" + mpo::format_double(alpha);
    const mpo::ExperimentResult result = mpo::run_experiment(trial);
    double mean = 0.0;
    for (double j : result.final_exact_j) mean += j;
    mean /= static_cast<double>(result.final_exact_j.size());
    std::printf("alpha=%s mean final_exact_J=%s\n", mpo::format_double(alpha).c_str(),
                mpo::format_double(mean).c_str());
    if (mean > best_mean) {
      best_mean = mean;
      best_alpha = alpha;
    }
  }
  std::printf("best alpha=%s mean final_exact_J=%s\n", mpo::format_double(best_alpha).c_str(),
              mpo::format_double(best_mean).c_str());
  return 0;
}

int cmd_sweep_p(const std::string& config_path, long seed_offset,
                const std::string& out_override, std::vector<double> p_grid) {
  mpo::ExperimentConfig cfg = load_config(config_path, seed_offset, out_override);
  if (p_grid.empty()) p_grid = mpo::default_p_grid();
  const std::vector<mpo::SweepRow> rows = mpo::sweep_p(cfg, p_grid);
  std::printf("%8s %24s %24s %s\n", "p", "mean_final_exact_J", "std_final_exact_J", "best");
  for (const mpo::SweepRow& row : rows) {
    std::printf("%8s %24s %24s %s\n", mpo::format_double(row.p).c_str(),
                mpo::format_double(row.mean_final_exact_j).c_str(),
                mpo::format_double(row.std_final_exact_j).c_str(), row.best ? "*" : "");
  }
  return 0;
}

int cmd_compare(const std::string& config_path, long seed_offset,
                const std::string& out_override) {
  mpo::ExperimentConfig cfg = load_config(config_path, seed_offset, out_override);
  const std::vector<mpo::CompareColumn> columns = mpo::compare(cfg);
  for (const mpo::CompareColumn& col : columns) {
    std::printf("%s: final mean exact_J=%s (budget %ld trajectories)\n", col.label.c_str(),
                mpo::format_double(col.final_mean_exact_j).c_str(),
                col.trajectories.empty() ? 0L : col.trajectories.back());
  }
  return 0;
}

int cmd_oracle(const std::string& config_path, long seed_offset,
               const std::string& out_override) {
  mpo::ExperimentConfig cfg = load_config(config_path, seed_offset, out_override);
  auto [mdp, features] = mpo::build_env(cfg.env);

  const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(features.dim());
  const mpo::SoftmaxLinearPolicy policy(features, theta0);
  std::printf("exact_return(theta=0)=%s\n",
              mpo::format_double(mpo::exact_return(mdp, policy)).c_str());
  const Eigen::VectorXd grad = mpo::exact_gradient(mdp, policy, mdp.h_max);
  std::printf("exact_gradient(theta=0)=[");
  for (int i = 0; i < grad.size(); ++i) {
    std::printf("%s%s", i ? "," : "", mpo::format_double(grad[i]).c_str());
  }
  std::printf("]\n");

  if (cfg.env.name == mpo::EnvConfig::Name::ShortCorridor) {
    std::vector<double> grid;
    for (double p = 0.005; p < 0.9999; p += 0.005) grid.push_back(p);
    const auto curve = mpo::corridor_value_curve(grid);
    double best_p = 0.0;
    double best_v = -std::numeric_limits<double>::infinity();
    std::string csv = "p,exact_value\n";
    for (const auto& [p, v] : curve) {
      csv += mpo::format_double(p) + "," + mpo::format_double(v) + "\n";
      if (v > best_v) {
        best_v = v;
        best_p = p;
      }
    }
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw mpo::IoError("cannot create output dir " + cfg.output_dir);
    const std::string path = cfg.output_dir + "/corridor_value_curve.csv";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw mpo::IoError("cannot write " + path);
    f << csv;
    std::printf("value curve: argmax p=%s value=%s csv=%s\n", mpo::format_double(best_p).c_str(),
                mpo::format_double(best_v).c_str(), path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mirror-descent policy optimization on exactly solvable tabular MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  long seed_offset = 0;
  bool grid = false;
  std::vector<double> p_grid;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "JSON experiment config")->required();
    cmd->add_option("--seed-offset", seed_offset, "added to every configured seed");
    cmd->add_option("--out", out_override, "override output directory");
  };

  CLI::App* run = app.add_subcommand("run", "run the configured algorithm over all seeds");
  add_common(run);
  run->add_flag("--grid", grid, "grid-search the learning-rate preset and report the best");

  CLI::App* sweep = app.add_subcommand("sweep-p", "sweep the mirror-map exponent p");
  add_common(sweep);
  sweep->add_option("--p-grid", p_grid, "p values (default: 1.1..1.9, 2, 3, 4, 5)");

  CLI::App* cmp = app.add_subcommand("compare",
                                     "run several algorithms on shared seeds, aligned by budget");
  add_common(cmp);

  CLI::App* oracle = app.add_subcommand("oracle", "dump exact values for the configured env");
  add_common(oracle);

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, seed_offset, out_override, grid);
    if (sweep->parsed()) return cmd_sweep_p(config_path, seed_offset, out_override, p_grid);
    if (cmp->parsed()) return cmd_compare(config_path, seed_offset, out_override);
    if (oracle->parsed()) return cmd_oracle(config_path, seed_offset, out_override);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const mpo::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const mpo::OracleGuardError& e) {
    std::fprintf(stderr, "oracle guard: %s\n", e.what());
    return kExitOracleGuard;
  } catch (const mpo::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return 0;
}
