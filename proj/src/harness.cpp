#include "mpo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include "json.hpp"

#include "mpo/errors.hpp"

namespace mpo {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where, std::string& violations) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      if (!violations.empty()) violations += "; ";
      violations += "unknown key '" + it.key() + "' in " + where;
    }
  }
}

EnvConfig parse_env(const json& j, std::string& violations) {
  EnvConfig env;
  reject_unknown_keys(j, {"name", "gamma", "h_max", "num_states", "num_actions", "mdp_seed"},
                      "env", violations);
  const std::string name = j.value("name", "");
  if (name == "short_corridor") {
    env.name = EnvConfig::Name::ShortCorridor;
  } else if (name == "random_mdp") {
    env.name = EnvConfig::Name::RandomMdp;
  } else {
    violations += violations.empty() ? "" : "; ";
    violations += "env.name must be 'short_corridor' or 'random_mdp'";
  }
  env.gamma = j.value("gamma", env.name == EnvConfig::Name::RandomMdp ? 0.95 : 1.0);
  env.h_max = j.value("h_max", env.name == EnvConfig::Name::RandomMdp ? 20L : 1000L);
  env.num_states = j.value("num_states", 2);
  env.num_actions = j.value("num_actions", 2);
  env.mdp_seed = j.value("mdp_seed", 1ULL);
  return env;
}

MirrorMap parse_mirror(const json& j, std::string& violations) {
  reject_unknown_keys(j, {"kind", "p", "zeta"}, "algo.mirror", violations);
  const std::string kind = j.value("kind", "euclidean");
  if (kind == "euclidean") return MirrorMap::euclidean();
  if (kind != "pnorm") {
    violations += violations.empty() ? "" : "; ";
    violations += "mirror.kind must be 'euclidean' or 'pnorm'";
    return MirrorMap::euclidean();
  }
  std::optional<double> zeta;
  if (j.contains("zeta")) zeta = j["zeta"].get<double>();
  MirrorMap map = MirrorMap::pnorm(j.value("p", 2.0), zeta);
  if (map.zeta_defaulted) {
    std::cerr << "warning: p=" << map.p
              << " > 2 without a configured zeta; defaulting zeta=1\n";
  }
  return map;
}

AlgoConfig parse_algo(const json& j, std::string& label, std::string& violations) {
  AlgoConfig algo;
  reject_unknown_keys(j,
                      {"name", "mirror", "alpha", "episodes", "vrmpo", "theta0_range",
                       "smoothness_l", "mirror_first_step", "label"},
                      "algo", violations);
  const std::string name = j.value("name", "");
  if (name == "vpg") {
    algo.algorithm = Algorithm::Vpg;
  } else if (name == "mpo") {
    algo.algorithm = Algorithm::Mpo;
  } else if (name == "vrmpo") {
    algo.algorithm = Algorithm::Vrmpo;
  } else if (name == "svrpg_is") {
    algo.algorithm = Algorithm::SvrpgIs;
  } else {
    violations += violations.empty() ? "" : "; ";
    violations += "algo.name must be one of vpg, mpo, vrmpo, svrpg_is";
  }
  label = j.value("label", name);
  if (j.contains("mirror")) algo.mirror = parse_mirror(j["mirror"], violations);
  algo.alpha = j.value("alpha", 0.01);
  algo.episodes = j.value("episodes", 1000L);
  if (j.contains("vrmpo")) {
    const json& v = j["vrmpo"];
    reject_unknown_keys(v, {"n1", "n2", "m", "k"}, "algo.vrmpo", violations);
    algo.vrmpo.n1 = v.value("n1", 1L);
    algo.vrmpo.n2 = v.value("n2", 1L);
    algo.vrmpo.m = v.value("m", 2L);
    algo.vrmpo.k = v.value("k", 1L);
  }
  if (j.contains("theta0_range")) {
    const auto range = j["theta0_range"];
    if (!range.is_array() || range.size() != 2) {
      violations += violations.empty() ? "" : "; ";
      violations += "algo.theta0_range must be [lo, hi]";
    } else {
      algo.theta0_lo = range[0].get<double>();
      algo.theta0_hi = range[1].get<double>();
    }
  }
  if (j.contains("smoothness_l")) algo.smoothness_l = j["smoothness_l"].get<double>();
  algo.mirror_first_step = j.value("mirror_first_step", false);
  return algo;
}

json mirror_to_json(const MirrorMap& map) {
  json j;
  if (map.kind == MirrorMap::Kind::Euclidean) {
    j["kind"] = "euclidean";
  } else {
    j["kind"] = "pnorm";
    j["p"] = map.p;
    j["zeta"] = map.zeta;
  }
  return j;
}

json algo_to_json(const AlgoConfig& algo, const std::string& label) {
  json j;
  switch (algo.algorithm) {
    case Algorithm::Vpg: j["name"] = "vpg"; break;
    case Algorithm::Mpo: j["name"] = "mpo"; break;
    case Algorithm::Vrmpo: j["name"] = "vrmpo"; break;
    case Algorithm::SvrpgIs: j["name"] = "svrpg_is"; break;
  }
  j["label"] = label;
  j["mirror"] = mirror_to_json(algo.mirror);
  j["alpha"] = algo.alpha;
  j["episodes"] = algo.episodes;
  if (algo.algorithm == Algorithm::Vrmpo || algo.algorithm == Algorithm::SvrpgIs) {
    j["vrmpo"] = {{"n1", algo.vrmpo.n1}, {"n2", algo.vrmpo.n2}, {"m", algo.vrmpo.m},
                  {"k", algo.vrmpo.k}};
  }
  j["theta0_range"] = {algo.theta0_lo, algo.theta0_hi};
  if (algo.smoothness_l.has_value()) j["smoothness_l"] = *algo.smoothness_l;
  j["mirror_first_step"] = algo.mirror_first_step;
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  std::string msg;
  auto add = [&msg](const std::string& item) {
    if (!msg.empty()) msg += "; ";
    msg += item;
  };
  if (seeds.empty()) add("seeds must be nonempty");
  std::set<long> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) add("seeds must be distinct");
  if (log_every < 1) add("output.log_every must be >= 1");
  if (env.name == EnvConfig::Name::RandomMdp) {
    if (env.num_states < 1) add("env.num_states must be >= 1");
    if (env.num_actions < 1) add("env.num_actions must be >= 1");
  }
  if (!(env.gamma > 0.0 && env.gamma <= 1.0)) add("env.gamma must be in (0, 1]");
  if (env.h_max < 1) add("env.h_max must be >= 1");
  if (extra_algos.size() != extra_algo_labels.size()) {
    add("algo labels must align with algos");
  }
  if (!msg.empty()) throw ValidationError("ExperimentConfig: " + msg);
  AlgoConfig a = algo;
  a.gamma = env.gamma;
  a.validate();
  for (AlgoConfig extra : extra_algos) {
    extra.gamma = env.gamma;
    extra.validate();
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  std::string violations;
  reject_unknown_keys(j, {"env", "algo", "algos", "seeds", "output", "oracle_logging"},
                      "top level", violations);
  ExperimentConfig cfg;
  if (!j.contains("env")) {
    violations += violations.empty() ? "" : "; ";
    violations += "missing required key 'env'";
  } else {
    cfg.env = parse_env(j["env"], violations);
  }
  if (j.contains("algo") == j.contains("algos")) {
    violations += violations.empty() ? "" : "; ";
    violations += "exactly one of 'algo' or 'algos' is required";
  }
  if (j.contains("algo")) {
    cfg.algo = parse_algo(j["algo"], cfg.algo_label, violations);
  } else if (j.contains("algos")) {
    const json& arr = j["algos"];
    if (!arr.is_array() || arr.empty()) {
      violations += violations.empty() ? "" : "; ";
      violations += "'algos' must be a nonempty array";
    } else {
      std::string label;
      cfg.algo = parse_algo(arr[0], label, violations);
      cfg.algo_label = label;
      for (std::size_t i = 1; i < arr.size(); ++i) {
        cfg.extra_algos.push_back(parse_algo(arr[i], label, violations));
        cfg.extra_algo_labels.push_back(label);
      }
    }
  }
  if (j.contains("seeds")) {
    for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<long>());
  } else {
    violations += violations.empty() ? "" : "; ";
    violations += "missing required key 'seeds'";
  }
  if (j.contains("output")) {
    const json& out = j["output"];
    reject_unknown_keys(out, {"dir", "log_every"}, "output", violations);
    cfg.output_dir = out.value("dir", "out");
    cfg.log_every = out.value("log_every", 1L);
  }
  cfg.oracle_logging = j.value("oracle_logging", false);
  if (!violations.empty()) throw ValidationError("config: " + violations);
  cfg.algo.gamma = cfg.env.gamma;
  cfg.algo.log_every = cfg.log_every;
  cfg.algo.oracle_logging = cfg.oracle_logging;
  for (AlgoConfig& extra : cfg.extra_algos) {
    extra.gamma = cfg.env.gamma;
    extra.log_every = cfg.log_every;
    extra.oracle_logging = cfg.oracle_logging;
  }
  cfg.validate();
  return cfg;
}

std::string serialize_experiment_config(const ExperimentConfig& config) {
  json j;
  json env;
  env["name"] =
      config.env.name == EnvConfig::Name::ShortCorridor ? "short_corridor" : "random_mdp";
  env["gamma"] = config.env.gamma;
  env["h_max"] = config.env.h_max;
  if (config.env.name == EnvConfig::Name::RandomMdp) {
    env["num_states"] = config.env.num_states;
    env["num_actions"] = config.env.num_actions;
    env["mdp_seed"] = config.env.mdp_seed;
  }
  j["env"] = env;
  if (config.extra_algos.empty()) {
    j["algo"] = algo_to_json(config.algo, config.algo_label);
  } else {
    json arr = json::array();
    arr.push_back(algo_to_json(config.algo, config.algo_label));
    for (std::size_t i = 0; i < config.extra_algos.size(); ++i) {
      arr.push_back(algo_to_json(config.extra_algos[i], config.extra_algo_labels[i]));
    }
    j["algos"] = arr;
  }
  j["seeds"] = config.seeds;
  j["output"] = {{"dir", config.output_dir}, {"log_every", config.log_every}};
  j["oracle_logging"] = config.oracle_logging;
  return j.dump(2);
}

std::pair<Mdp, FeatureMap> build_env(const EnvConfig& env) {
  if (env.name == EnvConfig::Name::ShortCorridor) {
    Mdp mdp = make_short_corridor(env.gamma, env.h_max);
    return {mdp, FeatureMap::corridor_shared(mdp.num_states)};
  }
  Mdp mdp = make_random_mdp(env.num_states, env.num_actions, env.mdp_seed, env.gamma, env.h_max);
  return {mdp, FeatureMap::tabular(env.num_states, env.num_actions)};
}

namespace {

std::string csv_cell(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : std::string();
}

}  // namespace

std::string run_record_csv(const RunRecord& record) {
  std::string out = "iteration,trajectories,est_return,exact_J,bregman_grad_norm,theta_norm,truncated\n";
  for (const RunRow& row : record.rows) {
    out += std::to_string(row.iteration);
    out += ',';
    out += std::to_string(row.trajectories);
    out += ',';
    out += format_double(row.est_return);
    out += ',';
    out += csv_cell(row.exact_j);
    out += ',';
    out += csv_cell(row.bregman_norm);
    out += ',';
    out += format_double(row.theta_norm);
    out += ',';
    out += std::to_string(row.truncated);
    out += '\n';
  }
  return out;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(xs.size()));
  return out;
}

}  // namespace

std::string aggregate_csv(const std::vector<RunRecord>& records) {
  std::string out =
      "iteration,trajectories,mean_est_return,std_est_return,mean_exact_J,std_exact_J,"
      "mean_bregman_grad_norm,std_bregman_grad_norm,mean_theta_norm,std_theta_norm\n";
  if (records.empty()) return out;
  const std::size_t rows = records.front().rows.size();
  for (const RunRecord& r : records) {
    if (r.rows.size() != rows) {
      throw ValidationError("aggregate_csv: seed runs logged different row counts");
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> est, exact, breg, tnorm;
    bool have_oracle = true;
    for (const RunRecord& r : records) {
      est.push_back(r.rows[i].est_return);
      tnorm.push_back(r.rows[i].theta_norm);
      if (r.rows[i].exact_j.has_value()) {
        exact.push_back(*r.rows[i].exact_j);
        breg.push_back(r.rows[i].bregman_norm.value_or(0.0));
      } else {
        have_oracle = false;
      }
    }
    const MeanStd e = mean_std(est);
    const MeanStd t = mean_std(tnorm);
    out += std::to_string(records.front().rows[i].iteration);
    out += ',';
    out += std::to_string(records.front().rows[i].trajectories);
    out += ',';
    out += format_double(e.mean);
    out += ',';
    out += format_double(e.std);
    out += ',';
    if (have_oracle) {
      const MeanStd x = mean_std(exact);
      const MeanStd b = mean_std(breg);
      out += format_double(x.mean);
      out += ',';
      out += format_double(x.std);
      out += ',';
      out += format_double(b.mean);
      out += ',';
      out += format_double(b.std);
    } else {
      out += ",,,";
    }
    out += ',';
    out += format_double(t.mean);
    out += ',';
    out += format_double(t.std);
    out += '\n';
  }
  return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw IoError("write failed for " + path.string());
}

double final_exact_value(const Mdp& mdp, const FeatureMap& features,
                         const Eigen::VectorXd& theta) {
  try {
    return exact_return(mdp, SoftmaxLinearPolicy(features, theta));
  } catch (const DivergenceError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

std::vector<RunRecord> run_all_seeds(const Mdp& mdp, const FeatureMap& features,
                                     const AlgoConfig& algo, const std::vector<long>& seeds) {
  std::vector<RunRecord> records;
  records.reserve(seeds.size());
  for (long seed : seeds) {
    records.push_back(run_algorithm(mdp, features, algo, static_cast<std::uint64_t>(seed)));
  }
  return records;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  auto [mdp, features] = build_env(config.env);
  AlgoConfig algo = config.algo;
  algo.gamma = config.env.gamma;
  algo.log_every = config.log_every;
  algo.oracle_logging = config.oracle_logging;

  ExperimentResult result;
  result.records = run_all_seeds(mdp, features, algo, config.seeds);

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output dir " + config.output_dir + ": " + ec.message());

  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    const fs::path path = fs::path(config.output_dir) /
                          (config.algo_label + "_seed" + std::to_string(config.seeds[i]) + ".csv");
    write_file(path, run_record_csv(result.records[i]));
    result.csv_paths.push_back(path.string());
    result.final_exact_j.push_back(
        final_exact_value(mdp, features, result.records[i].final_theta));
  }
  const fs::path agg = fs::path(config.output_dir) / (config.algo_label + "_aggregate.csv");
  write_file(agg, aggregate_csv(result.records));
  result.aggregate_path = agg.string();
  return result;
}

std::vector<double> default_p_grid() {
  return {1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0, 3.0, 4.0, 5.0};
}

std::vector<double> learning_rate_grid() { return {0.01, 0.02, 0.04, 0.08, 0.1}; }

std::vector<SweepRow> sweep_p(const ExperimentConfig& config,
                              const std::vector<double>& p_values) {
  config.validate();
  for (double p : p_values) {
    if (!(p > 1.0)) throw ValidationError("sweep_p: every p must be > 1");
  }
  auto [mdp, features] = build_env(config.env);

  std::vector<SweepRow> rows;
  for (double p : p_values) {
    AlgoConfig algo = config.algo;
    algo.gamma = config.env.gamma;
    algo.log_every = config.log_every;
    algo.oracle_logging = config.oracle_logging;
    algo.mirror = (p == 2.0) ? MirrorMap::euclidean() : MirrorMap::pnorm(p);
    if (algo.mirror.zeta_defaulted) {
      std::cerr << "warning: sweep p=" << p << " uses defaulted zeta=1\n";
    }
    std::vector<double> finals;
    for (long seed : config.seeds) {
      const RunRecord rec = run_algorithm(mdp, features, algo, static_cast<std::uint64_t>(seed));
      finals.push_back(final_exact_value(mdp, features, rec.final_theta));
    }
    const MeanStd ms = mean_std(finals);
    rows.push_back({p, ms.mean, ms.std, false});
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mean_final_exact_j > rows[best].mean_final_exact_j) best = i;
  }
  if (!rows.empty()) rows[best].best = true;

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output dir " + config.output_dir + ": " + ec.message());
  std::string csv = "p,mean_final_exact_J,std_final_exact_J,best\n";
  for (const SweepRow& row : rows) {
    csv += format_double(row.p);
    csv += ',';
    csv += format_double(row.mean_final_exact_j);
    csv += ',';
    csv += format_double(row.std_final_exact_j);
    csv += ',';
    csv += row.best ? "1" : "0";
    csv += '\n';
  }
  write_file(fs::path(config.output_dir) / "sweep_p.csv", csv);
  return rows;
}

std::vector<CompareColumn> compare(const ExperimentConfig& config) {
  config.validate();
  auto [mdp, features] = build_env(config.env);

  std::vector<AlgoConfig> algos = {config.algo};
  std::vector<std::string> labels = {config.algo_label};
  for (std::size_t i = 0; i < config.extra_algos.size(); ++i) {
    algos.push_back(config.extra_algos[i]);
    labels.push_back(config.extra_algo_labels[i]);
  }

  std::vector<CompareColumn> columns;
  for (std::size_t i = 0; i < algos.size(); ++i) {
    AlgoConfig algo = algos[i];
    algo.gamma = config.env.gamma;
    algo.log_every = config.log_every;
    algo.oracle_logging = config.oracle_logging;
    const std::vector<RunRecord> records = run_all_seeds(mdp, features, algo, config.seeds);

    CompareColumn col;
    col.label = labels[i];
    const std::size_t rows = records.front().rows.size();
    for (const RunRecord& r : records) {
      if (r.rows.size() != rows) {
        throw ValidationError("compare: seed runs logged different row counts");
      }
    }
    for (std::size_t row = 0; row < rows; ++row) {
      col.trajectories.push_back(records.front().rows[row].trajectories);
      double est = 0.0;
      double exact = 0.0;
      bool have_oracle = true;
      for (const RunRecord& r : records) {
        est += r.rows[row].est_return;
        if (r.rows[row].exact_j.has_value()) {
          exact += *r.rows[row].exact_j;
        } else {
          have_oracle = false;
        }
      }
      col.mean_est_return.push_back(est / static_cast<double>(records.size()));
      if (have_oracle) col.mean_exact_j.push_back(exact / static_cast<double>(records.size()));
    }
    double final_sum = 0.0;
    for (const RunRecord& r : records) {
      final_sum += final_exact_value(mdp, features, r.final_theta);
    }
    col.final_mean_exact_j = final_sum / static_cast<double>(records.size());
    columns.push_back(std::move(col));
  }

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output dir " + config.output_dir + ": " + ec.message());
  write_file(fs::path(config.output_dir) / "compare.csv", compare_csv(columns));
  return columns;
}

std::string compare_csv(const std::vector<CompareColumn>& columns) {
  // Align on the union of cumulative budgets; each algorithm contributes its
  // most recent row at or below the budget, never rows it has not reached.
  std::set<long> budget_set;
  for (const CompareColumn& col : columns) {
    budget_set.insert(col.trajectories.begin(), col.trajectories.end());
  }
  std::string out = "trajectories";
  for (const CompareColumn& col : columns) {
    out += "," + col.label + "_mean_est_return," + col.label + "_mean_exact_J";
  }
  out += '\n';
  for (long budget : budget_set) {
    out += std::to_string(budget);
    for (const CompareColumn& col : columns) {
      // Last logged row with trajectories <= budget.
      long idx = -1;
      for (std::size_t i = 0; i < col.trajectories.size(); ++i) {
        if (col.trajectories[i] <= budget) idx = static_cast<long>(i);
        else break;
      }
      if (idx < 0) {
        out += ",,";
      } else {
        out += ',';
        out += format_double(col.mean_est_return[static_cast<std::size_t>(idx)]);
        out += ',';
        if (!col.mean_exact_j.empty()) {
          out += format_double(col.mean_exact_j[static_cast<std::size_t>(idx)]);
        }
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace mpo
