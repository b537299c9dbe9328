// Command-line front end: experiment presets, training runs, metrics and the
// synthetic bandit benchmark. Output layout under --out:
//   runs/<variant>/<seed>/log.csv   figures/*.svg   summary.csv
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "explore/harness.hpp"
#include "explore/metrics.hpp"

namespace fs = std::filesystem;
using namespace explore;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / (xs.size() - 1.0) / xs.size());
  }
  return out;
}

fs::path run_dir(const fs::path& out, const std::string& variant, std::uint64_t seed) {
  const fs::path dir = out / "runs" / variant / std::to_string(seed);
  fs::create_directories(dir);
  return dir;
}

void write_summary(const fs::path& out,
                   const std::vector<std::pair<std::string, MeanStderr>>& rows,
                   const std::string& metric_name) {
  std::ofstream file(out / "summary.csv", std::ios::binary);
  file << "variant,metric,mean,stderr\n";
  for (const auto& [variant, ms] : rows) {
    file << variant << "," << metric_name << "," << fmt(ms.mean) << "," << fmt(ms.stderr_) << "\n";
  }
}

int cmd_stationary(const std::string& out_dir, int seeds, std::uint64_t seed0, long episodes,
                   int log_period, int fixed_arm) {
  const fs::path out(out_dir);
  fs::create_directories(out / "figures");
  const LavaWorldContext ctx = make_lavaworld_context();

  std::vector<std::pair<StationaryVariant, int>> variants = {
      {StationaryVariant::OracleFlat, 0},
      {StationaryVariant::OracleFactored, 0},
      {StationaryVariant::Uniform, 0},
      {StationaryVariant::Proxyless, 0},
  };
  if (fixed_arm >= 0) variants.push_back({StationaryVariant::FixedArm, fixed_arm});

  std::vector<Series> curves;
  std::vector<std::pair<std::string, MeanStderr>> summary;
  for (const auto& [variant, arm] : variants) {
    const std::string name = stationary_variant_name(variant);
    std::vector<double> mean_curve(episodes, 0.0);
    std::vector<double> mean_p;
    for (int s = 0; s < seeds; ++s) {
      StationaryConfig cfg;
      cfg.variant = variant;
      cfg.fixed_arm = arm;
      cfg.episodes = episodes;
      cfg.seed = seed0 + static_cast<std::uint64_t>(s);
      cfg.log_period = log_period;
      const auto result = run_lavaworld_stationary(cfg, ctx);
      emit_csv(result.log, run_dir(out, name, cfg.seed) / "log.csv");
      for (long e = 0; e < episodes; ++e) mean_curve[e] += result.cumulative[e] / seeds;
      mean_p.push_back(std::accumulate(result.per_episode_p.begin(), result.per_episode_p.end(),
                                       0.0) / episodes);
    }
    Series series;
    series.label = name;
    for (long e = 0; e < episodes; ++e) {
      series.x.push_back(static_cast<double>(e + 1));
      series.y.push_back(mean_curve[e]);
    }
    curves.push_back(std::move(series));
    summary.emplace_back(name, mean_stderr(mean_p));
  }
  emit_svg_lineplot(curves, out / "figures" / "cumulative.svg", "cumulative success", "episode",
                    "probability");
  write_summary(out, summary, "mean_success_probability");
  return 0;
}

int cmd_nonstationary(const std::string& out_dir, int seeds, std::uint64_t seed0, long episodes,
                      int log_period, int fixed_arm) {
  const fs::path out(out_dir);
  fs::create_directories(out / "figures");
  const LavaWorldContext ctx = make_lavaworld_context();

  std::vector<std::pair<NonstationaryVariant, int>> variants = {
      {NonstationaryVariant::Proxy, 0},
      {NonstationaryVariant::Oracle, 0},
      {NonstationaryVariant::Uniform, 0},
  };
  if (fixed_arm >= 0) variants.push_back({NonstationaryVariant::FixedArm, fixed_arm});

  std::vector<Series> curves;
  std::vector<std::pair<std::string, MeanStderr>> summary;
  for (const auto& [variant, arm] : variants) {
    const std::string name = nonstationary_variant_name(variant);
    std::vector<double> mean_curve(episodes, 0.0);
    std::vector<double> finals;
    for (int s = 0; s < seeds; ++s) {
      NonstationaryConfig cfg;
      cfg.variant = variant;
      cfg.fixed_arm = arm;
      cfg.episodes = episodes;
      cfg.seed = seed0 + static_cast<std::uint64_t>(s);
      cfg.log_period = log_period;
      const auto result = run_lavaworld_nonstationary(cfg, ctx);
      emit_csv(result.log, run_dir(out, name, cfg.seed) / "log.csv");
      for (long e = 0; e < episodes; ++e) mean_curve[e] += result.metric[e] / seeds;
      finals.push_back(result.final_metric);
    }
    Series series;
    series.label = name;
    for (long e = 0; e < episodes; ++e) {
      series.x.push_back(static_cast<double>(e + 1));
      series.y.push_back(mean_curve[e]);
    }
    curves.push_back(std::move(series));
    summary.emplace_back(name, mean_stderr(finals));
  }
  emit_svg_lineplot(curves, out / "figures" / "metric.svg", "greedy success probability",
                    "episode", "probability");
  write_summary(out, summary, "final_success_metric");
  return 0;
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.contains("map_path")) cfg.map_path = j["map_path"].get<std::string>();
  if (j.contains("modulation_set")) cfg.modulation_set = j["modulation_set"].get<std::string>();
  if (j.contains("bandit")) cfg.bandit = parse_bandit_kind(j["bandit"].get<std::string>());
  if (j.contains("fixed_arm")) cfg.fixed_arm = j["fixed_arm"].get<int>();
  if (j.contains("actors")) cfg.actors = j["actors"].get<int>();
  if (j.contains("episodes")) cfg.episodes = j["episodes"].get<long>();
  if (j.contains("samples_to_insertion")) cfg.samples_to_insertion = j["samples_to_insertion"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("eval_period")) cfg.eval_period = j["eval_period"].get<int>();
  if (j.contains("num_quantiles")) cfg.num_quantiles = j["num_quantiles"].get<int>();
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("nstep")) cfg.nstep = j["nstep"].get<int>();
  if (j.contains("replay_capacity")) cfg.replay_capacity = j["replay_capacity"].get<std::size_t>();
  if (j.contains("target_sync_period")) cfg.target_sync_period = j["target_sync_period"].get<int>();
  if (j.contains("max_episode_steps")) cfg.max_episode_steps = j["max_episode_steps"].get<long>();
  if (j.contains("learner_enabled")) cfg.learner_enabled = j["learner_enabled"].get<bool>();
}

int cmd_train(ExperimentConfig cfg, int seeds, const std::string& out_dir) {
  const fs::path out(out_dir);
  std::vector<std::pair<std::string, MeanStderr>> summary;
  std::vector<double> finals;
  const std::string variant = bandit_kind_name(cfg.bandit);
  for (int s = 0; s < seeds; ++s) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(s);
    const auto result = run_experiment(run_cfg);
    emit_csv(result.log, run_dir(out, variant, run_cfg.seed) / "log.csv");
    finals.push_back(result.log.rows.empty() ? 0.0 : result.log.rows.back().eval_return);
  }
  summary.emplace_back(variant, mean_stderr(finals));
  write_summary(out, summary, "final_eval_return");
  return 0;
}

int cmd_rank(const std::string& in_path, const std::string& out_path) {
  const fs::path in(in_path);
  const auto outcomes = fs::is_directory(in) ? load_outcomes_dir(in) : load_outcomes_csv(in);
  const auto report = relative_rank(outcomes);
  std::ofstream* file = nullptr;
  std::ofstream handle;
  if (!out_path.empty()) {
    handle.open(fs::path(out_path), std::ios::binary);
    if (!handle) throw std::runtime_error("cannot open output: " + out_path);
    handle << "variant,relative_rank\n";
    file = &handle;
  }
  for (const auto& [variant, value] : report.overall) {
    std::cout << variant << "=" << fmt(value) << "\n";
    if (file) *file << variant << "," << fmt(value) << "\n";
  }
  return 0;
}

int cmd_drop(const std::string& in_path, const std::string& early_best) {
  const fs::path in(in_path);
  const auto outcomes = fs::is_directory(in) ? load_outcomes_dir(in) : load_outcomes_csv(in);
  std::map<std::string, std::vector<double>> by_variant;
  for (const auto& o : outcomes) by_variant[o.variant].push_back(o.score);
  std::map<std::string, double> means;
  for (const auto& [variant, scores] : by_variant) means[variant] = mean_stderr(scores).mean;
  const double value = performance_drop(early_best, means);
  std::cout << "normalized_score=" << fmt(value) << "\n";
  std::cout << "drop=" << fmt(1.0 - value) << "\n";
  return 0;
}

int cmd_bench(int steps, int flip_period, int seeds, std::uint64_t seed0,
              const std::string& out_dir) {
  const auto bench = run_flipping_bench(steps, flip_period, seeds, seed0);
  const std::vector<std::pair<std::string, MeanStderr>> summary = {
      {"adaptive", mean_stderr(bench.adaptive)},
      {"ucb", mean_stderr(bench.ucb)},
      {"thompson", mean_stderr(bench.thompson)},
      {"uniform", mean_stderr(bench.uniform)},
  };
  for (const auto& [name, ms] : summary) {
    std::cout << name << "=" << fmt(ms.mean) << " stderr=" << fmt(ms.stderr_) << "\n";
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_summary(out_dir, summary, "average_reward");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bandit-modulated exploration experiments"};
  app.require_subcommand(1);
  bool deterministic = false;  // runs are always fully seeded; this additionally forces serial actors
  app.add_flag("--deterministic", deterministic, "fix all randomness to the given seed");

  std::uint64_t seed = 0;
  int seeds = 10;
  std::string out_dir = "out";
  long episodes = 2000;
  int log_period = 10;
  int fixed_arm = -1;

  auto* stationary = app.add_subcommand("lavaworld-stationary", "fixed-Q preset");
  stationary->fallthrough();
  stationary->add_option("--seed", seed, "base seed");
  stationary->add_option("--seeds", seeds, "number of seeds");
  stationary->add_option("--episodes", episodes, "episodes per run");
  stationary->add_option("--log-period", log_period, "episodes per CSV row");
  stationary->add_option("--fixed-arm", fixed_arm, "also run this fixed arm");
  stationary->add_option("--out", out_dir, "output directory");

  auto* nonstationary = app.add_subcommand("lavaworld-nonstationary", "lava-suppression preset");
  nonstationary->fallthrough();
  long ns_episodes = 1500;
  nonstationary->add_option("--seed", seed, "base seed");
  nonstationary->add_option("--seeds", seeds, "number of seeds");
  nonstationary->add_option("--episodes", ns_episodes, "episodes per run");
  nonstationary->add_option("--log-period", log_period, "episodes per CSV row");
  nonstationary->add_option("--fixed-arm", fixed_arm, "also run this fixed arm");
  nonstationary->add_option("--out", out_dir, "output directory");

  auto* train = app.add_subcommand("train", "tabular learner + bandit on an ASCII-map MDP");
  train->fallthrough();
  ExperimentConfig train_cfg;
  std::string config_path, bandit_name = "adaptive";
  int train_seeds = 1;
  train->add_option("--config", config_path, "JSON experiment config");
  train->add_option("--map", train_cfg.map_path, "ASCII map file (default: built-in layout)");
  train->add_option("--bandit", bandit_name, "adaptive|factored|uniform|ucb|thompson|fixed");
  train->add_option("--fixed-arm", train_cfg.fixed_arm, "arm for the fixed kind");
  train->add_option("--modulation-set", train_cfg.modulation_set,
                    "curated|extended|lavaworld|<path>");
  train->add_option("--episodes", train_cfg.episodes, "episodes per run");
  train->add_option("--actors", train_cfg.actors, "concurrent actors");
  train->add_option("--seed", train_cfg.seed, "base seed");
  train->add_option("--seeds", train_seeds, "number of seeds");
  train->add_option("--out", out_dir, "output directory");

  auto* rank = app.add_subcommand("rank", "relative rank over outcome CSVs");
  rank->fallthrough();
  std::string rank_in, rank_out;
  rank->add_option("--in", rank_in, "outcomes CSV or directory")->required();
  rank->add_option("--out", rank_out, "summary CSV path");

  auto* drop = app.add_subcommand("drop", "performance drop of an early pick");
  drop->fallthrough();
  std::string drop_in, early_best;
  drop->add_option("--in", drop_in, "outcomes CSV or directory")->required();
  drop->add_option("--early-best", early_best, "variant picked on early evidence")->required();

  auto* bench = app.add_subcommand("bench", "synthetic flipping-arm bandit benchmark");
  bench->fallthrough();
  int bench_steps = 3000, bench_flip = 300, bench_seeds = 50;
  std::string bench_out;
  bench->add_option("--steps", bench_steps, "pulls per run");
  bench->add_option("--flip-period", bench_flip, "steps between mean swaps");
  bench->add_option("--seeds", bench_seeds, "number of seeds");
  bench->add_option("--seed", seed, "base seed");
  bench->add_option("--out", bench_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*stationary) return cmd_stationary(out_dir, seeds, seed, episodes, log_period, fixed_arm);
    if (*nonstationary) {
      return cmd_nonstationary(out_dir, seeds, seed, ns_episodes, log_period, fixed_arm);
    }
    if (*train) {
      if (!config_path.empty()) apply_config_file(train_cfg, config_path);
      if (train->count("--bandit") > 0 || config_path.empty()) {
        train_cfg.bandit = parse_bandit_kind(bandit_name);
      }
      // actor threads race on replay ordering; a reproducible run must be serial
      if (deterministic) train_cfg.actors = 1;
      return cmd_train(train_cfg, train_seeds, out_dir);
    }
    if (*rank) return cmd_rank(rank_in, rank_out);
    if (*drop) return cmd_drop(drop_in, early_best);
    if (*bench) return cmd_bench(bench_steps, bench_flip, bench_seeds, seed, bench_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
