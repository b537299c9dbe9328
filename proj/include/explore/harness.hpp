#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "explore/bandit.hpp"
#include "explore/env.hpp"
#include "explore/learner.hpp"
#include "explore/modulation.hpp"

namespace explore {

enum class BanditKind { Adaptive, FactoredAdaptive, Uniform, Ucb, Thompson, Fixed };

BanditKind parse_bandit_kind(const std::string& name);
std::string bandit_kind_name(BanditKind kind);

struct ExperimentConfig {
  std::string map_path;                     // empty -> built-in LavaWorld
  std::string modulation_set = "lavaworld";
  BanditKind bandit = BanditKind::Adaptive;
  int fixed_arm = 0;
  int actors = 1;
  long episodes = 2000;
  int samples_to_insertion = 8;   // transitions inserted per learner batch
  int batch_size = 32;
  int eval_period = 50;
  int num_quantiles = 11;
  double learning_rate = 0.05;
  int nstep = 3;
  std::size_t replay_capacity = 20000;
  int target_sync_period = 250;
  std::uint64_t seed = 0;
  long max_episode_steps = 10000;
  bool learner_enabled = true;
  int dedup_probes = 100;
};

struct EpisodeReport {
  Modulation z;
  std::vector<int> arms;   // per-dimension (factored) or {flat arm}
  double fitness = 0.0;
  long length = 0;
  StepCause cause = StepCause::None;
  long t = 0;              // episode counter at completion
};

struct RunLogRow {
  long episode = 0;
  long env_steps = 0;
  double fitness = 0.0;
  double eval_return = 0.0;
  double horizon = 0.0;
  std::vector<double> arm_probs;
};

struct RunLog {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<std::string> arm_columns;
  std::vector<RunLogRow> rows;
};

struct ExperimentResult {
  RunLog log;
  std::vector<EpisodeReport> reports;
  long insertions = 0;
  long learner_batches = 0;
};

/// Full actor-learner loop: per-episode modulation sampling, quantile-table
/// rollouts, fitness reporting, prioritized replay and paced learner steps.
/// actors = 1 runs a strictly sequential deterministic loop; actors > 1 run
/// as threads against a mutex-guarded coordinator.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Shared precomputation for the LavaWorld presets: the flat 31-policy set,
/// per-policy success probabilities, and the factored composition table.
struct LavaWorldContext {
  LavaWorld world;
  ModulationSpace space;
  std::vector<Modulation> flat;         // deduplicated policies
  std::vector<int> class_arm_counts;    // expanded arm count per class
  QTable reference_q;                   // optimal Q for the stationary setting
  std::vector<double> flat_lp;          // success probability per flat arm
  std::vector<double> combo_lp;         // success probability per raw combination
  long combos = 0;

  int combo_index(const std::vector<int>& arm_per_class) const;
};

LavaWorldContext make_lavaworld_context();

enum class StationaryVariant { OracleFlat, OracleFactored, Uniform, Proxyless, FixedArm };

std::string stationary_variant_name(StationaryVariant variant);

struct StationaryConfig {
  StationaryVariant variant = StationaryVariant::OracleFlat;
  int fixed_arm = 0;
  long episodes = 2000;
  std::uint64_t seed = 0;
  int log_period = 10;
};

struct StationaryResult {
  RunLog log;
  std::vector<double> per_episode_p;  // exact success probability of each chosen z
  std::vector<double> cumulative;     // 1 - prod(1 - p)
};

/// Stationary LavaWorld preset: fixed optimal reference Q, no learning; the
/// oracle variants receive the exact reward-encounter probability as fitness,
/// the proxy-less variant receives no informative signal.
StationaryResult run_lavaworld_stationary(const StationaryConfig& config,
                                          const LavaWorldContext& ctx);

enum class NonstationaryVariant { Proxy, Oracle, Uniform, FixedArm };

std::string nonstationary_variant_name(NonstationaryVariant variant);

struct NonstationaryConfig {
  NonstationaryVariant variant = NonstationaryVariant::Proxy;
  int fixed_arm = 0;
  long episodes = 1500;
  std::uint64_t seed = 0;
  int log_period = 10;
  long max_episode_steps = 10000;
};

struct NonstationaryResult {
  RunLog log;
  std::vector<double> metric;  // greedy-from-Q success probability per episode
  double final_metric = 0.0;
};

/// Non-stationary LavaWorld preset: Q starts at zero, lava suppression after
/// each episode, binary learning proxy (or the exact LP difference for the
/// oracle variant) as bandit fitness.
NonstationaryResult run_lavaworld_nonstationary(const NonstationaryConfig& config,
                                                const LavaWorldContext& ctx);

/// Synthetic non-stationary 2-arm benchmark: Bernoulli arms whose means swap
/// every flip_period pulls. Returns per-seed average rewards per algorithm.
struct FlippingBenchResult {
  std::vector<double> adaptive;
  std::vector<double> ucb;
  std::vector<double> thompson;
  std::vector<double> uniform;
};

FlippingBenchResult run_flipping_bench(int steps = 3000, int flip_period = 300, int seeds = 50,
                                       std::uint64_t seed0 = 0);

}  // namespace explore
