#include "explore/harness.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "explore/policy.hpp"

namespace explore {

BanditKind parse_bandit_kind(const std::string& name) {
  if (name == "adaptive") return BanditKind::Adaptive;
  if (name == "factored" || name == "factored-adaptive") return BanditKind::FactoredAdaptive;
  if (name == "uniform") return BanditKind::Uniform;
  if (name == "ucb") return BanditKind::Ucb;
  if (name == "thompson") return BanditKind::Thompson;
  if (name.rfind("fixed", 0) == 0) return BanditKind::Fixed;
  throw std::invalid_argument("unknown bandit kind: " + name);
}

std::string bandit_kind_name(BanditKind kind) {
  switch (kind) {
    case BanditKind::Adaptive: return "adaptive";
    case BanditKind::FactoredAdaptive: return "factored-adaptive";
    case BanditKind::Uniform: return "uniform";
    case BanditKind::Ucb: return "ucb";
    case BanditKind::Thompson: return "thompson";
    case BanditKind::Fixed: return "fixed";
  }
  throw std::invalid_argument("bad bandit kind");
}

namespace {

std::unique_ptr<BanditAlgorithm> make_flat_bandit(BanditKind kind, int arms, int fixed_arm) {
  switch (kind) {
    case BanditKind::Adaptive: return std::make_unique<NonStationaryBandit>(arms);
    case BanditKind::Uniform: return std::make_unique<UniformBandit>(arms);
    case BanditKind::Ucb: return std::make_unique<UcbBandit>(arms);
    case BanditKind::Thompson: return std::make_unique<ThompsonBandit>(arms);
    case BanditKind::Fixed: return std::make_unique<FixedArmBandit>(arms, fixed_arm);
    case BanditKind::FactoredAdaptive: break;
  }
  throw std::invalid_argument("make_flat_bandit: factored kind is not flat");
}

struct Rollout {
  double episode_return = 0.0;
  long length = 0;
  StepCause cause = StepCause::None;
  bool reached_goal = false;
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;
};

Rollout rollout_quantile(const TabularMDP& mdp, const QuantileQTable& table, const Modulation& z,
                         Rng& rng, long max_steps) {
  Rollout out;
  int s = mdp.start_state;
  std::optional<int> prev;
  std::vector<QuantileVector> per_action(mdp.num_actions);
  while (out.length < max_steps) {
    if (s == mdp.goal_state) {
      out.reached_goal = true;
      break;
    }
    for (int a = 0; a < mdp.num_actions; ++a) {
      const auto q = table.quantiles(s, a);
      per_action[a].values.assign(q.begin(), q.end());
    }
    const auto dist = action_distribution(per_action, z, prev);
    const int a = sample_action(dist, rng);
    const StepResult res = step(mdp, s, a, rng);
    out.states.push_back(s);
    out.actions.push_back(a);
    out.rewards.push_back(res.reward);
    out.episode_return += res.reward;
    out.length += 1;
    if (res.cause == StepCause::Lava) {
      out.cause = StepCause::Lava;
      return out;
    }
    if (res.next_state == mdp.goal_state) {
      out.reached_goal = true;
      out.states.push_back(res.next_state);
      return out;
    }
    if (res.terminated) {
      out.cause = StepCause::Timeout;
      out.states.push_back(res.next_state);
      return out;
    }
    s = res.next_state;
    prev = a;
  }
  out.states.push_back(s);
  return out;
}

// n-step fragments; lava and goal ends are terminal, timeout bootstraps.
std::vector<Transition> make_transitions(const Rollout& roll, int nstep) {
  std::vector<Transition> out;
  const long T = static_cast<long>(roll.actions.size());
  const bool terminal_end = roll.cause == StepCause::Lava || roll.reached_goal;
  for (long i = 0; i < T; ++i) {
    Transition t;
    t.state = roll.states[i];
    t.action = roll.actions[i];
    const long k = std::min<long>(nstep, T - i);
    t.rewards.assign(roll.rewards.begin() + i, roll.rewards.begin() + i + k);
    if (i + k == T && terminal_end) {
      t.terminal = true;
      t.bootstrap_state = roll.states[i];  // unused
    } else {
      t.bootstrap_state = roll.states[i + k];
    }
    out.push_back(std::move(t));
  }
  return out;
}

double greedy_eval_return(const TabularMDP& mdp, const QuantileQTable& table, Rng& rng,
                          long max_steps) {
  double ret = 0.0;
  int s = mdp.start_state;
  std::vector<QuantileVector> per_action(mdp.num_actions);
  for (long i = 0; i < max_steps; ++i) {
    if (s == mdp.goal_state) break;
    for (int a = 0; a < mdp.num_actions; ++a) {
      const auto q = table.quantiles(s, a);
      per_action[a].values.assign(q.begin(), q.end());
    }
    const int a = greedy_action(per_action);
    const StepResult res = step(mdp, s, a, rng);
    ret += res.reward;
    if (res.terminated) break;
    s = res.next_state;
  }
  return ret;
}

struct Coordinator {
  std::mutex mu;
  const ExperimentConfig* config = nullptr;
  TabularMDP mdp;
  ModulationSpace space;
  std::vector<Modulation> flat;
  std::unique_ptr<BanditAlgorithm> bandit;  // null when factored
  std::optional<FactoredBandit> factored;
  QuantileQTable online;
  QuantileQTable target;
  std::optional<PrioritizedReplay> replay;
  Rng learner_rng{0};
  Rng eval_rng{0};
  long episodes_assigned = 0;
  long episodes_done = 0;
  long env_steps = 0;
  long insertions = 0;
  long batches = 0;
  long updates = 0;
  std::vector<EpisodeReport> reports;
  RunLog log;

  double horizon_value() const {
    if (factored) {
      double sum = 0.0;
      for (std::size_t d = 0; d < factored->dimensions(); ++d) sum += factored->sub(d).horizon();
      return sum / factored->dimensions();
    }
    if (const auto* ns = dynamic_cast<const NonStationaryBandit*>(bandit.get())) {
      return ns->horizon();
    }
    return 0.0;
  }

  std::vector<double> arm_probs() const {
    return factored ? factored->probabilities() : bandit->probabilities();
  }
};

void actor_loop(Coordinator& co, Rng actor_rng) {
  const ExperimentConfig& cfg = *co.config;
  for (;;) {
    QuantileQTable snapshot;
    Modulation z;
    std::vector<int> arms;
    {
      std::lock_guard lock(co.mu);
      if (co.episodes_assigned >= cfg.episodes) return;
      co.episodes_assigned += 1;
      if (co.factored) {
        arms = co.factored->sample_arms(actor_rng);
        z = compose(co.space, arms);
      } else {
        arms = {co.bandit->sample(actor_rng)};
        z = co.flat[arms[0]];
      }
      snapshot = co.online;
    }

    Rollout roll = rollout_quantile(co.mdp, snapshot, z, actor_rng, cfg.max_episode_steps);
    auto transitions = make_transitions(roll, cfg.nstep);

    std::lock_guard lock(co.mu);
    // Fitness first, then the learner consumes this episode's transitions.
    if (co.factored) {
      co.factored->update(arms, roll.episode_return);
    } else {
      co.bandit->update(arms[0], roll.episode_return);
    }
    for (auto& t : transitions) co.replay->add(std::move(t));
    co.insertions += static_cast<long>(transitions.size());
    co.env_steps += roll.length;
    if (cfg.learner_enabled) {
      while ((co.batches + 1) * cfg.samples_to_insertion <= co.insertions) {
        learner_step(co.online, co.target, *co.replay, cfg.batch_size, co.mdp.gamma,
                     co.learner_rng, co.updates, cfg.target_sync_period);
        co.batches += 1;
      }
    }
    co.episodes_done += 1;
    EpisodeReport report;
    report.z = z;
    report.arms = arms;
    report.fitness = roll.episode_return;
    report.length = roll.length;
    report.cause = roll.cause;
    report.t = co.episodes_done;
    co.reports.push_back(std::move(report));
    if (co.episodes_done % cfg.eval_period == 0 || co.episodes_done == cfg.episodes) {
      RunLogRow row;
      row.episode = co.episodes_done;
      row.env_steps = co.env_steps;
      row.fitness = roll.episode_return;
      row.eval_return = greedy_eval_return(co.mdp, co.online, co.eval_rng, cfg.max_episode_steps);
      row.horizon = co.horizon_value();
      row.arm_probs = co.arm_probs();
      co.log.rows.push_back(std::move(row));
    }
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.episodes < 1 || config.actors < 1 || config.samples_to_insertion < 1 ||
      config.batch_size < 1 || config.eval_period < 1 || config.nstep < 1) {
    throw std::invalid_argument("run_experiment: invalid configuration");
  }

  Coordinator co;
  co.config = &config;
  LavaWorld world = config.map_path.empty() ? build_lavaworld() : load_map(config.map_path);
  co.mdp = world.mdp;
  co.space = resolve_space(config.modulation_set, co.mdp.num_actions);
  if (co.space.num_actions != co.mdp.num_actions) {
    throw std::invalid_argument("modulation set action count does not match environment");
  }

  if (config.bandit == BanditKind::FactoredAdaptive) {
    std::vector<int> counts;
    for (const auto& cls : co.space.classes) counts.push_back(cls.arm_count(co.mdp.num_actions));
    co.factored.emplace(counts);
    for (std::size_t c = 0; c < co.space.classes.size(); ++c) {
      for (int k = 0; k < counts[c]; ++k) {
        co.log.arm_columns.push_back(co.space.classes[c].arm_label(k, co.mdp.num_actions));
      }
    }
  } else {
    co.flat = enumerate_flat(co.space, config.dedup_probes, 0x5eed5eedULL);
    co.bandit = make_flat_bandit(config.bandit, static_cast<int>(co.flat.size()), config.fixed_arm);
    for (std::size_t i = 0; i < co.flat.size(); ++i) {
      co.log.arm_columns.push_back("arm" + std::to_string(i));
    }
  }

  co.online = QuantileQTable(co.mdp.num_states, co.mdp.num_actions, config.num_quantiles,
                             config.learning_rate);
  co.target = co.online;
  co.replay.emplace(config.replay_capacity);
  co.learner_rng.seed(config.seed ^ 0x9e3779b97f4a7c15ULL);
  co.eval_rng.seed(config.seed ^ 0x7f4a7c159e3779b9ULL);
  co.log.variant = bandit_kind_name(config.bandit);
  co.log.seed = config.seed;

  if (config.actors == 1) {
    actor_loop(co, Rng(config.seed));
  } else {
    std::vector<std::thread> actors;
    for (int a = 0; a < config.actors; ++a) {
      actors.emplace_back([&co, &config, a] {
        actor_loop(co, Rng(config.seed + 0x51700000ULL + static_cast<std::uint64_t>(a)));
      });
    }
    for (auto& t : actors) t.join();
  }

  ExperimentResult result;
  result.log = std::move(co.log);
  result.reports = std::move(co.reports);
  result.insertions = co.insertions;
  result.learner_batches = co.batches;
  return result;
}

int LavaWorldContext::combo_index(const std::vector<int>& arm_per_class) const {
  int index = 0;
  for (std::size_t c = 0; c < class_arm_counts.size(); ++c) {
    index = index * class_arm_counts[c] + arm_per_class[c];
  }
  return index;
}

LavaWorldContext make_lavaworld_context() {
  LavaWorldContext ctx;
  ctx.world = build_lavaworld();
  ctx.space = lavaworld_space();
  ctx.flat = enumerate_flat(ctx.space, 100, 0x5eed5eedULL);
  for (const auto& cls : ctx.space.classes) {
    ctx.class_arm_counts.push_back(cls.arm_count(ctx.space.num_actions));
  }
  ctx.reference_q = optimal_q(ctx.world.mdp);
  for (const auto& z : ctx.flat) {
    ctx.flat_lp.push_back(exact_lp_oracle(ctx.world.mdp, ctx.reference_q, z));
  }
  ctx.combos = 1;
  for (int k : ctx.class_arm_counts) ctx.combos *= k;
  ctx.combo_lp.resize(ctx.combos);
  std::vector<int> index(ctx.class_arm_counts.size(), 0);
  for (long i = 0; i < ctx.combos; ++i) {
    const Modulation z = compose(ctx.space, index);
    ctx.combo_lp[ctx.combo_index(index)] = exact_lp_oracle(ctx.world.mdp, ctx.reference_q, z);
    for (std::size_t c = ctx.class_arm_counts.size(); c-- > 0;) {
      if (++index[c] < ctx.class_arm_counts[c]) break;
      index[c] = 0;
    }
  }
  return ctx;
}

std::string stationary_variant_name(StationaryVariant variant) {
  switch (variant) {
    case StationaryVariant::OracleFlat: return "oracle-flat";
    case StationaryVariant::OracleFactored: return "oracle-factored";
    case StationaryVariant::Uniform: return "uniform";
    case StationaryVariant::Proxyless: return "proxyless";
    case StationaryVariant::FixedArm: return "fixed";
  }
  throw std::invalid_argument("bad stationary variant");
}

StationaryResult run_lavaworld_stationary(const StationaryConfig& config,
                                          const LavaWorldContext& ctx) {
  const int flat_arms = static_cast<int>(ctx.flat.size());
  Rng rng(config.seed);
  std::unique_ptr<BanditAlgorithm> bandit;
  std::optional<FactoredBandit> factored;
  StationaryResult result;
  result.log.variant = stationary_variant_name(config.variant);
  result.log.seed = config.seed;

  switch (config.variant) {
    case StationaryVariant::OracleFlat:
    case StationaryVariant::Proxyless:
      bandit = std::make_unique<NonStationaryBandit>(flat_arms);
      break;
    case StationaryVariant::Uniform:
      bandit = std::make_unique<UniformBandit>(flat_arms);
      break;
    case StationaryVariant::FixedArm:
      bandit = std::make_unique<FixedArmBandit>(flat_arms, config.fixed_arm);
      break;
    case StationaryVariant::OracleFactored:
      factored.emplace(ctx.class_arm_counts);
      break;
  }
  if (factored) {
    for (std::size_t c = 0; c < ctx.space.classes.size(); ++c) {
      for (int k = 0; k < ctx.class_arm_counts[c]; ++k) {
        result.log.arm_columns.push_back(ctx.space.classes[c].arm_label(k, ctx.space.num_actions));
      }
    }
  } else {
    for (int i = 0; i < flat_arms; ++i) result.log.arm_columns.push_back("arm" + std::to_string(i));
  }

  double survive = 1.0;  // prod(1 - p_t)
  for (long ep = 0; ep < config.episodes; ++ep) {
    double p = 0.0;
    double fitness = 0.0;
    if (factored) {
      const auto arms = factored->sample_arms(rng);
      p = ctx.combo_lp[ctx.combo_index(arms)];
      factored->update(arms, p);  // exact stationary LP signal
    } else {
      const int arm = bandit->sample(rng);
      p = ctx.flat_lp[arm];
      fitness = config.variant == StationaryVariant::Proxyless ? 0.0 : p;
      bandit->update(arm, fitness);
    }
    result.per_episode_p.push_back(p);
    survive *= 1.0 - p;
    result.cumulative.push_back(1.0 - survive);

    if ((ep + 1) % config.log_period == 0 || ep + 1 == config.episodes) {
      RunLogRow row;
      row.episode = ep + 1;
      row.fitness = p;
      row.eval_return = result.cumulative.back();
      if (factored) {
        double sum = 0.0;
        for (std::size_t d = 0; d < factored->dimensions(); ++d) sum += factored->sub(d).horizon();
        row.horizon = sum / factored->dimensions();
        row.arm_probs = factored->probabilities();
      } else {
        if (const auto* ns = dynamic_cast<const NonStationaryBandit*>(bandit.get())) {
          row.horizon = ns->horizon();
        }
        row.arm_probs = bandit->probabilities();
      }
      result.log.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::string nonstationary_variant_name(NonstationaryVariant variant) {
  switch (variant) {
    case NonstationaryVariant::Proxy: return "proxy";
    case NonstationaryVariant::Oracle: return "oracle";
    case NonstationaryVariant::Uniform: return "uniform";
    case NonstationaryVariant::FixedArm: return "fixed";
  }
  throw std::invalid_argument("bad nonstationary variant");
}

namespace {

Rollout rollout_scalar(const TabularMDP& mdp, const QTable& q, const Modulation& z, Rng& rng,
                       long max_steps) {
  Rollout out;
  int s = mdp.start_state;
  std::optional<int> prev;
  std::vector<QuantileVector> per_action(mdp.num_actions);
  for (auto& qv : per_action) qv.values.resize(1);
  while (out.length < max_steps) {
    if (s == mdp.goal_state) {
      out.reached_goal = true;
      break;
    }
    for (int a = 0; a < mdp.num_actions; ++a) per_action[a].values[0] = q.at(s, a);
    const auto dist = action_distribution(per_action, z, prev);
    const int a = sample_action(dist, rng);
    const StepResult res = step(mdp, s, a, rng);
    out.states.push_back(s);
    out.actions.push_back(a);
    out.rewards.push_back(res.reward);
    out.episode_return += res.reward;
    out.length += 1;
    if (res.cause == StepCause::Lava) {
      out.cause = StepCause::Lava;
      return out;
    }
    if (res.next_state == mdp.goal_state) {
      out.reached_goal = true;
      return out;
    }
    if (res.terminated) {
      out.cause = StepCause::Timeout;
      return out;
    }
    s = res.next_state;
    prev = a;
  }
  return out;
}

}  // namespace

NonstationaryResult run_lavaworld_nonstationary(const NonstationaryConfig& config,
                                                const LavaWorldContext& ctx) {
  const TabularMDP& mdp = ctx.world.mdp;
  const int flat_arms = static_cast<int>(ctx.flat.size());
  Rng rng(config.seed);
  std::unique_ptr<BanditAlgorithm> bandit;
  switch (config.variant) {
    case NonstationaryVariant::Proxy:
    case NonstationaryVariant::Oracle:
      bandit = std::make_unique<NonStationaryBandit>(flat_arms);
      break;
    case NonstationaryVariant::Uniform:
      bandit = std::make_unique<UniformBandit>(flat_arms);
      break;
    case NonstationaryVariant::FixedArm:
      bandit = std::make_unique<FixedArmBandit>(flat_arms, config.fixed_arm);
      break;
  }

  NonstationaryResult result;
  result.log.variant = nonstationary_variant_name(config.variant);
  result.log.seed = config.seed;
  for (int i = 0; i < flat_arms; ++i) result.log.arm_columns.push_back("arm" + std::to_string(i));

  QTable q(mdp.num_states, mdp.num_actions, 0.0);
  std::unordered_set<int> seen;
  double metric = success_probability(mdp, greedy_policy_table(mdp, q));
  long env_steps = 0;

  for (long ep = 0; ep < config.episodes; ++ep) {
    const int arm = bandit->sample(rng);
    const Modulation& z = ctx.flat[arm];
    Rollout roll = rollout_scalar(mdp, q, z, rng, config.max_episode_steps);
    env_steps += roll.length;

    std::vector<std::pair<int, int>> trajectory;
    trajectory.reserve(roll.actions.size());
    for (std::size_t i = 0; i < roll.actions.size(); ++i) {
      trajectory.emplace_back(roll.states[i], roll.actions[i]);
    }
    const bool new_found = lava_suppression_update(mdp, q, trajectory, seen);
    const bool q_changed = roll.cause == StepCause::Lava;  // episodes end at the first hit
    if (q_changed) {
      const double metric_after = success_probability(mdp, greedy_policy_table(mdp, q));
      if (config.variant == NonstationaryVariant::Oracle) {
        bandit->update(arm, metric_after - metric);
      }
      metric = metric_after;
    } else if (config.variant == NonstationaryVariant::Oracle) {
      bandit->update(arm, 0.0);
    }
    if (config.variant == NonstationaryVariant::Proxy) {
      bandit->update(arm, binary_lp_proxy(new_found));
    } else if (config.variant != NonstationaryVariant::Oracle) {
      bandit->update(arm, roll.episode_return);
    }
    result.metric.push_back(metric);

    if ((ep + 1) % config.log_period == 0 || ep + 1 == config.episodes) {
      RunLogRow row;
      row.episode = ep + 1;
      row.env_steps = env_steps;
      row.fitness = config.variant == NonstationaryVariant::Proxy ? binary_lp_proxy(new_found)
                                                                  : roll.episode_return;
      row.eval_return = metric;
      if (const auto* ns = dynamic_cast<const NonStationaryBandit*>(bandit.get())) {
        row.horizon = ns->horizon();
      }
      row.arm_probs = bandit->probabilities();
      result.log.rows.push_back(std::move(row));
    }
  }
  result.final_metric = metric;
  return result;
}

FlippingBenchResult run_flipping_bench(int steps, int flip_period, int seeds,
                                       std::uint64_t seed0) {
  FlippingBenchResult result;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto run_one = [&](BanditAlgorithm& algo, std::uint64_t salt) {
      Rng rng(seed0 + 1000003ULL * seed + salt);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      double total = 0.0;
      for (int t = 0; t < steps; ++t) {
        const bool flipped = (t / flip_period) % 2 == 1;
        const int arm = algo.sample(rng);
        const double mean = (arm == 0) != flipped ? 0.9 : 0.1;
        // Return-scale payoffs: fitness signals are episodic returns, not
        // unit-interval values, which is what defeats bonus- and prior-based
        // algorithms calibrated to unit scale.
        const double reward = unit(rng) < mean ? 10.0 : 0.0;
        algo.update(arm, reward);
        total += reward;
      }
      return total / steps;
    };
    NonStationaryBandit adaptive(2);
    UcbBandit ucb(2);
    ThompsonBandit thompson(2);
    UniformBandit uniform(2);
    result.adaptive.push_back(run_one(adaptive, 1));
    result.ucb.push_back(run_one(ucb, 2));
    result.thompson.push_back(run_one(thompson, 3));
    result.uniform.push_back(run_one(uniform, 4));
  }
  return result;
}

}  // namespace explore
