#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "explore/learner.hpp"
#include "explore/policy.hpp"

using namespace explore;

namespace {

double huber(double u, double kappa) {
  const double au = std::abs(u);
  return au <= kappa ? 0.5 * u * u : kappa * (au - 0.5 * kappa);
}

// Scalar loss whose gradient the update implements, for finite differencing.
double quantile_loss(std::span<const double> q, std::span<const double> targets, double kappa) {
  const int n = static_cast<int>(q.size());
  double loss = 0.0;
  for (int j = 0; j < n; ++j) {
    const double nu = quantile_midpoint(j, n);
    for (double target : targets) {
      const double u = target - q[j];
      loss += std::abs(nu - (u < 0.0 ? 1.0 : 0.0)) * huber(u, kappa) / n;
    }
  }
  return loss;
}

}  // namespace

TEST_CASE("quantile midpoints") {
  CHECK(quantile_midpoint(0, 1) == doctest::Approx(0.5));
  CHECK(quantile_midpoint(0, 11) == doctest::Approx(1.0 / 22));
  CHECK(quantile_midpoint(10, 11) == doctest::Approx(21.0 / 22));
}

TEST_CASE("terminal targets are the discounted reward sum") {
  QuantileQTable online(4, 2, 3), target(4, 2, 3);
  Transition t;
  t.rewards = {1.0, 1.0, 1.0};
  t.terminal = true;
  const auto targets = td_target(online, target, t, 0.99);
  for (double v : targets) CHECK(v == doctest::Approx(2.9701).epsilon(1e-15));

  t.rewards = {1.0, 0.5, 0.25};
  const auto mixed = td_target(online, target, t, 0.9);
  for (double v : mixed) CHECK(v == doctest::Approx(1.0 + 0.45 + 0.2025).epsilon(1e-15));
}

TEST_CASE("bootstrapped targets pick the online argmax but read the target table") {
  QuantileQTable online(2, 2, 2), target(2, 2, 2);
  // online prefers action 1 at the bootstrap state
  online.quantiles(1, 0)[0] = 5.0;
  online.quantiles(1, 0)[1] = 5.0;
  online.quantiles(1, 1)[0] = 6.0;
  online.quantiles(1, 1)[1] = 6.0;
  // the target table disagrees about the values themselves
  target.quantiles(1, 0)[0] = 100.0;
  target.quantiles(1, 1)[0] = 1.0;
  target.quantiles(1, 1)[1] = 3.0;

  Transition t;
  t.state = 0;
  t.action = 0;
  t.rewards = {1.0, 0.0};
  t.bootstrap_state = 1;
  const auto targets = td_target(online, target, t, 0.9);
  // 1 + 0.9^2 * target-quantiles of action 1
  CHECK(targets[0] == doctest::Approx(1.0 + 0.81 * 1.0).epsilon(1e-15));
  CHECK(targets[1] == doctest::Approx(1.0 + 0.81 * 3.0).epsilon(1e-15));
}

TEST_CASE("update gradient matches finite differences of the written-out loss") {
  Rng rng(31);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_int_distribution<int> n_dist(1, 11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = n_dist(rng);
    QuantileQTable table(1, 1, n, /*lr=*/1.0);
    std::vector<double> start(n), targets(n);
    for (double& v : start) v = normal(rng);
    for (double& v : targets) v = normal(rng);
    std::copy(start.begin(), start.end(), table.quantiles(0, 0).begin());

    Transition t;  // state 0, action 0
    quantile_huber_update(table, t, targets);
    const auto after = table.quantiles(0, 0);

    for (int j = 0; j < n; ++j) {
      const double analytic = start[j] - after[j];  // lr = 1, so step = gradient
      const double h = 1e-6;
      auto plus = start, minus = start;
      plus[j] += h;
      minus[j] -= h;
      const double numeric =
          (quantile_loss(plus, targets, 1.0) - quantile_loss(minus, targets, 1.0)) / (2 * h);
      CHECK(std::abs(analytic - numeric) <= 1e-6 * std::max(1.0, std::abs(numeric)));
    }
  }
}

TEST_CASE("update reports the mean absolute TD error") {
  QuantileQTable table(1, 1, 1, 1.0);
  Transition t;
  const double abs_td = quantile_huber_update(table, t, std::vector<double>{3.0});
  CHECK(abs_td == doctest::Approx(3.0));

  QuantileQTable two(1, 1, 2, 1.0);
  const double mean_td = quantile_huber_update(two, t, std::vector<double>{1.0, -1.0});
  CHECK(mean_td == doctest::Approx(1.0));  // four |u| = 1 terms over n^2 = 4

  CHECK_THROWS(quantile_huber_update(table, t, std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(quantile_huber_update(table, t, std::vector<double>{std::nan("")}));
}

TEST_CASE("importance weight scales the step") {
  QuantileQTable full(1, 1, 3, 0.1), half(1, 1, 3, 0.1);
  Transition t;
  const std::vector<double> targets = {1.0, 2.0, 3.0};
  quantile_huber_update(full, t, targets, 1.0);
  quantile_huber_update(half, t, targets, 0.5);
  for (int j = 0; j < 3; ++j) {
    CHECK(half.quantiles(0, 0)[j] == doctest::Approx(0.5 * full.quantiles(0, 0)[j]).epsilon(1e-12));
  }
}

TEST_CASE("replay samples in proportion to priority^alpha") {
  PrioritizedReplay replay(8, 0.6, 0.3);
  Transition a, b;
  a.state = 0;
  b.state = 1;
  replay.add(a, 1.0);
  replay.add(b, 2.0);
  Rng rng(5);
  long hits = 0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const auto batch = replay.sample(1, rng);
    hits += batch.indices[0] == 1;
  }
  const double expected = std::pow(2.0, 0.6) / (1.0 + std::pow(2.0, 0.6));
  CHECK(expected == doctest::Approx(0.60250).epsilon(1e-4));
  CHECK(std::abs(hits / double(draws) - expected) < 0.005);
}

TEST_CASE("alpha zero samples uniformly regardless of priorities") {
  PrioritizedReplay replay(4, 0.0, 0.3);
  Transition t;
  replay.add(t, 1.0);
  replay.add(t, 1000.0);
  Rng rng(6);
  long hits = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) hits += replay.sample(1, rng).indices[0] == 1;
  CHECK(std::abs(hits / double(draws) - 0.5) < 0.01);
}

TEST_CASE("beta zero gives unit weights, larger beta favours rare picks") {
  PrioritizedReplay flat(4, 0.6, 0.0);
  Transition t;
  flat.add(t, 1.0);
  flat.add(t, 5.0);
  Rng rng(8);
  const auto batch = flat.sample(64, rng);
  for (double w : batch.weights) CHECK(w == doctest::Approx(1.0));

  PrioritizedReplay skewed(4, 1.0, 0.5);
  skewed.add(t, 1.0);
  skewed.add(t, 4.0);
  // p = {0.2, 0.8}; w before normalization: (2*0.2)^-0.5 and (2*0.8)^-0.5,
  // so the rare index carries weight 1 and the common one 0.5
  const auto big = skewed.sample(256, rng);
  bool saw_both = false;
  for (int i = 0; i < 256; ++i) {
    if (big.indices[i] == 0) CHECK(big.weights[i] == doctest::Approx(1.0));
    if (big.indices[i] == 1) CHECK(big.weights[i] == doctest::Approx(0.5));
    saw_both = saw_both || big.indices[i] != big.indices[0];
  }
  CHECK(saw_both);
}

TEST_CASE("new transitions enter at the running max priority") {
  PrioritizedReplay replay(4, 0.6, 0.3);
  Transition t;
  replay.add(t);  // empty buffer -> 1
  CHECK(replay.priority(0) == doctest::Approx(1.0));
  replay.add(t, 7.0);
  replay.add(t);  // default = current max
  CHECK(replay.priority(2) == doctest::Approx(7.0));
  replay.set_priority(1, 0.5);
  CHECK(replay.priority(1) == doctest::Approx(0.5));
  CHECK_THROWS(replay.set_priority(1, 0.0));
  CHECK_THROWS(replay.add(t, -1.0));
}

TEST_CASE("the buffer is a ring of fixed capacity") {
  PrioritizedReplay replay(2, 0.6, 0.3);
  Transition t;
  for (int i = 0; i < 5; ++i) {
    t.state = i;
    replay.add(t);
  }
  CHECK(replay.size() == 2);
  CHECK(replay.insertions() == 5);

  PrioritizedReplay empty(2, 0.6, 0.3);
  Rng rng(9);
  CHECK_THROWS(empty.sample(1, rng));
  CHECK_THROWS(PrioritizedReplay(0));
}

TEST_CASE("learner converges to the true action values on a two-state chain") {
  // state 0 -a0-> state 1 (r 0); state 1 -a0-> goal (r 1, terminal);
  // a1 terminates with no reward anywhere. gamma 0.9.
  const double gamma = 0.9;
  QuantileQTable online(2, 2, 11, 0.05), target = online;
  PrioritizedReplay replay(64, 0.6, 0.3);

  Transition step0{0, 0, {0.0}, 1, false};
  Transition step1{1, 0, {1.0}, 0, true};
  Transition bail0{0, 1, {0.0}, 0, true};
  Transition bail1{1, 1, {0.0}, 0, true};
  for (const auto& t : {step0, step1, bail0, bail1}) replay.add(t);

  Rng rng(12);
  long updates = 0;
  bool converged = false;
  for (int step = 0; step < 10000 && !converged; ++step) {
    learner_step(online, target, replay, 32, gamma, rng, updates);
    converged = std::abs(online.mean(1, 0) - 1.0) < 1e-3 &&
                std::abs(online.mean(0, 0) - 0.9) < 1e-3 &&
                std::abs(online.mean(0, 1)) < 1e-3 && std::abs(online.mean(1, 1)) < 1e-3;
  }
  CHECK(converged);
  CHECK(updates > 0);
  // deterministic returns collapse the quantiles to a point; the extreme
  // quantiles contract slowest (their asymmetric weight is 1/22)
  for (double v : online.quantiles(1, 0)) CHECK(v == doctest::Approx(1.0).epsilon(1e-2));
  // priorities were refreshed away from the defaults
  double max_p = 0.0;
  for (std::size_t i = 0; i < replay.size(); ++i) max_p = std::max(max_p, replay.priority(i));
  CHECK(max_p < 1.0);
}

TEST_CASE("a coin-flip return spreads the quantiles over the midpoint grid") {
  // With terminal targets drawn evenly from {0, 1} and kappa 1, each quantile
  // has fixed point q_j = nu_j: the two gradient branches balance exactly at
  // -nu (1 - q) + (1 - nu) q = 0.
  QuantileQTable table(1, 1, 11, 0.05);
  Transition t;
  Rng rng(21);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 60000; ++i) {
    const double r = coin(rng) ? 1.0 : 0.0;
    quantile_huber_update(table, t, std::vector<double>(11, r));
  }
  const auto q = table.quantiles(0, 0);
  for (int j = 0; j < 11; ++j) {
    CHECK(q[j] == doctest::Approx(quantile_midpoint(j, 11)).epsilon(0.15));
  }
  CHECK(table.mean(0, 0) == doctest::Approx(0.5).epsilon(0.1));
  CHECK(q[0] < 0.25);
  CHECK(q[10] > 0.75);
}

TEST_CASE("table snapshots round-trip") {
  QuantileQTable table(3, 2, 5, 0.05);
  Rng rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : table.values) v = normal(rng);
  std::stringstream buffer;
  save_table(table, buffer);
  const QuantileQTable restored = load_table(buffer);
  CHECK(restored.num_states == 3);
  CHECK(restored.num_actions == 2);
  CHECK(restored.num_quantiles == 5);
  CHECK(restored.learning_rate == table.learning_rate);
  CHECK(restored.values == table.values);

  std::stringstream bad("nope v0");
  CHECK_THROWS(load_table(bad));
}

TEST_CASE("priority snapshots are written in order") {
  PrioritizedReplay replay(4, 0.6, 0.3);
  Transition t;
  replay.add(t, 1.0);
  replay.add(t, 2.5);
  std::stringstream out;
  replay.save_priorities(out);
  std::string header;
  std::getline(out, header);
  CHECK(header == "replay-priorities v1");
  std::size_t count = 0;
  out >> count;
  CHECK(count == 2);
  double p0 = 0.0, p1 = 0.0;
  out >> p0 >> p1;
  CHECK(p0 == doctest::Approx(1.0));
  CHECK(p1 == doctest::Approx(2.5));
}

TEST_CASE("bad table shapes are rejected") {
  CHECK_THROWS(QuantileQTable(0, 1, 1));
  CHECK_THROWS(QuantileQTable(1, 1, 1, 0.0));
}
