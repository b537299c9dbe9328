#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "explore/modulation.hpp"
#include "explore/policy.hpp"

using namespace explore;

namespace {

std::vector<QuantileVector> random_table(int actions, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<QuantileVector> table(actions);
  for (auto& q : table) {
    q.values.resize(n);
    for (double& v : q.values) v = normal(rng);
  }
  return table;
}

}  // namespace

TEST_CASE("optimism aggregate at omega zero is the arithmetic mean") {
  CHECK(optimism_aggregate(std::vector<double>{1, 2, 3}, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("optimism aggregate of a constant vector is that constant") {
  for (double omega : {-10.0, -1.0, 0.0, 2.0, 10.0}) {
    CHECK(optimism_aggregate(std::vector<double>{3.5, 3.5, 3.5, 3.5}, omega) ==
          doctest::Approx(3.5).epsilon(1e-14));
  }
}

TEST_CASE("optimism aggregate matches direct evaluation at n=2") {
  // omega=1, nu={0.25,0.75}, q=[0,1] -> e^{-0.75}/(e^{-0.25}+e^{-0.75})
  const double expected = std::exp(-0.75) / (std::exp(-0.25) + std::exp(-0.75));
  CHECK(optimism_aggregate(std::vector<double>{0.0, 1.0}, 1.0) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.3775407).epsilon(1e-6));
}

TEST_CASE("optimism aggregate stays within the quantile range") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto table = random_table(1, 11, rng);
    auto& q = table[0].values;
    const double lo = *std::min_element(q.begin(), q.end());
    const double hi = *std::max_element(q.begin(), q.end());
    for (double omega : {-1000.0, -10.0, -2.0, -1.0, 0.0, 1.0, 2.0, 10.0, 1000.0}) {
      const double v = optimism_aggregate(q, omega);
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("optimism aggregate is strictly decreasing in omega on sorted quantiles") {
  std::vector<double> q = {0.0, 0.3, 0.9, 1.4, 2.0};
  double prev = optimism_aggregate(q, -20.0);
  for (double omega : {-10.0, -2.0, -1.0, 0.0, 1.0, 2.0, 10.0, 20.0}) {
    const double v = optimism_aggregate(q, omega);
    CHECK(v < prev);
    prev = v;
  }
  // limits: very negative omega selects the top quantile, very positive the bottom
  CHECK(optimism_aggregate(q, -1000.0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(optimism_aggregate(q, 1000.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("optimism aggregate rejects bad input") {
  CHECK_THROWS(optimism_aggregate(std::vector<double>{}, 0.0));
  CHECK_THROWS(optimism_aggregate(std::vector<double>{1.0}, std::nan("")));
  CHECK_THROWS(optimism_aggregate(std::vector<double>{std::nan("")}, 0.0));
}

TEST_CASE("full uniform mixture at epsilon one") {
  Rng rng(3);
  auto table = random_table(4, 5, rng);
  Modulation z = reference_modulation(4);
  z.epsilon = 1.0;
  const auto p = action_distribution(table, z, std::nullopt);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("repeat probability stacks on the previous action") {
  Rng rng(4);
  auto table = random_table(4, 5, rng);
  Modulation z = reference_modulation(4);
  z.epsilon = 1.0;
  z.repeat_prob = 0.5;
  const auto p = action_distribution(table, z, 2);
  CHECK(p[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(p[3] == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("tiny temperature concentrates on the best mean") {
  std::vector<QuantileVector> table = {{{1.0}}, {{0.0}}};
  Modulation z = reference_modulation(2);
  z.epsilon = 0.0;
  z.temperature = 0.00001;
  const auto p = action_distribution(table, z, std::nullopt);
  CHECK(p[0] > 1.0 - 1e-6);
}

TEST_CASE("first step drops the repeat term") {
  Rng rng(5);
  auto table = random_table(3, 7, rng);
  Modulation z = reference_modulation(3);
  z.repeat_prob = 0.7;
  Modulation z0 = z;
  z0.repeat_prob = 0.0;
  const auto p_first = action_distribution(table, z, std::nullopt);
  const auto p_zero = action_distribution(table, z0, std::nullopt);
  for (int a = 0; a < 3; ++a) CHECK(p_first[a] == doctest::Approx(p_zero[a]).epsilon(1e-14));
}

TEST_CASE("distribution sums to one across the extended sets") {
  Rng rng(11);
  std::vector<Modulation> sweep;
  for (auto dim : {ModulationDim::Temperature, ModulationDim::Epsilon, ModulationDim::Repeat,
                   ModulationDim::Optimism, ModulationDim::Bias}) {
    const auto cls = extended_set(dim);
    for (int arm = 0; arm < cls.arm_count(4); ++arm) {
      Modulation z = reference_modulation(4);
      cls.apply(z, arm, 4);
      sweep.push_back(z);
    }
  }
  for (const auto& z : sweep) {
    for (int trial = 0; trial < 20; ++trial) {
      auto table = random_table(4, 11, rng);
      for (auto prev : {std::optional<int>{}, std::optional<int>{1}}) {
        const auto p = action_distribution(table, z, prev);
        const double sum = std::accumulate(p.begin(), p.end(), 0.0);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        for (double v : p) CHECK(v >= 0.0);
        if (prev) CHECK(p[*prev] >= z.repeat_prob - 1e-12);
      }
    }
  }
}

TEST_CASE("sampling follows the distribution") {
  Rng rng(42);
  std::vector<double> dist = {0.25, 0.25, 0.25, 0.25};
  std::vector<long> counts(4, 0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) counts[sample_action(dist, rng)] += 1;
  for (long c : counts) CHECK(std::abs(c / double(n) - 0.25) < 0.005);

  std::vector<double> point = {1.0, 0.0, 0.0};
  for (int i = 0; i < 100; ++i) CHECK(sample_action(point, rng) == 0);

  Rng a(9), b(9);
  std::vector<double> two = {0.3, 0.7};
  for (int i = 0; i < 1000; ++i) CHECK(sample_action(two, a) == sample_action(two, b));
}

TEST_CASE("greedy action and tie-breaking") {
  std::vector<QuantileVector> table = {{{0.0}}, {{5.0}}, {{3.0}}};
  CHECK(greedy_action(table) == 1);
  std::vector<QuantileVector> tie = {{{2.0}}, {{2.0}}};
  CHECK(greedy_action(tie) == 0);
  // positive scaling leaves the argmax unchanged
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = random_table(5, 3, rng);
    const int before = greedy_action(t);
    for (auto& q : t) {
      for (double& v : q.values) v *= 3.25;
    }
    CHECK(greedy_action(t) == before);
  }
}

TEST_CASE("near-greedy limit matches greedy action") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    auto table = random_table(4, 5, rng);
    Modulation z = reference_modulation(4);
    z.epsilon = 0.0;
    z.temperature = 1e-9;
    const auto p = action_distribution(table, z, std::nullopt);
    CHECK(p[greedy_action(table)] > 0.999);
  }
}

TEST_CASE("invalid modulations are rejected") {
  std::vector<QuantileVector> table = {{{0.0}}, {{1.0}}};
  Modulation z = reference_modulation(2);
  z.temperature = 0.0;
  CHECK_THROWS(action_distribution(table, z, std::nullopt));
  CHECK_THROWS(action_distribution({}, reference_modulation(2), std::nullopt));
}
