#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <random>
#include <vector>

namespace explore {

using Rng = std::mt19937_64;

struct FitnessRecord {
  long t = 0;       // episode counter
  int arm = 0;
  double fitness = 0.0;
};

/// Common surface for everything the harness can draw arms from.
class BanditAlgorithm {
 public:
  virtual ~BanditAlgorithm() = default;
  virtual int arm_count() const = 0;
  virtual int sample(Rng& rng) = 0;
  virtual void update(int arm, double fitness) = 0;
  virtual std::vector<double> probabilities() const = 0;
};

/// Windowed non-stationary bandit. Samples arms in proportion to the
/// probability that they beat the recent mean fitness; the window length h
/// adapts online via a regression-accuracy criterion and never shrinks
/// below 2K.
class NonStationaryBandit final : public BanditAlgorithm {
 public:
  explicit NonStationaryBandit(int arm_count, std::size_t capacity_cap = 100000);

  int arm_count() const override { return arms_; }
  double horizon() const { return horizon_; }

  /// Mean fitness over the most recent min(h, available) records; 0 when the
  /// history is empty.
  double window_mean() const;

  /// mu(arm) = (1/2 + successes) / (1 + pulls) within the current window,
  /// where a success is fitness >= window mean.
  double preference(int arm) const;

  std::vector<double> probabilities() const override;
  int sample(Rng& rng) override;

  /// Squared prediction error of the window-smoothed estimate at the
  /// candidate horizon, against a record not yet in the history.
  double regression_loss(double h_candidate, int arm, double fitness) const;

  void update(int arm, double fitness) override;

  std::size_t history_size() const { return history_.size(); }
  const std::deque<FitnessRecord>& history() const { return history_; }

  void save(std::ostream& out) const;
  static NonStationaryBandit load(std::istream& in);

  static constexpr double kShrinkRate = 0.02;

 private:
  std::size_t window_size(double h) const;
  void trim();

  int arms_;
  double horizon_;
  std::size_t capacity_cap_;
  long t_ = 0;
  std::deque<FitnessRecord> history_;
};

/// One independent sub-bandit per modulation dimension; a full choice is a
/// vector of per-dimension arms, all rewarded with the same scalar fitness.
class FactoredBandit {
 public:
  explicit FactoredBandit(const std::vector<int>& arm_counts);

  std::size_t dimensions() const { return subs_.size(); }
  const NonStationaryBandit& sub(std::size_t d) const { return subs_.at(d); }

  std::vector<int> sample_arms(Rng& rng);
  void update(const std::vector<int>& arm_per_dimension, double fitness);

  /// Concatenated per-dimension probabilities, in dimension order.
  std::vector<double> probabilities() const;

 private:
  std::vector<NonStationaryBandit> subs_;
};

class UniformBandit final : public BanditAlgorithm {
 public:
  explicit UniformBandit(int arm_count);
  int arm_count() const override { return arms_; }
  int sample(Rng& rng) override;
  void update(int, double) override {}
  std::vector<double> probabilities() const override;

 private:
  int arms_;
};

class FixedArmBandit final : public BanditAlgorithm {
 public:
  FixedArmBandit(int arm_count, int arm);
  int arm_count() const override { return arms_; }
  int sample(Rng&) override { return arm_; }
  void update(int, double) override {}
  std::vector<double> probabilities() const override;

 private:
  int arms_;
  int arm_;
};

/// UCB1 with a configurable exploration constant; unpulled arms first.
class UcbBandit final : public BanditAlgorithm {
 public:
  explicit UcbBandit(int arm_count, double exploration = 1.0);
  int arm_count() const override { return arms_; }
  int sample(Rng&) override;
  void update(int arm, double fitness) override;
  std::vector<double> probabilities() const override;

 private:
  int best_arm() const;

  int arms_;
  double c_;
  long total_ = 0;
  std::vector<long> pulls_;
  std::vector<double> means_;
};

/// Thompson sampling with a known-variance normal model per arm. Prior
/// N(0, 1); the observation variance is a running global estimate with a
/// floor of 1e-6.
class ThompsonBandit final : public BanditAlgorithm {
 public:
  explicit ThompsonBandit(int arm_count);
  int arm_count() const override { return arms_; }
  int sample(Rng& rng) override;
  void update(int arm, double fitness) override;
  std::vector<double> probabilities() const override;

 private:
  double observation_variance() const;

  int arms_;
  std::vector<long> pulls_;
  std::vector<double> sums_;
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;  // Welford accumulator over all rewards
};

}  // namespace explore
