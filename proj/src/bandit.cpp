#include "explore/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace explore {

NonStationaryBandit::NonStationaryBandit(int arm_count, std::size_t capacity_cap)
    : arms_(arm_count), horizon_(2.0 * arm_count), capacity_cap_(capacity_cap) {
  if (arm_count < 1) throw std::invalid_argument("NonStationaryBandit: need at least one arm");
}

std::size_t NonStationaryBandit::window_size(double h) const {
  const auto w = static_cast<std::size_t>(std::floor(h));
  return std::min(history_.size(), w);
}

double NonStationaryBandit::window_mean() const {
  const std::size_t w = window_size(horizon_);
  if (w == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = history_.size() - w; i < history_.size(); ++i) sum += history_[i].fitness;
  return sum / static_cast<double>(w);
}

double NonStationaryBandit::preference(int arm) const {
  if (arm < 0 || arm >= arms_) throw std::out_of_range("preference: arm out of range");
  const std::size_t w = window_size(horizon_);
  const double m = window_mean();
  long successes = 0;
  long pulls = 0;
  for (std::size_t i = history_.size() - w; i < history_.size(); ++i) {
    if (history_[i].arm != arm) continue;
    pulls += 1;
    if (history_[i].fitness >= m) successes += 1;
  }
  return (0.5 + successes) / (1.0 + pulls);
}

std::vector<double> NonStationaryBandit::probabilities() const {
  std::vector<double> p(arms_);
  double sum = 0.0;
  for (int a = 0; a < arms_; ++a) {
    p[a] = preference(a);
    sum += p[a];
  }
  for (double& v : p) v /= sum;
  return p;
}

int NonStationaryBandit::sample(Rng& rng) {
  const auto p = probabilities();
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int a = 0; a < arms_; ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  return arms_ - 1;
}

double NonStationaryBandit::regression_loss(double h_candidate, int arm, double fitness) const {
  const std::size_t w = window_size(h_candidate);
  double m = 0.0;
  double arm_sum = 0.0;
  long pulls = 0;
  if (w > 0) {
    for (std::size_t i = history_.size() - w; i < history_.size(); ++i) {
      m += history_[i].fitness;
      if (history_[i].arm == arm) {
        arm_sum += history_[i].fitness;
        pulls += 1;
      }
    }
    m /= static_cast<double>(w);
  }
  const double predicted = (m + arm_sum) / (1.0 + pulls);
  const double err = fitness - predicted;
  return 0.5 * err * err;
}

void NonStationaryBandit::update(int arm, double fitness) {
  if (arm < 0 || arm >= arms_) throw std::out_of_range("update: arm out of range");
  if (!std::isfinite(fitness)) throw std::invalid_argument("update: non-finite fitness");

  const double floor_h = 2.0 * arms_;
  const double shrunk = std::max(floor_h, (1.0 - kShrinkRate) * horizon_);
  const double loss_h = regression_loss(horizon_, arm, fitness);
  const double loss_s = regression_loss(shrunk, arm, fitness);
  if (loss_h > loss_s) {
    const double reduction = (loss_h - loss_s) / loss_h;
    horizon_ = std::max(floor_h, (1.0 - kShrinkRate * reduction) * horizon_);
  } else {
    horizon_ += 1.0;
  }

  history_.push_back({t_++, arm, fitness});
  trim();
}

void NonStationaryBandit::trim() {
  const auto cap = std::min(capacity_cap_,
                            static_cast<std::size_t>(10.0 * std::ceil(horizon_)));
  while (history_.size() > std::max<std::size_t>(cap, static_cast<std::size_t>(horizon_) + 1)) {
    history_.pop_front();
  }
}

void NonStationaryBandit::save(std::ostream& out) const {
  out.precision(17);
  out << "nonstationary-bandit v1\n";
  out << "arms " << arms_ << "\n";
  out << "horizon " << horizon_ << "\n";
  out << "t " << t_ << "\n";
  out << "records " << history_.size() << "\n";
  for (const auto& r : history_) out << r.t << " " << r.arm << " " << r.fitness << "\n";
}

NonStationaryBandit NonStationaryBandit::load(std::istream& in) {
  std::string word, version;
  in >> word >> version;
  if (word != "nonstationary-bandit" || version != "v1") {
    throw std::runtime_error("bandit snapshot: bad header");
  }
  int arms = 0;
  double horizon = 0.0;
  long t = 0;
  std::size_t records = 0;
  in >> word >> arms >> word >> horizon >> word >> t >> word >> records;
  if (!in) throw std::runtime_error("bandit snapshot: truncated header");
  NonStationaryBandit bandit(arms);
  bandit.horizon_ = horizon;
  bandit.t_ = t;
  for (std::size_t i = 0; i < records; ++i) {
    FitnessRecord r;
    in >> r.t >> r.arm >> r.fitness;
    if (!in) throw std::runtime_error("bandit snapshot: truncated records");
    bandit.history_.push_back(r);
  }
  return bandit;
}

FactoredBandit::FactoredBandit(const std::vector<int>& arm_counts) {
  if (arm_counts.empty()) throw std::invalid_argument("FactoredBandit: no dimensions");
  subs_.reserve(arm_counts.size());
  for (int k : arm_counts) subs_.emplace_back(k);
}

std::vector<int> FactoredBandit::sample_arms(Rng& rng) {
  std::vector<int> arms;
  arms.reserve(subs_.size());
  for (auto& sub : subs_) arms.push_back(sub.sample(rng));
  return arms;
}

void FactoredBandit::update(const std::vector<int>& arm_per_dimension, double fitness) {
  if (arm_per_dimension.size() != subs_.size()) {
    throw std::invalid_argument("FactoredBandit::update: dimension mismatch");
  }
  for (std::size_t d = 0; d < subs_.size(); ++d) subs_[d].update(arm_per_dimension[d], fitness);
}

std::vector<double> FactoredBandit::probabilities() const {
  std::vector<double> all;
  for (const auto& sub : subs_) {
    const auto p = sub.probabilities();
    all.insert(all.end(), p.begin(), p.end());
  }
  return all;
}

UniformBandit::UniformBandit(int arm_count) : arms_(arm_count) {
  if (arm_count < 1) throw std::invalid_argument("UniformBandit: need at least one arm");
}

int UniformBandit::sample(Rng& rng) {
  return std::uniform_int_distribution<int>(0, arms_ - 1)(rng);
}

std::vector<double> UniformBandit::probabilities() const {
  return std::vector<double>(arms_, 1.0 / arms_);
}

FixedArmBandit::FixedArmBandit(int arm_count, int arm) : arms_(arm_count), arm_(arm) {
  if (arm < 0 || arm >= arm_count) throw std::invalid_argument("FixedArmBandit: arm out of range");
}

std::vector<double> FixedArmBandit::probabilities() const {
  std::vector<double> p(arms_, 0.0);
  p[arm_] = 1.0;
  return p;
}

UcbBandit::UcbBandit(int arm_count, double exploration)
    : arms_(arm_count), c_(exploration), pulls_(arm_count, 0), means_(arm_count, 0.0) {
  if (arm_count < 1) throw std::invalid_argument("UcbBandit: need at least one arm");
}

int UcbBandit::sample(Rng&) { return best_arm(); }

int UcbBandit::best_arm() const {
  for (int a = 0; a < arms_; ++a) {
    if (pulls_[a] == 0) return a;
  }
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < arms_; ++a) {
    const double value =
        means_[a] + c_ * std::sqrt(std::log(static_cast<double>(total_)) / pulls_[a]);
    if (value > best_value) {
      best = a;
      best_value = value;
    }
  }
  return best;
}

void UcbBandit::update(int arm, double fitness) {
  if (arm < 0 || arm >= arms_) throw std::out_of_range("UcbBandit::update: arm out of range");
  pulls_[arm] += 1;
  total_ += 1;
  means_[arm] += (fitness - means_[arm]) / pulls_[arm];
}

std::vector<double> UcbBandit::probabilities() const {
  // Deterministic index policy; report the one-hot of the next pick.
  std::vector<double> p(arms_, 0.0);
  p[best_arm()] = 1.0;
  return p;
}

ThompsonBandit::ThompsonBandit(int arm_count)
    : arms_(arm_count), pulls_(arm_count, 0), sums_(arm_count, 0.0) {
  if (arm_count < 1) throw std::invalid_argument("ThompsonBandit: need at least one arm");
}

double ThompsonBandit::observation_variance() const {
  if (n_ < 2) return 1.0;
  return std::max(m2_ / (n_ - 1), 1e-6);
}

int ThompsonBandit::sample(Rng& rng) {
  const double obs_var = observation_variance();
  std::normal_distribution<double> normal(0.0, 1.0);
  int best = 0;
  double best_draw = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < arms_; ++a) {
    const double posterior_var = 1.0 / (1.0 + pulls_[a] / obs_var);
    const double posterior_mean = posterior_var * (sums_[a] / obs_var);
    const double draw = posterior_mean + std::sqrt(posterior_var) * normal(rng);
    if (draw > best_draw) {
      best = a;
      best_draw = draw;
    }
  }
  return best;
}

void ThompsonBandit::update(int arm, double fitness) {
  if (arm < 0 || arm >= arms_) throw std::out_of_range("ThompsonBandit::update: arm out of range");
  pulls_[arm] += 1;
  sums_[arm] += fitness;
  n_ += 1;
  const double delta = fitness - mean_;
  mean_ += delta / n_;
  m2_ += delta * (fitness - mean_);
}

std::vector<double> ThompsonBandit::probabilities() const {
  // Posterior argmax probabilities are not in closed form; report pull shares.
  std::vector<double> p(arms_, 1.0 / arms_);
  if (n_ > 0) {
    for (int a = 0; a < arms_; ++a) p[a] = static_cast<double>(pulls_[a]) / n_;
  }
  return p;
}

}  // namespace explore
