#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace explore {

/// One point in the behaviour-modulation space. Held fixed for a whole
/// episode; every field reshapes the same underlying value table into a
/// different behaviour policy.
struct Modulation {
  double temperature = 1e-5;       // softmax temperature T > 0
  double epsilon = 0.0;            // uniform-mixture weight in [0,1]
  std::vector<double> bias;        // per-action logit offsets, length |A|
  double repeat_prob = 0.0;        // previous-action repeat probability in [0,1)
  double optimism = 0.0;           // quantile-aggregation exponent
};

enum class ModulationDim { Temperature, Epsilon, Repeat, Optimism, Bias };

ModulationDim parse_dim(std::string_view name);
std::string dim_name(ModulationDim dim);

/// One factored axis: an ordered set of scalar arm values for a single
/// dimension. Bias arms are scalars that expand to one-hot offset vectors
/// (plus the zero vector for the value 0).
struct ModulationClass {
  ModulationDim dim = ModulationDim::Epsilon;
  std::vector<double> arms;

  // Number of concrete arms once bias scalars are expanded one-hot.
  int arm_count(int num_actions) const;
  // Writes the given arm into z. For bias, arm indexes the expanded family.
  void apply(Modulation& z, int arm, int num_actions) const;
  std::string arm_label(int arm, int num_actions) const;
};

struct ModulationSpace {
  std::vector<ModulationClass> classes;
  int num_actions = 0;
  std::vector<Modulation> flat;  // optional flat enumeration
};

ModulationClass curated_set(ModulationDim dim);
ModulationClass extended_set(ModulationDim dim);

/// The default setting: near-greedy softmax with 1% uniform mixture.
Modulation reference_modulation(int num_actions);

/// Compose a full modulation from one arm index per class, starting from the
/// reference values for any dimension the space does not cover.
Modulation compose(const ModulationSpace& space, const std::vector<int>& arm_per_class);

ModulationSpace curated_space(int num_actions);
ModulationSpace extended_space(int num_actions);
// epsilon, T in {0.01, 0.1, 1}; bias in {0, +0.1 one-hot}; 4 actions.
ModulationSpace lavaworld_space();

/// Cartesian product of all class arms with behavioural duplicates removed.
/// Two modulations are duplicates iff their action distributions agree to
/// within 1e-12 on every probe (random quantile tables, random previous
/// actions, first-step and non-first-step).
std::vector<Modulation> enumerate_flat(const ModulationSpace& space,
                                       int dedup_probe_count,
                                       std::uint64_t seed);

/// Reads per-dimension arm lists from a JSON file:
///   {"num_actions": 4, "epsilon": [0, 0.01], "temperature": [...], ...}
/// Bias lists expand per the one-hot rule. Missing dimensions are omitted
/// from the space (their reference value applies).
ModulationSpace load_space(const std::string& path);

/// Resolves "curated" | "extended" | "lavaworld" | <path>.
ModulationSpace resolve_space(const std::string& selector, int num_actions);

}  // namespace explore
