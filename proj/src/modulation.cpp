#include "explore/modulation.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "explore/policy.hpp"

namespace explore {

ModulationDim parse_dim(std::string_view name) {
  if (name == "temperature") return ModulationDim::Temperature;
  if (name == "epsilon") return ModulationDim::Epsilon;
  if (name == "repeat") return ModulationDim::Repeat;
  if (name == "optimism") return ModulationDim::Optimism;
  if (name == "bias") return ModulationDim::Bias;
  throw std::invalid_argument("unknown modulation dimension: " + std::string(name));
}

std::string dim_name(ModulationDim dim) {
  switch (dim) {
    case ModulationDim::Temperature: return "temperature";
    case ModulationDim::Epsilon: return "epsilon";
    case ModulationDim::Repeat: return "repeat";
    case ModulationDim::Optimism: return "optimism";
    case ModulationDim::Bias: return "bias";
  }
  throw std::invalid_argument("bad modulation dimension");
}

int ModulationClass::arm_count(int num_actions) const {
  if (dim != ModulationDim::Bias) return static_cast<int>(arms.size());
  int count = 0;
  for (double v : arms) count += (v == 0.0) ? 1 : num_actions;
  return count;
}

void ModulationClass::apply(Modulation& z, int arm, int num_actions) const {
  if (arm < 0 || arm >= arm_count(num_actions)) {
    throw std::out_of_range("ModulationClass::apply: arm out of range");
  }
  switch (dim) {
    case ModulationDim::Temperature: z.temperature = arms[arm]; return;
    case ModulationDim::Epsilon: z.epsilon = arms[arm]; return;
    case ModulationDim::Repeat: z.repeat_prob = arms[arm]; return;
    case ModulationDim::Optimism: z.optimism = arms[arm]; return;
    case ModulationDim::Bias: break;
  }
  // One-hot expansion: a zero arm is the zero vector, a nonzero value v
  // expands into num_actions arms, each offsetting a single action by v.
  z.bias.assign(num_actions, 0.0);
  int index = arm;
  for (double v : arms) {
    if (v == 0.0) {
      if (index == 0) return;
      index -= 1;
    } else {
      if (index < num_actions) {
        z.bias[index] = v;
        return;
      }
      index -= num_actions;
    }
  }
}

std::string ModulationClass::arm_label(int arm, int num_actions) const {
  std::ostringstream out;
  if (dim != ModulationDim::Bias) {
    out << dim_name(dim) << "=" << arms.at(arm);
    return out.str();
  }
  Modulation z;
  apply(z, arm, num_actions);
  out << "bias=[";
  for (int a = 0; a < num_actions; ++a) out << (a ? "," : "") << z.bias[a];
  out << "]";
  return out.str();
}

ModulationClass curated_set(ModulationDim dim) {
  switch (dim) {
    case ModulationDim::Temperature: return {dim, {0.0001, 0.001, 0.01}};
    case ModulationDim::Epsilon: return {dim, {0.0, 0.001, 0.01, 0.1}};
    case ModulationDim::Repeat: return {dim, {0.0, 0.25, 0.5}};
    case ModulationDim::Optimism: return {dim, {-1.0, 0.0, 1.0, 2.0, 10.0}};
    case ModulationDim::Bias: return {dim, {0.0}};
  }
  throw std::invalid_argument("curated_set: bad dimension");
}

ModulationClass extended_set(ModulationDim dim) {
  switch (dim) {
    case ModulationDim::Temperature:
      return {dim, {0.00001, 0.0001, 0.001, 0.01, 0.1, 1.0, 10.0}};
    case ModulationDim::Epsilon:
      return {dim, {0.0, 0.001, 0.01, 0.1, 0.2, 0.5, 1.0}};
    case ModulationDim::Repeat:
      return {dim, {0.0, 0.25, 0.5, 0.66, 0.75, 0.8, 0.9}};
    case ModulationDim::Optimism:
      return {dim, {-10.0, -2.0, -1.0, 0.0, 1.0, 2.0, 10.0}};
    case ModulationDim::Bias:
      return {dim, {-1.0, 0.0, 0.01, 0.1}};
  }
  throw std::invalid_argument("extended_set: bad dimension");
}

Modulation reference_modulation(int num_actions) {
  if (num_actions < 1) throw std::invalid_argument("reference_modulation: need at least one action");
  Modulation z;
  z.temperature = 0.00001;  // tie-breaking between equal-valued actions
  z.epsilon = 0.01;
  z.bias.assign(num_actions, 0.0);
  z.repeat_prob = 0.0;
  z.optimism = 0.0;
  return z;
}

Modulation compose(const ModulationSpace& space, const std::vector<int>& arm_per_class) {
  if (arm_per_class.size() != space.classes.size()) {
    throw std::invalid_argument("compose: arm count does not match class count");
  }
  Modulation z = reference_modulation(space.num_actions);
  for (std::size_t c = 0; c < space.classes.size(); ++c) {
    space.classes[c].apply(z, arm_per_class[c], space.num_actions);
  }
  return z;
}

namespace {

ModulationSpace space_from(int num_actions, ModulationClass (*set)(ModulationDim)) {
  ModulationSpace space;
  space.num_actions = num_actions;
  for (auto dim : {ModulationDim::Temperature, ModulationDim::Epsilon, ModulationDim::Repeat,
                   ModulationDim::Optimism, ModulationDim::Bias}) {
    space.classes.push_back(set(dim));
  }
  return space;
}

}  // namespace

ModulationSpace curated_space(int num_actions) { return space_from(num_actions, curated_set); }
ModulationSpace extended_space(int num_actions) { return space_from(num_actions, extended_set); }

ModulationSpace lavaworld_space() {
  ModulationSpace space;
  space.num_actions = 4;
  space.classes.push_back({ModulationDim::Epsilon, {0.01, 0.1, 1.0}});
  space.classes.push_back({ModulationDim::Temperature, {0.01, 0.1, 1.0}});
  space.classes.push_back({ModulationDim::Bias, {0.0, 0.1}});
  return space;
}

namespace {

struct Probe {
  std::vector<QuantileVector> table;
  std::optional<int> prev_action;
};

std::vector<Probe> make_probes(int count, int num_actions, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, num_actions - 1);
  std::vector<Probe> probes;
  probes.reserve(2 * count);
  for (int i = 0; i < count; ++i) {
    std::vector<QuantileVector> table(num_actions);
    const int n = 5;
    for (auto& q : table) {
      q.values.resize(n);
      for (double& v : q.values) v = normal(rng);
    }
    const int prev = pick(rng);
    probes.push_back({table, std::nullopt});          // first step
    probes.push_back({std::move(table), prev});       // non-first step
  }
  return probes;
}

}  // namespace

std::vector<Modulation> enumerate_flat(const ModulationSpace& space,
                                       int dedup_probe_count,
                                       std::uint64_t seed) {
  if (dedup_probe_count < 1) throw std::invalid_argument("enumerate_flat: need at least one probe");
  for (const auto& cls : space.classes) {
    if (cls.arms.empty()) throw std::invalid_argument("enumerate_flat: empty modulation class");
  }

  // Cartesian product over expanded arm counts.
  std::vector<int> counts;
  long total = 1;
  for (const auto& cls : space.classes) {
    counts.push_back(cls.arm_count(space.num_actions));
    total *= counts.back();
  }
  std::vector<Modulation> raw;
  raw.reserve(total);
  std::vector<int> index(space.classes.size(), 0);
  for (long i = 0; i < total; ++i) {
    raw.push_back(compose(space, index));
    for (std::size_t c = space.classes.size(); c-- > 0;) {
      if (++index[c] < counts[c]) break;
      index[c] = 0;
    }
  }

  const auto probes = make_probes(dedup_probe_count, space.num_actions, seed);
  std::vector<std::vector<double>> signatures;
  signatures.reserve(raw.size());
  std::vector<Modulation> unique;
  for (const auto& z : raw) {
    std::vector<double> sig;
    sig.reserve(probes.size() * space.num_actions);
    for (const auto& probe : probes) {
      for (double p : action_distribution(probe.table, z, probe.prev_action)) sig.push_back(p);
    }
    bool duplicate = false;
    for (const auto& seen : signatures) {
      bool same = true;
      for (std::size_t k = 0; k < sig.size(); ++k) {
        if (std::abs(sig[k] - seen[k]) > 1e-12) {
          same = false;
          break;
        }
      }
      if (same) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      signatures.push_back(std::move(sig));
      unique.push_back(z);
    }
  }
  return unique;
}

ModulationSpace load_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open modulation set file: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  ModulationSpace space;
  space.num_actions = doc.value("num_actions", 0);
  if (space.num_actions < 1) throw std::runtime_error("modulation set file must give num_actions >= 1: " + path);
  for (const auto& name : {"temperature", "epsilon", "repeat", "optimism", "bias"}) {
    if (!doc.contains(name)) continue;
    ModulationClass cls;
    cls.dim = parse_dim(name);
    cls.arms = doc[name].get<std::vector<double>>();
    if (cls.arms.empty()) throw std::runtime_error(std::string("empty arm list for ") + name + " in " + path);
    space.classes.push_back(std::move(cls));
  }
  if (space.classes.empty()) throw std::runtime_error("modulation set file defines no dimensions: " + path);
  return space;
}

ModulationSpace resolve_space(const std::string& selector, int num_actions) {
  if (selector == "curated") return curated_space(num_actions);
  if (selector == "extended") return extended_space(num_actions);
  if (selector == "lavaworld") return lavaworld_space();
  return load_space(selector);
}

}  // namespace explore
