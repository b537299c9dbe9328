#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "explore/harness.hpp"

namespace explore {

struct Outcome {
  std::string game;
  int seed = 0;
  std::string variant;
  double score = 0.0;  // mean return over the final 10% of the run
};

struct RankReport {
  std::map<std::string, double> overall;                          // variant -> [0,1]
  std::map<std::string, std::map<std::string, double>> per_game;  // game -> variant -> [0,1]
};

/// Normalized relative rank: per game, jointly rank all outcomes (average
/// ranks on ties), average per variant, scale so a variant whose seeds hold
/// the top N joint positions scores 1 and the always-worst scores 0, then
/// average across games.
RankReport relative_rank(const std::vector<Outcome>& outcomes);

/// Normalized final score of the variant picked on early evidence:
/// (E[G_z0] - E[G_z-]) / (E[G_z+] - E[G_z-]). 1 means no loss; figure
/// outputs additionally report 1 - value labeled "drop".
double performance_drop(const std::string& early_best,
                        const std::map<std::string, double>& final_means);

/// c_k = 1 - prod_{i<=k} (1 - p_i).
std::vector<double> cumulative_success_curve(std::span<const double> per_episode_p);

void emit_csv(const RunLog& log, const std::filesystem::path& path);
RunLog parse_csv(const std::filesystem::path& path);

std::vector<Outcome> load_outcomes_csv(const std::filesystem::path& path);
std::vector<Outcome> load_outcomes_dir(const std::filesystem::path& dir);
void emit_outcomes_csv(const std::vector<Outcome>& outcomes, const std::filesystem::path& path);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static line plot, one polyline per series; byte-deterministic for
/// identical inputs.
void emit_svg_lineplot(const std::vector<Series>& series, const std::filesystem::path& path,
                       const std::string& title = "", const std::string& x_label = "",
                       const std::string& y_label = "");

}  // namespace explore
