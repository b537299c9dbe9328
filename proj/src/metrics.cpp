#include "explore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace explore {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void io_error(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(what + ": " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

}  // namespace

RankReport relative_rank(const std::vector<Outcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("relative_rank: no outcomes");

  std::set<std::string> variants;
  std::set<std::string> games;
  for (const auto& o : outcomes) {
    variants.insert(o.variant);
    games.insert(o.game);
  }
  if (variants.size() < 2) throw std::invalid_argument("relative_rank: need at least two variants");

  // Every (game, variant) must contribute the same number of seeds.
  long seeds = -1;
  for (const auto& game : games) {
    for (const auto& variant : variants) {
      long count = 0;
      for (const auto& o : outcomes) {
        if (o.game == game && o.variant == variant) count += 1;
      }
      if (seeds < 0) seeds = count;
      if (count != seeds || count == 0) {
        throw std::invalid_argument("relative_rank: mismatched seed counts for " + game + "/" + variant);
      }
    }
  }

  RankReport report;
  for (const auto& variant : variants) report.overall[variant] = 0.0;

  for (const auto& game : games) {
    std::vector<const Outcome*> joint;
    for (const auto& o : outcomes) {
      if (o.game == game) joint.push_back(&o);
    }
    // Rank 1 = best score; ties take the average of their rank span.
    std::stable_sort(joint.begin(), joint.end(),
                     [](const Outcome* a, const Outcome* b) { return a->score > b->score; });
    std::map<std::string, double> rank_sum;
    std::size_t i = 0;
    while (i < joint.size()) {
      std::size_t j = i;
      while (j < joint.size() && joint[j]->score == joint[i]->score) ++j;
      const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
      for (std::size_t k = i; k < j; ++k) rank_sum[joint[k]->variant] += mid_rank;
      i = j;
    }
    const double n = static_cast<double>(seeds);
    const double n_plus = static_cast<double>(joint.size()) - n;
    for (const auto& variant : variants) {
      const double avg_rank = rank_sum[variant] / n;
      const double normalized = 1.0 - (avg_rank - (n + 1.0) / 2.0) / n_plus;
      report.per_game[game][variant] = normalized;
      report.overall[variant] += normalized / static_cast<double>(games.size());
    }
  }
  return report;
}

double performance_drop(const std::string& early_best,
                        const std::map<std::string, double>& final_means) {
  if (final_means.size() < 2) throw std::invalid_argument("performance_drop: need at least two variants");
  const auto it = final_means.find(early_best);
  if (it == final_means.end()) {
    throw std::invalid_argument("performance_drop: unknown early-best variant " + early_best);
  }
  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [_, mean] : final_means) {
    best = std::max(best, mean);
    worst = std::min(worst, mean);
  }
  if (best == worst) throw std::invalid_argument("performance_drop: all variants tie");
  return (it->second - worst) / (best - worst);
}

std::vector<double> cumulative_success_curve(std::span<const double> per_episode_p) {
  std::vector<double> out;
  out.reserve(per_episode_p.size());
  double survive = 1.0;
  for (double p : per_episode_p) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("cumulative_success_curve: probability out of range");
    }
    survive *= 1.0 - p;
    out.push_back(1.0 - survive);
  }
  return out;
}

void emit_csv(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error(path, "cannot open CSV for writing");
  out << "episode,env_steps,variant,seed,fitness,eval_return,horizon";
  for (std::size_t i = 0; i < log.arm_columns.size(); ++i) out << ",p" << i;
  out << "\n";
  for (const auto& row : log.rows) {
    out << row.episode << "," << row.env_steps << "," << log.variant << "," << log.seed << ","
        << fmt(row.fitness) << "," << fmt(row.eval_return) << "," << fmt(row.horizon);
    for (double p : row.arm_probs) out << "," << fmt(p);
    out << "\n";
  }
  if (!out) io_error(path, "failed writing CSV");
}

RunLog parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "cannot open CSV for reading");
  std::string line;
  if (!std::getline(in, line)) io_error(path, "empty CSV");
  const auto header = split(line, ',');
  if (header.size() < 7 || header[0] != "episode") io_error(path, "bad CSV header");

  RunLog log;
  for (std::size_t i = 7; i < header.size(); ++i) log.arm_columns.push_back(header[i]);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) io_error(path, "ragged CSV row");
    RunLogRow row;
    row.episode = std::stol(fields[0]);
    row.env_steps = std::stol(fields[1]);
    log.variant = fields[2];
    log.seed = std::stoull(fields[3]);
    row.fitness = std::stod(fields[4]);
    row.eval_return = std::stod(fields[5]);
    row.horizon = std::stod(fields[6]);
    for (std::size_t i = 7; i < fields.size(); ++i) row.arm_probs.push_back(std::stod(fields[i]));
    log.rows.push_back(std::move(row));
  }
  return log;
}

std::vector<Outcome> load_outcomes_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "cannot open outcomes CSV");
  std::string line;
  if (!std::getline(in, line)) io_error(path, "empty outcomes CSV");
  const auto header = split(line, ',');
  if (header.size() != 4 || header[0] != "game") io_error(path, "expected header game,seed,variant,score");
  std::vector<Outcome> outcomes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 4) io_error(path, "ragged outcomes row");
    outcomes.push_back({fields[0], std::stoi(fields[1]), fields[2], std::stod(fields[3])});
  }
  return outcomes;
}

std::vector<Outcome> load_outcomes_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Outcome> all;
  for (const auto& file : files) {
    const auto outcomes = load_outcomes_csv(file);
    all.insert(all.end(), outcomes.begin(), outcomes.end());
  }
  return all;
}

void emit_outcomes_csv(const std::vector<Outcome>& outcomes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error(path, "cannot open outcomes CSV for writing");
  out << "game,seed,variant,score\n";
  for (const auto& o : outcomes) {
    out << o.game << "," << o.seed << "," << o.variant << "," << fmt(o.score) << "\n";
  }
  if (!out) io_error(path, "failed writing outcomes CSV");
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void emit_svg_lineplot(const std::vector<Series>& series, const std::filesystem::path& path,
                       const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
  const double width = 800, height = 500;
  const double left = 70, right = 30, top = 40, bottom = 60;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool any = false;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        any = true;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (width - left - right); };
  const auto sy = [&](double y) { return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom); };

  std::ofstream out(path, std::ios::binary);
  if (!out) io_error(path, "cannot open SVG for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
  }
  // axes
  out << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << left << "\" y=\"" << height - bottom + 20
      << "\" text-anchor=\"middle\" font-size=\"12\">" << fmt2(x_min) << "</text>\n";
  out << "<text x=\"" << width - right << "\" y=\"" << height - bottom + 20
      << "\" text-anchor=\"middle\" font-size=\"12\">" << fmt2(x_max) << "</text>\n";
  out << "<text x=\"" << left - 8 << "\" y=\"" << height - bottom
      << "\" text-anchor=\"end\" font-size=\"12\">" << fmt2(y_min) << "</text>\n";
  out << "<text x=\"" << left - 8 << "\" y=\"" << top + 4
      << "\" text-anchor=\"end\" font-size=\"12\">" << fmt2(y_max) << "</text>\n";
  if (!x_label.empty()) {
    out << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 16
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  }
  if (!y_label.empty()) {
    out << "<text x=\"18\" y=\"" << (top + height - bottom) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << (top + height - bottom) / 2 << ")\">" << y_label << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!series[s].x.empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series[s].x.size(); ++i) {
        out << fmt2(sx(series[s].x[i])) << "," << fmt2(sy(series[s].y[i])) << " ";
      }
      out << "\"/>\n";
    }
    out << "<text x=\"" << width - right - 150 << "\" y=\"" << top + 16 * (s + 1)
        << "\" font-size=\"12\" fill=\"" << color << "\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) io_error(path, "failed writing SVG");
}

}  // namespace explore
