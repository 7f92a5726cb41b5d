#include "report.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace cellnas {

namespace {

constexpr const char* kMissing = "—";

std::string trim_decimals(std::string s) {
  if (s.find('.') == std::string::npos) return s;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Display width in code points, so "—" and "±" count as one column.
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string pad(const std::string& s, std::size_t width) {
  const auto w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

struct Group {
  std::string label;
  std::vector<std::string> headers;
};

// Columns inside a group are separated by two spaces, groups by " | ".
std::string render_grouped(const std::vector<Group>& groups,
                           const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& g : groups) {
    for (const auto& h : g.headers) widths.push_back(display_width(h));
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) {
      widths[c] = std::max(widths[c], display_width(row[c]));
    }
  }
  // Widen the last column of a group if the group label is longer.
  std::size_t col = 0;
  std::vector<std::size_t> group_width;
  for (const auto& g : groups) {
    std::size_t w = 0;
    for (std::size_t k = 0; k < g.headers.size(); ++k) w += widths[col + k] + (k ? 2 : 0);
    if (display_width(g.label) > w) {
      widths[col + g.headers.size() - 1] += display_width(g.label) - w;
      w = display_width(g.label);
    }
    group_width.push_back(w);
    col += g.headers.size();
  }

  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    std::size_t c = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g) out += " | ";
      for (std::size_t k = 0; k < groups[g].headers.size(); ++k, ++c) {
        if (k) out += "  ";
        out += pad(c < cells.size() ? cells[c] : "", widths[c]);
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };

  std::string out;
  {
    std::string top;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (g) top += " | ";
      top += pad(groups[g].label, group_width[g]);
    }
    while (!top.empty() && top.back() == ' ') top.pop_back();
    out += top + "\n";
  }
  std::vector<std::string> headers;
  for (const auto& g : groups) headers.insert(headers.end(), g.headers.begin(), g.headers.end());
  const std::string header_line = line(headers);
  out += header_line;
  out += std::string(display_width(header_line) - 1, '-') + "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string accuracy_cell(const TrialRecord& t) {
  if (t.status != EvalStatus::ok || !t.accuracy) return kMissing;
  std::string s = format_percent(*t.accuracy);
  if (auto it = t.aux.find("spread"); it != t.aux.end() && it->second > 0.0) {
    s += "±" + format_percent(it->second);
  }
  return s;
}

std::string score_cell(const TrialRecord& t) {
  auto it = t.aux.find("score");
  return it == t.aux.end() ? kMissing : general(it->second);
}

std::string csv_optional(const std::optional<double>& v) { return v ? general(*v) : ""; }

}  // namespace

std::string format_percent(double fraction) { return trim_decimals(fixed(fraction * 100.0, 2)); }

std::string best_row(const RunReport& report) {
  const TrialRecord* best = report.best_trial();
  if (!best) return kMissing;
  const std::string value = best->accuracy ? format_percent(*best->accuracy) : general(best->fitness);
  return std::to_string(best->candidate.conv_cells) + " " + std::to_string(best->candidate.dense_cells) +
         " " + best->size_string + " " + value;
}

std::string render_results_table(const RunReport& report) {
  std::vector<Group> groups{
      {"Model params", {"Conv cells", "Dense cells", "Size"}},
      {"Evaluating", {"Accuracy %", "Score", "Fitness", "Status"}},
      {"Timing", {"Time (s)"}},
  };
  std::vector<std::vector<std::string>> rows;
  for (const auto& t : report.trials) {
    rows.push_back({std::to_string(t.candidate.conv_cells), std::to_string(t.candidate.dense_cells),
                    t.size_string, accuracy_cell(t), score_cell(t), general(t.fitness),
                    to_string(t.status) + (t.cached ? " (cached)" : ""), fixed(t.wall_time_seconds, 3)});
  }
  std::ostringstream os;
  os << report.strategy << " (seed " << report.seed << "): " << report.trials.size() << " trials, "
     << report.unique_evaluations << " unique evaluations\n";
  os << render_grouped(groups, rows);
  os << "Best: " << best_row(report) << "\n";
  return os.str();
}

std::string render_results_csv(const RunReport& report) {
  std::ostringstream os;
  os << "trial_index,conv,dense,genome,generation,size,params,accuracy,spread,score,fitness,status,cached,"
        "wall_time_seconds\n";
  for (const auto& t : report.trials) {
    auto aux = [&](const char* key) -> std::optional<double> {
      auto it = t.aux.find(key);
      return it == t.aux.end() ? std::nullopt : std::optional<double>(it->second);
    };
    os << t.trial_index << ',' << t.candidate.conv_cells << ',' << t.candidate.dense_cells << ','
       << (t.genome ? t.genome->to_string() : "") << ','
       << (t.generation ? std::to_string(*t.generation) : "") << ',' << t.size_string << ','
       << (t.param_count ? std::to_string(*t.param_count) : "") << ',' << csv_optional(t.accuracy) << ','
       << csv_optional(aux("spread")) << ',' << csv_optional(aux("score")) << ',' << general(t.fitness)
       << ',' << to_string(t.status) << ',' << (t.cached ? "true" : "false") << ','
       << fixed(t.wall_time_seconds, 6) << '\n';
  }
  return os.str();
}

std::string compare(std::span<const RunReport> reports) {
  std::vector<std::size_t> order(reports.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return reports[a].strategy < reports[b].strategy; });

  std::ostringstream os;
  os << "Strategy comparison\n===================\n";
  for (std::size_t i : order) os << "\n" << render_results_table(reports[i]);

  std::vector<Group> groups{
      {"Run", {"Strategy", "Trials", "Unique evaluations"}},
      {"Best model", {"Conv cells", "Dense cells", "Size", "Accuracy %", "Fitness"}},
      {"Timing", {"Total time (s)"}},
  };
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i : order) {
    const auto& r = reports[i];
    const TrialRecord* b = r.best_trial();
    rows.push_back({r.strategy, std::to_string(r.total_evaluations), std::to_string(r.unique_evaluations),
                    b ? std::to_string(b->candidate.conv_cells) : kMissing,
                    b ? std::to_string(b->candidate.dense_cells) : kMissing, b ? b->size_string : kMissing,
                    b && b->accuracy ? format_percent(*b->accuracy) : kMissing,
                    b ? general(b->fitness) : kMissing, fixed(r.total_wall_time_seconds, 3)});
  }
  os << "\nSummary\n" << render_grouped(groups, rows);
  return os.str();
}

}  // namespace cellnas
