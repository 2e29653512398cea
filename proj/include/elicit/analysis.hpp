#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "elicit/trace.hpp"

namespace elicit {

// ---------------------------------------------------------------------------
// Report rows
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string group_key;  // domain name, or budget value as text
  std::size_t n_episodes = 0;
  double mean_score = 0.0;
  double stderr_score = 0.0;
};

namespace detail {

struct Accumulator {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  }
  double stderr_of_mean() const {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
};

}  // namespace detail

/// Mean judge score per domain tag. Traces without a score are skipped with a
/// warning; groups that end up empty are omitted with a warning.
inline std::vector<ReportRow> domain_breakdown(const TraceStore& store,
                                               std::vector<std::string>* warnings = nullptr) {
  std::map<std::string, detail::Accumulator> groups;
  std::map<std::string, std::size_t> unscored;
  for (const auto& trace : store.traces) {
    if (!trace.judge_score) {
      ++unscored[trace.domain];
      continue;
    }
    groups[trace.domain].add(*trace.judge_score);
  }
  if (warnings) {
    for (const auto& [domain, count] : unscored) {
      if (groups.count(domain))
        warnings->push_back("domain '" + domain + "': skipped " + std::to_string(count) +
                            " unscored trace(s)");
      else
        warnings->push_back("domain '" + domain + "': no scored traces, row omitted");
    }
  }
  std::vector<ReportRow> rows;
  for (const auto& [domain, acc] : groups)
    rows.push_back(
        {domain, acc.values.size(), acc.mean(), acc.stderr_of_mean()});
  return rows;
}

/// Mean judge score keyed by turn budget, in increasing budget order.
inline std::vector<ReportRow> score_by_turn(const TraceStore& store) {
  std::map<int, detail::Accumulator> groups;
  for (const auto& trace : store.traces)
    if (trace.judge_score) groups[trace.budget].add(*trace.judge_score);
  std::vector<ReportRow> rows;
  for (const auto& [budget, acc] : groups)
    rows.push_back({std::to_string(budget), acc.values.size(), acc.mean(), acc.stderr_of_mean()});
  return rows;
}

// ---------------------------------------------------------------------------
// Evidence-position density
// ---------------------------------------------------------------------------

enum class PositionOrigin { explicit_region, procedure, output_spec };

inline const char* to_string(PositionOrigin o) {
  switch (o) {
    case PositionOrigin::explicit_region: return "explicit";
    case PositionOrigin::procedure: return "procedure";
    case PositionOrigin::output_spec: return "output_spec";
  }
  return "?";
}

struct PositionSample {
  double normalized_position = 0.0;  // index / (U - 1); 0 when U == 1
  PositionOrigin origin = PositionOrigin::explicit_region;
};

/// Every cited index of every turn, mapped to its normalized document
/// position. Origin is recovered from the per-trace sentence block counts.
inline std::vector<PositionSample> collect_position_samples(const TraceStore& store) {
  std::vector<PositionSample> samples;
  for (const auto& trace : store.traces) {
    const int universe = trace.meta.universe_size;
    const int k = trace.meta.explicit_count;
    const int p = trace.meta.procedure_count;
    for (const auto& turn : trace.turns) {
      for (int idx : turn.answer.cited_indices) {
        PositionSample s;
        s.normalized_position =
            universe > 1 ? static_cast<double>(idx) / static_cast<double>(universe - 1) : 0.0;
        s.origin = idx < k ? PositionOrigin::explicit_region
                 : idx < k + p ? PositionOrigin::procedure
                               : PositionOrigin::output_spec;
        samples.push_back(s);
      }
    }
  }
  return samples;
}

/// Histogram over [0, 1]; position 1.0 lands in the last bin. The returned
/// densities sum to 1 (all zeros when there are no samples).
inline std::vector<double> position_density(const std::vector<PositionSample>& samples, int bins) {
  if (bins < 2) throw std::invalid_argument("position_density: bins must be >= 2");
  std::vector<double> density(static_cast<std::size_t>(bins), 0.0);
  if (samples.empty()) return density;
  for (const auto& s : samples) {
    int b = static_cast<int>(s.normalized_position * bins);
    if (b >= bins) b = bins - 1;
    if (b < 0) b = 0;
    density[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& d : density) d /= static_cast<double>(samples.size());
  return density;
}

inline std::vector<double> evidence_position_histogram(const TraceStore& store, int bins) {
  return position_density(collect_position_samples(store), bins);
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string format_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

inline void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open report file for writing: " + path);
  out << "group_key,n_episodes,mean_score,stderr\n";
  for (const auto& r : rows)
    out << csv_escape(r.group_key) << "," << r.n_episodes << "," << format_double(r.mean_score)
        << "," << format_double(r.stderr_score) << "\n";
  if (!out) throw std::runtime_error("report write failed: " + path);
}

inline void write_density_csv(const std::vector<double>& density, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open report file for writing: " + path);
  const int bins = static_cast<int>(density.size());
  out << "bin_index,bin_start,bin_end,density\n";
  for (int b = 0; b < bins; ++b) {
    out << b << "," << format_double(static_cast<double>(b) / bins, 4) << ","
        << format_double(static_cast<double>(b + 1) / bins, 4) << ","
        << format_double(density[static_cast<std::size_t>(b)], 8) << "\n";
  }
  if (!out) throw std::runtime_error("report write failed: " + path);
}

}  // namespace elicit
