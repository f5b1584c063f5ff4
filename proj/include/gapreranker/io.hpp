#pragma once
// File formats for the CLI: line-delimited session records, flat key=value
// profile files, and evaluation report tables.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapreranker/core.hpp"
#include "gapreranker/metrics.hpp"

namespace gapreranker {

inline std::string session_to_line(const Session& session) {
  nlohmann::json record;
  record["query"] = session.query;
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& candidate : session.candidates) {
    nlohmann::json entry;
    entry["item_id"] = candidate.item_id;
    entry["best_match_score"] = candidate.best_match_score;
    entry["aspects"] = candidate.aspects;
    candidates.push_back(std::move(entry));
  }
  record["candidates"] = std::move(candidates);
  record["purchased"] = session.purchased_item_ids;
  return record.dump();
}

inline Session session_from_line(const std::string& line,
                                 std::size_t line_number = 0) {
  const std::string where = "line " + std::to_string(line_number);
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": not a valid session record: " + e.what());
  }
  Session session;
  try {
    session.query = record.at("query").get<std::string>();
    for (const auto& entry : record.at("candidates")) {
      Candidate candidate;
      candidate.item_id = entry.at("item_id").get<std::string>();
      candidate.best_match_score = entry.at("best_match_score").get<double>();
      for (const auto& [aspect, value] : entry.at("aspects").items()) {
        candidate.aspects[aspect] = value.get<std::string>();
      }
      session.candidates.push_back(std::move(candidate));
    }
    for (const auto& id : record.value("purchased", nlohmann::json::array())) {
      session.purchased_item_ids.insert(id.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  return session;
}

inline std::vector<Session> read_sessions(std::istream& in) {
  std::vector<Session> sessions;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    line_number += 1;
    if (line.empty()) continue;
    sessions.push_back(session_from_line(line, line_number));
  }
  return sessions;
}

inline std::vector<Session> read_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open sessions file: " + path);
  return read_sessions(in);
}

inline void write_sessions(const std::vector<Session>& sessions,
                           std::ostream& out) {
  for (const auto& session : sessions) out << session_to_line(session) << "\n";
}

inline void write_sessions(const std::vector<Session>& sessions,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path);
  write_sessions(sessions, out);
}

// Profile plus harness settings carried by a profile file.
struct ProfileFile {
  Profile profile;
  std::vector<double> sweep;
  double smoothing = 0.0;
  std::optional<std::string> model_path;
  std::optional<std::string> sessions_path;
  std::optional<std::string> out_path;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("profile: bad number for '" + key + "': " + value);
  }
}

inline int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("profile: bad integer for '" + key + "': " + value);
  }
}

}  // namespace detail

// Flat "key = value" lines, '#' starts a comment. Recognized keys:
//   k, m, alpha, aspects, tie_rule, sweep, smoothing, model, sessions, out
inline ProfileFile parse_profile(std::istream& in) {
  ProfileFile file;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    line_number += 1;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("profile line " + std::to_string(line_number) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "k") {
      file.profile.k = detail::parse_int(key, value);
    } else if (key == "m") {
      file.profile.m = detail::parse_int(key, value);
    } else if (key == "alpha") {
      file.profile.alpha_override = detail::parse_double(key, value);
    } else if (key == "aspects") {
      file.profile.aspects = detail::split_list(value);
    } else if (key == "tie_rule") {
      if (value != "best_match_then_original_rank") {
        throw ConfigError("profile: unknown tie_rule '" + value + "'");
      }
      file.profile.tie_rule = TieRule::best_match_then_original_rank;
    } else if (key == "sweep") {
      file.sweep.clear();
      for (const auto& item : detail::split_list(value)) {
        file.sweep.push_back(detail::parse_double(key, item));
      }
    } else if (key == "smoothing") {
      file.smoothing = detail::parse_double(key, value);
    } else if (key == "model") {
      file.model_path = value;
    } else if (key == "sessions") {
      file.sessions_path = value;
    } else if (key == "out") {
      file.out_path = value;
    } else {
      throw ConfigError("profile: unknown key '" + key + "'");
    }
  }
  if (file.profile.alpha_override &&
      !(*file.profile.alpha_override > 0.0 &&
        *file.profile.alpha_override <= 1.0)) {
    throw ConfigError("profile: alpha must be in (0,1]");
  }
  for (double alpha : file.sweep) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw ConfigError("profile: sweep alpha must be in (0,1]");
    }
  }
  return file;
}

inline ProfileFile parse_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profile: " + path);
  return parse_profile(in);
}

inline void write_report_tsv(const std::vector<EvalReport>& reports,
                             std::ostream& out) {
  out << "alpha\tavg_gap_baseline\tavg_gap_reranked\tgap_difference\t"
         "mrr_baseline\tmrr_reranked\tmrr_shift\tp_value\n";
  for (const auto& r : reports) {
    out << std::setprecision(10) << r.alpha << '\t' << r.avg_gap_baseline
        << '\t' << r.avg_gap_reranked << '\t' << r.gap_difference << '\t'
        << r.mrr_baseline << '\t' << r.mrr_reranked << '\t' << r.mrr_shift
        << '\t' << r.p_value << '\n';
  }
}

inline void print_report_table(const std::vector<EvalReport>& reports,
                               std::ostream& out) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-12s %-12s %-10s %-10s %-10s %-10s %-8s",
                "alpha", "gap_base", "gap_rerank", "gap_diff", "mrr_base",
                "mrr_rerank", "mrr_shift", "p_value");
  out << line << "\n";
  for (const auto& r : reports) {
    char gap_pct[16], mrr_pct[16];
    std::snprintf(gap_pct, sizeof(gap_pct), "%.2f%%", 100.0 * r.gap_difference);
    std::snprintf(mrr_pct, sizeof(mrr_pct), "%+.2f%%", 100.0 * r.mrr_shift);
    std::snprintf(line, sizeof(line),
                  "%-6.2f %-12.6f %-12.6f %-10s %-10.6f %-10.6f %-10s %-8.4f%s",
                  r.alpha, r.avg_gap_baseline, r.avg_gap_reranked, gap_pct,
                  r.mrr_baseline, r.mrr_reranked, mrr_pct, r.p_value,
                  r.degenerate_baseline ? "  (degenerate baseline)" : "");
    out << line << "\n";
  }
}

inline void write_gap_curve(const std::vector<double>& curve,
                            std::ostream& out) {
  out << "position\tavg_gap\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << (i + 1) << '\t' << std::setprecision(10) << curve[i] << '\n';
  }
}

}  // namespace gapreranker
