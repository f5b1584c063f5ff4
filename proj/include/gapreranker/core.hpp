#pragma once
// Core domain types for the gap reranker: aspect keys, candidates,
// per-query GMV-share models, rerank profiles and sessions.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gapreranker {

inline constexpr double kShareSumTolerance = 1e-9;
inline constexpr double kDefaultAlpha = 0.5;

// Input or data-format problem; maps to exit code 1 in the CLI.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration (profile, workload config); maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// (aspect, value) pair, e.g. ("condition", "new"). Case-sensitive.
struct AspectValueKey {
  std::string aspect;
  std::string value;

  auto operator<=>(const AspectValueKey&) const = default;
};

struct Candidate {
  std::string item_id;
  double best_match_score = 0.0;
  // At most one value per aspect; aspects the item lacks are absent.
  std::map<std::string, std::string> aspects;

  std::optional<std::string> aspect_value(const std::string& aspect) const {
    auto it = aspects.find(aspect);
    if (it == aspects.end()) return std::nullopt;
    return it->second;
  }
};

// Per-query GMV-share distributions over aspect values. The shares are the
// weights of the bridge score; each per-aspect distribution sums to 1.
struct QueryAspectModel {
  std::string query;
  std::map<AspectValueKey, double> shares;
  double alpha = kDefaultAlpha;
  std::uint64_t event_count = 0;

  double share(const AspectValueKey& key) const {
    auto it = shares.find(key);
    return it == shares.end() ? 0.0 : it->second;
  }

  // Aspects that have at least one share entry, in key order.
  std::vector<std::string> modeled_aspects() const {
    std::vector<std::string> out;
    for (const auto& [key, _] : shares) {
      if (out.empty() || out.back() != key.aspect) out.push_back(key.aspect);
    }
    return out;
  }

  std::vector<AspectValueKey> keys_for_aspect(const std::string& aspect) const {
    std::vector<AspectValueKey> out;
    for (const auto& [key, _] : shares) {
      if (key.aspect == aspect) out.push_back(key);
    }
    return out;
  }

  bool operator==(const QueryAspectModel&) const = default;
};

enum class TieRule { best_match_then_original_rank };

// Reranker configuration. k positions are refilled from a pool of the top m
// production-ranked candidates; k < m is a hard precondition.
struct Profile {
  int k = 20;
  int m = 50;
  std::optional<double> alpha_override;
  std::vector<std::string> aspects;
  TieRule tie_rule = TieRule::best_match_then_original_rank;

  // alpha_override beats model alpha beats the global default.
  double resolve_alpha(const QueryAspectModel* model) const {
    if (alpha_override) return *alpha_override;
    if (model) return model->alpha;
    return kDefaultAlpha;
  }
};

struct Session {
  std::string query;
  std::vector<Candidate> candidates;  // descending best_match_score
  std::set<std::string> purchased_item_ids;
};

struct ValidationResult {
  std::vector<std::string> issues;

  bool ok() const { return issues.empty(); }
  std::string message() const {
    std::string out;
    for (const auto& issue : issues) {
      if (!out.empty()) out += "; ";
      out += issue;
    }
    return out;
  }
};

// Lowercase, trim, collapse internal whitespace. Queries are matched by
// exact string after this normalization.
inline std::string normalize_query(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

inline ValidationResult validate_model(const QueryAspectModel& model) {
  ValidationResult result;
  if (!(model.alpha > 0.0 && model.alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "alpha out of range (0,1]: " << model.alpha;
    result.issues.push_back(msg.str());
  }
  std::map<std::string, double> sums;
  for (const auto& [key, share] : model.shares) {
    if (key.aspect.empty() || key.value.empty()) {
      result.issues.push_back("empty aspect or value identifier");
    }
    if (!(share >= 0.0 && share <= 1.0) || !std::isfinite(share)) {
      std::ostringstream msg;
      msg << "share out of range [0,1] for " << key.aspect << "=" << key.value
          << ": " << share;
      result.issues.push_back(msg.str());
    }
    sums[key.aspect] += share;
  }
  for (const auto& [aspect, sum] : sums) {
    if (std::abs(sum - 1.0) > kShareSumTolerance) {
      std::ostringstream msg;
      msg << "shares for aspect '" << aspect << "' sum to " << sum
          << ", expected 1";
      result.issues.push_back(msg.str());
    }
  }
  return result;
}

inline ValidationResult validate_profile(const Profile& profile) {
  ValidationResult result;
  if (profile.k < 1) {
    result.issues.push_back("k must be >= 1, got " +
                            std::to_string(profile.k));
  }
  if (profile.k >= profile.m) {
    result.issues.push_back("k must be < m, got k=" +
                            std::to_string(profile.k) +
                            " m=" + std::to_string(profile.m));
  }
  if (profile.aspects.empty()) {
    result.issues.push_back("aspect list must be non-empty");
  }
  return result;
}

}  // namespace gapreranker
