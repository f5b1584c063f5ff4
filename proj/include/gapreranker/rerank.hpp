#pragma once
// The sequential greedy reranker: impression state, delta / ais features,
// bridge and final scores, next-candidate selection and top-k-of-m reranking.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gapreranker/core.hpp"

namespace gapreranker {

// Running aspect-value counts over items already placed in the reranked list.
struct ImpressionState {
  std::size_t placed = 0;
  std::map<AspectValueKey, std::size_t> counts;

  std::size_t count(const AspectValueKey& key) const {
    auto it = counts.find(key);
    return it == counts.end() ? 0 : it->second;
  }

  void place(const Candidate& candidate,
             const std::vector<std::string>& aspects) {
    placed += 1;
    for (const auto& aspect : aspects) {
      if (auto value = candidate.aspect_value(aspect)) {
        counts[AspectValueKey{aspect, *value}] += 1;
      }
    }
  }
};

struct FeatureVector {
  std::map<AspectValueKey, double> ais;

  double at(const AspectValueKey& key) const {
    auto it = ais.find(key);
    return it == ais.end() ? 0.0 : it->second;
  }
};

// Under-representation of an aspect value among placed items:
// 1 - count/placed, clamped to [0,1]. Before any placement (placed = 0)
// every value is maximally under-represented, so the delta is 1.
inline double delta_feature(const ImpressionState& state,
                            const AspectValueKey& key) {
  if (state.placed == 0) return 1.0;
  const double impressed = static_cast<double>(state.count(key)) /
                           static_cast<double>(state.placed);
  return std::clamp(1.0 - impressed, 0.0, 1.0);
}

// ais = delta * indicator(candidate carries the value). Nonzero only for the
// value the candidate actually carries, at most one key per aspect.
inline FeatureVector ais_features(const Candidate& candidate,
                                  const ImpressionState& state,
                                  const std::vector<std::string>& aspects) {
  FeatureVector features;
  for (const auto& aspect : aspects) {
    if (auto value = candidate.aspect_value(aspect)) {
      const AspectValueKey key{aspect, *value};
      features.ais[key] = delta_feature(state, key);
    }
  }
  return features;
}

// bridge = sum over in-scope (aspect, value) keys of share(key) * ais(key).
// Keys absent from the model contribute 0.
inline double bridge_score(const Candidate& candidate,
                           const ImpressionState& state,
                           const QueryAspectModel& model,
                           const std::vector<std::string>& aspects) {
  double score = 0.0;
  for (const auto& aspect : aspects) {
    if (auto value = candidate.aspect_value(aspect)) {
      const AspectValueKey key{aspect, *value};
      const double weight = model.share(key);
      if (weight > 0.0) score += weight * delta_feature(state, key);
    }
  }
  return score;
}

inline double final_score(double best_match, double bridge, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::domain_error("alpha must be in (0,1], got " +
                            std::to_string(alpha));
  }
  return best_match + ((1.0 - alpha) / alpha) * bridge;
}

// One candidate from the pool, with its original production rank kept for
// the tie rule and for restoring unselected candidates in original order.
struct PoolEntry {
  Candidate candidate;
  std::size_t original_rank = 0;
};

// Index of the argmax final_score among `remaining`. Ties break by higher
// best_match_score, then by lower original rank.
inline std::size_t select_next(const std::vector<PoolEntry>& remaining,
                               const ImpressionState& state,
                               const QueryAspectModel& model,
                               const Profile& profile) {
  if (remaining.empty()) {
    throw std::invalid_argument("select_next: empty candidate list");
  }
  const double alpha = profile.resolve_alpha(&model);
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    const auto& entry = remaining[i];
    const double bridge =
        bridge_score(entry.candidate, state, model, profile.aspects);
    const double score =
        final_score(entry.candidate.best_match_score, bridge, alpha);
    if (i == 0) {
      best_score = score;
      continue;
    }
    const auto& champion = remaining[best];
    bool wins = score > best_score;
    if (score == best_score) {
      if (entry.candidate.best_match_score >
          champion.candidate.best_match_score) {
        wins = true;
      } else if (entry.candidate.best_match_score ==
                     champion.candidate.best_match_score &&
                 entry.original_rank < champion.original_rank) {
        wins = true;
      }
    }
    if (wins) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

// Greedily refill the top min(k, pool) positions from the top min(m, n)
// pool; unselected pool members follow in original relative order and
// candidates beyond m are untouched. With no model, the input passes
// through unchanged.
inline std::vector<Candidate> rerank(const Session& session,
                                     const QueryAspectModel* model,
                                     const Profile& profile) {
  auto validation = validate_profile(profile);
  if (!validation.ok()) {
    throw ConfigError("invalid profile: " + validation.message());
  }
  if (model == nullptr) return session.candidates;

  const double alpha = profile.resolve_alpha(model);
  if (alpha == 1.0) return session.candidates;  // final == best_match

  const std::size_t n = session.candidates.size();
  const std::size_t pool_size = std::min<std::size_t>(profile.m, n);
  const std::size_t fill = std::min<std::size_t>(profile.k, pool_size);

  std::vector<PoolEntry> remaining;
  remaining.reserve(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) {
    remaining.push_back(PoolEntry{session.candidates[i], i});
  }

  std::vector<Candidate> output;
  output.reserve(n);
  ImpressionState state;
  for (std::size_t position = 0; position < fill; ++position) {
    const std::size_t chosen = select_next(remaining, state, *model, profile);
    state.place(remaining[chosen].candidate, profile.aspects);
    output.push_back(std::move(remaining[chosen].candidate));
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  std::sort(remaining.begin(), remaining.end(),
            [](const PoolEntry& a, const PoolEntry& b) {
              return a.original_rank < b.original_rank;
            });
  for (auto& entry : remaining) output.push_back(std::move(entry.candidate));
  for (std::size_t i = pool_size; i < n; ++i) {
    output.push_back(session.candidates[i]);
  }
  return output;
}

}  // namespace gapreranker
