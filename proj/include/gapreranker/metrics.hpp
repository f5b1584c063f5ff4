#pragma once
// Purchase-impression gap metrics, MRR, ranker comparison with a paired
// permutation test, and highest-gap aspect identification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gapreranker/core.hpp"
#include "gapreranker/mining.hpp"
#include "gapreranker/parallel.hpp"
#include "gapreranker/rerank.hpp"

namespace gapreranker {

inline constexpr int kPermutationResamples = 10000;
inline constexpr std::uint64_t kPermutationSeed = 0x6a70726572616e6bULL;

struct GapBreakdown {
  std::map<std::string, double> per_aspect;
  double total = 0.0;
  std::size_t k = 0;
};

struct EvalReport {
  double alpha = 1.0;
  double avg_gap_baseline = 0.0;
  double avg_gap_reranked = 0.0;
  double gap_difference = 0.0;  // relative reduction
  double mrr_baseline = 0.0;
  double mrr_reranked = 0.0;
  double mrr_shift = 0.0;  // relative
  double p_value = 1.0;
  bool degenerate_baseline = false;
};

// Fraction of prefix items carrying the given aspect value.
inline double impressed_share(std::span<const Candidate> prefix,
                              const AspectValueKey& key) {
  if (prefix.empty()) {
    throw std::invalid_argument("impressed_share: empty prefix");
  }
  std::size_t carrying = 0;
  for (const auto& candidate : prefix) {
    if (auto value = candidate.aspect_value(key.aspect);
        value && *value == key.value) {
      carrying += 1;
    }
  }
  return static_cast<double>(carrying) / static_cast<double>(prefix.size());
}

// Per modeled value: max(gmv_share - impressed_share, 0). An aspect value
// impressed above its GMV share is not penalized. The total is the mean over
// all modeled in-scope values.
inline GapBreakdown prefix_gap(std::span<const Candidate> prefix,
                               const QueryAspectModel& model,
                               const std::vector<std::string>& aspects) {
  if (prefix.empty()) {
    throw std::invalid_argument("prefix_gap: empty prefix");
  }
  GapBreakdown breakdown;
  breakdown.k = prefix.size();
  double sum = 0.0;
  std::size_t value_count = 0;
  for (const auto& aspect : aspects) {
    const auto keys = model.keys_for_aspect(aspect);
    if (keys.empty()) continue;
    double aspect_sum = 0.0;
    for (const auto& key : keys) {
      const double shortfall =
          std::max(model.share(key) - impressed_share(prefix, key), 0.0);
      aspect_sum += shortfall;
    }
    breakdown.per_aspect[aspect] =
        aspect_sum / static_cast<double>(keys.size());
    sum += aspect_sum;
    value_count += keys.size();
  }
  breakdown.total =
      value_count == 0 ? 0.0 : sum / static_cast<double>(value_count);
  return breakdown;
}

// Element i (1-based) is prefix_gap over the first i items.
inline std::vector<double> position_gap_curve(
    std::span<const Candidate> ranked, const QueryAspectModel& model,
    const std::vector<std::string>& aspects, std::size_t k) {
  if (k > ranked.size()) {
    throw std::out_of_range("position_gap_curve: k=" + std::to_string(k) +
                            " exceeds list size " +
                            std::to_string(ranked.size()));
  }
  std::vector<double> curve;
  curve.reserve(k);
  for (std::size_t i = 1; i <= k; ++i) {
    curve.push_back(prefix_gap(ranked.first(i), model, aspects).total);
  }
  return curve;
}

// The headline Gap number: mean of the position-wise curve over 1..k.
inline double average_gap(std::span<const Candidate> ranked,
                          const QueryAspectModel& model,
                          const std::vector<std::string>& aspects,
                          std::size_t k) {
  const auto curve = position_gap_curve(ranked, model, aspects, k);
  double sum = 0.0;
  for (double g : curve) sum += g;
  return sum / static_cast<double>(curve.size());
}

// Reciprocal rank of the highest-ranked purchased item; nullopt when the
// session has no purchase.
inline std::optional<double> reciprocal_rank(
    std::span<const Candidate> ranked,
    const std::set<std::string>& purchased) {
  if (purchased.empty()) return std::nullopt;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (purchased.count(ranked[i].item_id)) {
      return 1.0 / static_cast<double>(i + 1);
    }
  }
  return std::nullopt;
}

struct RankedSession {
  std::vector<Candidate> ranked;
  std::set<std::string> purchased_item_ids;
};

// Mean reciprocal rank over converting sessions; 0 when nothing converts.
inline double mrr(const std::vector<RankedSession>& sessions) {
  double sum = 0.0;
  std::size_t converting = 0;
  for (const auto& session : sessions) {
    if (auto rr = reciprocal_rank(session.ranked, session.purchased_item_ids)) {
      sum += *rr;
      converting += 1;
    }
  }
  return converting == 0 ? 0.0 : sum / static_cast<double>(converting);
}

// Two-sided paired permutation test (sign flips) on per-session metric
// differences. Returns 1.0 for an empty or all-zero difference vector.
inline double paired_permutation_pvalue(
    const std::vector<double>& differences,
    int resamples = kPermutationResamples,
    std::uint64_t seed = kPermutationSeed) {
  if (differences.empty()) return 1.0;
  double observed = 0.0;
  for (double d : differences) observed += d;
  observed = std::abs(observed / static_cast<double>(differences.size()));

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(0.5);
  int at_least_as_extreme = 0;
  for (int r = 0; r < resamples; ++r) {
    double stat = 0.0;
    for (double d : differences) stat += flip(rng) ? d : -d;
    stat = std::abs(stat / static_cast<double>(differences.size()));
    if (stat >= observed - 1e-15) at_least_as_extreme += 1;
  }
  return static_cast<double>(at_least_as_extreme + 1) /
         static_cast<double>(resamples + 1);
}

// Reranks every session at the given alpha and compares gap and MRR against
// the production-order baseline. Sessions without a model are excluded from
// gap aggregates but kept (as identity reranks) in the MRR aggregates.
inline EvalReport compare_rankers(const std::vector<Session>& sessions,
                                  const ModelStore& store,
                                  const Profile& base_profile, double alpha) {
  if (sessions.empty()) {
    throw std::invalid_argument("compare_rankers: no sessions");
  }
  Profile profile = base_profile;
  profile.alpha_override = alpha;

  struct PerSession {
    double gap_baseline = 0.0;
    double gap_reranked = 0.0;
    bool has_model = false;
    std::optional<double> rr_baseline;
    std::optional<double> rr_reranked;
  };
  std::vector<PerSession> rows(sessions.size());
  parallel_for(sessions.size(), [&](std::size_t i) {
    const auto& session = sessions[i];
    auto& row = rows[i];
    const QueryAspectModel* model = store.find(session.query);
    const auto reranked = rerank(session, model, profile);
    if (model != nullptr && !session.candidates.empty()) {
      const std::size_t k_eval =
          std::min<std::size_t>(profile.k, session.candidates.size());
      row.has_model = true;
      row.gap_baseline =
          average_gap(session.candidates, *model, profile.aspects, k_eval);
      row.gap_reranked =
          average_gap(reranked, *model, profile.aspects, k_eval);
    }
    row.rr_baseline =
        reciprocal_rank(session.candidates, session.purchased_item_ids);
    row.rr_reranked = reciprocal_rank(reranked, session.purchased_item_ids);
  });

  EvalReport report;
  report.alpha = alpha;
  double gap_base_sum = 0.0, gap_rerank_sum = 0.0;
  std::size_t modeled = 0;
  double rr_base_sum = 0.0, rr_rerank_sum = 0.0;
  std::size_t converting = 0;
  std::vector<double> rr_differences;
  for (const auto& row : rows) {
    if (row.has_model) {
      gap_base_sum += row.gap_baseline;
      gap_rerank_sum += row.gap_reranked;
      modeled += 1;
    }
    if (row.rr_baseline) {
      rr_base_sum += *row.rr_baseline;
      rr_rerank_sum += *row.rr_reranked;
      converting += 1;
      rr_differences.push_back(*row.rr_reranked - *row.rr_baseline);
    }
  }
  if (modeled > 0) {
    report.avg_gap_baseline = gap_base_sum / static_cast<double>(modeled);
    report.avg_gap_reranked = gap_rerank_sum / static_cast<double>(modeled);
  }
  if (converting > 0) {
    report.mrr_baseline = rr_base_sum / static_cast<double>(converting);
    report.mrr_reranked = rr_rerank_sum / static_cast<double>(converting);
  }
  if (report.avg_gap_baseline > 0.0) {
    report.gap_difference =
        (report.avg_gap_baseline - report.avg_gap_reranked) /
        report.avg_gap_baseline;
  } else {
    report.gap_difference = 0.0;
    report.degenerate_baseline = true;
  }
  report.mrr_shift =
      report.mrr_baseline > 0.0
          ? (report.mrr_reranked - report.mrr_baseline) / report.mrr_baseline
          : 0.0;
  report.p_value = paired_permutation_pvalue(rr_differences);
  return report;
}

// Aspect with the largest per-aspect gap over the top-k prefix; nullopt when
// every gap is 0. Ties break by profile aspect order.
inline std::optional<std::string> highest_gap_aspect(
    std::span<const Candidate> ranked, const QueryAspectModel& model,
    const std::vector<std::string>& aspects, std::size_t k) {
  if (k > ranked.size()) {
    throw std::out_of_range("highest_gap_aspect: k exceeds list size");
  }
  const auto breakdown = prefix_gap(ranked.first(k), model, aspects);
  std::optional<std::string> best;
  double best_gap = 0.0;
  for (const auto& aspect : aspects) {
    auto it = breakdown.per_aspect.find(aspect);
    if (it == breakdown.per_aspect.end()) continue;
    if (it->second > best_gap) {
      best = aspect;
      best_gap = it->second;
    }
  }
  return best;
}

}  // namespace gapreranker
