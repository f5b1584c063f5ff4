#pragma once
// Seeded synthetic workload generator: catalogs, per-query purchase
// preferences, biased pointwise scores, sessions and purchase logs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapreranker/core.hpp"
#include "gapreranker/metrics.hpp"
#include "gapreranker/mining.hpp"

namespace gapreranker {

struct AspectSpec {
  std::string name;
  std::vector<std::string> values;
  std::vector<double> shares;  // ground-truth purchase preference
};

struct WorkloadConfig {
  std::uint64_t seed = 1;
  int num_queries = 100;
  int sessions_per_query = 20;
  int pool_size = 50;
  std::vector<AspectSpec> aspects;
  // How strongly synthetic best-match scores over-favor majority values.
  double ranker_bias = 0.5;
  double bias_offset = 1.0;
  double purchase_rate = 1.0;
  // Fraction of queries whose preferences collapse to a single value per
  // aspect; those queries exhibit exactly zero gap.
  double single_value_query_fraction = 0.0;

  std::vector<std::string> aspect_names() const {
    std::vector<std::string> names;
    for (const auto& spec : aspects) names.push_back(spec.name);
    return names;
  }
};

struct Workload {
  std::vector<std::string> log_lines;
  std::vector<Session> sessions;
  // Ground-truth preference models, one per query.
  std::map<std::string, QueryAspectModel> true_models;
  std::vector<std::string> aspect_names;
};

struct BaselineSummary {
  double positive_gap_fraction = 0.0;
  double mean_gap = 0.0;
  int queries = 0;
};

inline void validate_config(const WorkloadConfig& config) {
  if (config.num_queries < 1) throw ConfigError("num_queries must be >= 1");
  if (config.sessions_per_query < 1) {
    throw ConfigError("sessions_per_query must be >= 1");
  }
  if (config.pool_size < 2) throw ConfigError("pool_size must be >= 2");
  if (config.aspects.empty()) throw ConfigError("aspects must be non-empty");
  if (config.ranker_bias < 0.0 || config.ranker_bias > 1.0) {
    throw ConfigError("ranker_bias must be in [0,1]");
  }
  if (!(config.purchase_rate > 0.0 && config.purchase_rate <= 1.0)) {
    throw ConfigError("purchase_rate must be in (0,1]");
  }
  if (config.single_value_query_fraction < 0.0 ||
      config.single_value_query_fraction > 1.0) {
    throw ConfigError("single_value_query_fraction must be in [0,1]");
  }
  for (const auto& spec : config.aspects) {
    if (spec.name.empty()) throw ConfigError("aspect name must be non-empty");
    if (spec.values.size() < 1 || spec.values.size() != spec.shares.size()) {
      throw ConfigError("aspect '" + spec.name +
                        "': values and shares must be non-empty and equal length");
    }
    double sum = 0.0;
    for (double s : spec.shares) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ConfigError("aspect '" + spec.name + "': share out of [0,1]");
      }
      sum += s;
    }
    if (std::abs(sum - 1.0) > kShareSumTolerance) {
      throw ConfigError("aspect '" + spec.name + "': shares sum to " +
                        std::to_string(sum) + ", expected 1");
    }
  }
}

inline WorkloadConfig parse_workload_config(const nlohmann::json& doc) {
  WorkloadConfig config;
  try {
    config.seed = doc.value("seed", config.seed);
    config.num_queries = doc.value("num_queries", config.num_queries);
    config.sessions_per_query =
        doc.value("sessions_per_query", config.sessions_per_query);
    config.pool_size = doc.value("pool_size", config.pool_size);
    config.ranker_bias = doc.value("ranker_bias", config.ranker_bias);
    config.bias_offset = doc.value("bias_offset", config.bias_offset);
    config.purchase_rate = doc.value("purchase_rate", config.purchase_rate);
    config.single_value_query_fraction = doc.value(
        "single_value_query_fraction", config.single_value_query_fraction);
    for (const auto& entry : doc.at("aspects")) {
      AspectSpec spec;
      spec.name = entry.at("name").get<std::string>();
      spec.values = entry.at("values").get<std::vector<std::string>>();
      spec.shares = entry.at("shares").get<std::vector<double>>();
      config.aspects.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad workload config: ") + e.what());
  }
  validate_config(config);
  return config;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::size_t draw_categorical(const std::vector<double>& shares,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = uniform(rng);
  for (std::size_t i = 0; i < shares.size(); ++i) {
    u -= shares[i];
    if (u < 0.0) return i;
  }
  return shares.size() - 1;
}

}  // namespace detail

// Deterministic for a fixed config; each query draws from its own derived
// seed. Purchases follow the true shares over the full pool, independent of
// score bias, so biased rankers exhibit a purchase-impression gap.
inline Workload generate_workload(const WorkloadConfig& config) {
  validate_config(config);
  Workload workload;
  workload.aspect_names = config.aspect_names();

  const int single_value_queries = static_cast<int>(std::lround(
      config.single_value_query_fraction * config.num_queries));
  std::int64_t next_timestamp = 0;

  for (int q = 0; q < config.num_queries; ++q) {
    std::ostringstream name;
    name << "q" << q;
    const std::string query = name.str();
    std::mt19937_64 rng(detail::splitmix64(config.seed ^ (0x1000ULL + q)));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const bool single_value = q < single_value_queries;
    // Per-query ground truth: either the configured shares or a point mass
    // on each aspect's majority value.
    std::vector<AspectSpec> truth = config.aspects;
    if (single_value) {
      for (auto& spec : truth) {
        const std::size_t majority = static_cast<std::size_t>(
            std::max_element(spec.shares.begin(), spec.shares.end()) -
            spec.shares.begin());
        std::fill(spec.shares.begin(), spec.shares.end(), 0.0);
        spec.shares[majority] = 1.0;
      }
    }
    std::vector<std::size_t> majority_index(truth.size());
    for (std::size_t a = 0; a < truth.size(); ++a) {
      majority_index[a] = static_cast<std::size_t>(
          std::max_element(truth[a].shares.begin(), truth[a].shares.end()) -
          truth[a].shares.begin());
    }

    QueryAspectModel true_model;
    true_model.query = query;
    for (const auto& spec : truth) {
      for (std::size_t v = 0; v < spec.values.size(); ++v) {
        if (spec.shares[v] > 0.0) {
          true_model.shares[AspectValueKey{spec.name, spec.values[v]}] =
              spec.shares[v];
        }
      }
    }
    workload.true_models.emplace(query, std::move(true_model));

    for (int s = 0; s < config.sessions_per_query; ++s) {
      Session session;
      session.query = query;
      for (int c = 0; c < config.pool_size; ++c) {
        Candidate candidate;
        std::ostringstream id;
        id << query << "-s" << s << "-i" << c;
        candidate.item_id = id.str();
        double majority_fraction = 0.0;
        for (std::size_t a = 0; a < truth.size(); ++a) {
          const std::size_t v = detail::draw_categorical(truth[a].shares, rng);
          candidate.aspects[truth[a].name] = truth[a].values[v];
          if (v == majority_index[a]) majority_fraction += 1.0;
        }
        majority_fraction /= static_cast<double>(truth.size());
        candidate.best_match_score =
            uniform(rng) +
            config.ranker_bias * config.bias_offset * majority_fraction;
        session.candidates.push_back(std::move(candidate));
      }
      std::stable_sort(session.candidates.begin(), session.candidates.end(),
                       [](const Candidate& a, const Candidate& b) {
                         return a.best_match_score > b.best_match_score;
                       });

      if (uniform(rng) < config.purchase_rate) {
        // Pick a target value for the leading aspect from the true shares,
        // then a uniform pool item carrying it.
        const auto& lead = truth.front();
        const std::size_t target = detail::draw_categorical(lead.shares, rng);
        std::vector<std::size_t> matching;
        for (std::size_t i = 0; i < session.candidates.size(); ++i) {
          if (auto value = session.candidates[i].aspect_value(lead.name);
              value && *value == lead.values[target]) {
            matching.push_back(i);
          }
        }
        std::size_t chosen;
        if (matching.empty()) {
          chosen = static_cast<std::size_t>(
              std::uniform_int_distribution<std::size_t>(
                  0, session.candidates.size() - 1)(rng));
        } else {
          chosen = matching[std::uniform_int_distribution<std::size_t>(
              0, matching.size() - 1)(rng)];
        }
        const Candidate& bought = session.candidates[chosen];
        session.purchased_item_ids.insert(bought.item_id);

        nlohmann::json record;
        record["query"] = query;
        record["item_id"] = bought.item_id;
        record["gmv"] = std::round(
            std::uniform_real_distribution<double>(10.0, 200.0)(rng) * 100.0) /
            100.0;
        record["ts"] = next_timestamp++;
        record["aspects"] = bought.aspects;
        workload.log_lines.push_back(record.dump());
      }
      workload.sessions.push_back(std::move(session));
    }
  }
  return workload;
}

// Mean baseline gap and fraction of queries whose baseline gap is positive,
// measured against the ground-truth preference models at prefix k. The
// impressed distribution at each position is averaged over a query's
// sessions before the shortfall rule, so an unbiased ranker measures ~0
// instead of the single-session quantization floor.
inline BaselineSummary measure_baseline(const Workload& workload,
                                        std::size_t k) {
  if (workload.sessions.empty()) {
    throw std::invalid_argument("measure_baseline: empty workload");
  }
  std::map<std::string, std::vector<const Session*>> by_query;
  for (const auto& session : workload.sessions) {
    by_query[session.query].push_back(&session);
  }

  BaselineSummary summary;
  summary.queries = static_cast<int>(by_query.size());
  int positive = 0;
  for (const auto& [query, sessions] : by_query) {
    const auto& model = workload.true_models.at(query);
    double gap_sum = 0.0;
    std::size_t positions = 0;
    for (std::size_t i = 1; i <= k; ++i) {
      // mean impressed share at prefix i across this query's sessions
      std::map<AspectValueKey, double> impressed;
      std::size_t covered = 0;
      for (const Session* session : sessions) {
        if (session->candidates.size() < i) continue;
        covered += 1;
        for (const auto& [key, share] : model.shares) {
          impressed[key] += impressed_share(
              std::span(session->candidates).first(i), key);
        }
      }
      if (covered == 0) continue;
      double shortfall_sum = 0.0;
      std::size_t values = 0;
      for (const auto& [key, share] : model.shares) {
        shortfall_sum +=
            std::max(share - impressed[key] / static_cast<double>(covered),
                     0.0);
        values += 1;
      }
      if (values > 0) {
        gap_sum += shortfall_sum / static_cast<double>(values);
        positions += 1;
      }
    }
    const double query_gap =
        positions == 0 ? 0.0 : gap_sum / static_cast<double>(positions);
    summary.mean_gap += query_gap;
    if (query_gap > 0.0) positive += 1;
  }
  summary.mean_gap /= static_cast<double>(summary.queries);
  summary.positive_gap_fraction =
      static_cast<double>(positive) / static_cast<double>(summary.queries);
  return summary;
}

}  // namespace gapreranker
