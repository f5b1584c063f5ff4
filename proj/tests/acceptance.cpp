// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Oracles here are coded independently of the library's scoring
// and counting paths.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gapreranker/io.hpp"
#include "gapreranker/metrics.hpp"
#include "gapreranker/mining.hpp"
#include "gapreranker/rerank.hpp"
#include "gapreranker/synth.hpp"
#include "test_util.hpp"

using namespace gapreranker;

namespace {

int failures = 0;

void run(const std::string& name, const std::string& summary,
         const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("%-4s %-4s %s%s%s\n", name.c_str(), ok ? "PASS" : "FAIL",
              summary.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) failures += 1;
}

bool require(bool condition, const std::string& message, std::string& detail) {
  if (!condition && detail.empty()) detail = message;
  return condition;
}

WorkloadConfig default_workload_config() {
  WorkloadConfig config;
  config.seed = 20240817;
  config.num_queries = 500;
  config.sessions_per_query = 20;
  config.pool_size = 50;
  config.aspects = {
      {"condition", {"new", "refurbished", "old"}, {0.5, 0.3, 0.2}}};
  config.ranker_bias = 0.5;
  config.purchase_rate = 1.0;
  return config;
}

Profile default_profile() {
  Profile profile;
  profile.k = 20;
  profile.m = 50;
  profile.aspects = {"condition"};
  return profile;
}

// ---- independent oracles ---------------------------------------------------

std::size_t oracle_select(const std::vector<PoolEntry>& remaining,
                          const ImpressionState& state,
                          const QueryAspectModel& model, double alpha,
                          const std::vector<std::string>& aspects) {
  std::size_t winner = 0;
  double winner_score = 0.0;
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    const Candidate& c = remaining[i].candidate;
    double bridge = 0.0;
    for (const auto& aspect : aspects) {
      auto it = c.aspects.find(aspect);
      if (it == c.aspects.end()) continue;
      const AspectValueKey key{aspect, it->second};
      auto share_it = model.shares.find(key);
      if (share_it == model.shares.end()) continue;
      double delta = 1.0;
      if (state.placed > 0) {
        std::size_t count = 0;
        if (auto cit = state.counts.find(key); cit != state.counts.end()) {
          count = cit->second;
        }
        delta = 1.0 - static_cast<double>(count) /
                          static_cast<double>(state.placed);
        delta = std::clamp(delta, 0.0, 1.0);
      }
      bridge += share_it->second * delta;
    }
    const double score = c.best_match_score + (1.0 - alpha) / alpha * bridge;
    if (i == 0) {
      winner_score = score;
      continue;
    }
    const Candidate& w = remaining[winner].candidate;
    bool wins = score > winner_score ||
                (score == winner_score &&
                 (c.best_match_score > w.best_match_score ||
                  (c.best_match_score == w.best_match_score &&
                   remaining[i].original_rank < remaining[winner].original_rank)));
    if (wins) {
      winner = i;
      winner_score = score;
    }
  }
  return winner;
}

double oracle_prefix_gap(const std::vector<Candidate>& prefix,
                         const QueryAspectModel& model,
                         const std::vector<std::string>& aspects) {
  double sum = 0.0;
  int values = 0;
  for (const auto& aspect : aspects) {
    for (const auto& [key, share] : model.shares) {
      if (key.aspect != aspect) continue;
      int count = 0;
      for (const auto& c : prefix) {
        auto it = c.aspects.find(aspect);
        if (it != c.aspects.end() && it->second == key.value) count += 1;
      }
      const double shortfall =
          share - static_cast<double>(count) /
                      static_cast<double>(prefix.size());
      if (shortfall > 0.0) sum += shortfall;
      values += 1;
    }
  }
  return values == 0 ? 0.0 : sum / values;
}

// ---- criteria --------------------------------------------------------------

bool p1_alpha_one_identity(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  Profile profile = default_profile();
  profile.alpha_override = 1.0;
  profile.aspects = testutil::kAspects;
  for (int round = 0; round < 1000; ++round) {
    auto session = testutil::random_session(rng, 50);
    auto model = testutil::random_model(rng);
    const auto output = rerank(session, &model, profile);
    for (std::size_t i = 0; i < output.size(); ++i) {
      if (output[i].item_id != session.candidates[i].item_id) {
        detail = "mismatch in session " + std::to_string(round);
        return false;
      }
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return require(seconds < 5.0,
                 "took " + std::to_string(seconds) + " s", detail);
}

bool p2_paper_trend(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const auto workload = generate_workload(default_workload_config());

  std::vector<PurchaseEvent> events;
  for (std::size_t i = 0; i < workload.log_lines.size(); ++i) {
    events.push_back(parse_log_record(workload.log_lines[i], i + 1));
  }
  const ModelStore store = aggregate_shares(events, {"condition"});
  const Profile profile = default_profile();

  const std::vector<double> sweep = {1.0, 0.8, 0.5, 0.2};
  std::vector<EvalReport> reports;
  std::ostringstream numbers;
  for (double alpha : sweep) {
    reports.push_back(
        compare_rankers(workload.sessions, store, profile, alpha));
    numbers << " a=" << alpha << ": gd=" << reports.back().gap_difference
            << " ms=" << reports.back().mrr_shift;
  }
  detail = numbers.str();
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].gap_difference < reports[i - 1].gap_difference - 1e-12) {
      detail += " (gap_difference not non-decreasing)";
      return false;
    }
  }
  if (reports.back().gap_difference < 0.10) {
    detail += " (gap_difference at alpha=0.2 below 10%)";
    return false;
  }
  for (const auto& report : reports) {
    if (report.mrr_shift < -0.02) {
      detail += " (mrr_shift below -2%)";
      return false;
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (seconds >= 120.0) {
    detail += " (took " + std::to_string(seconds) + " s)";
    return false;
  }
  return true;
}

bool p3_paper_examples(std::string& detail) {
  ImpressionState state;
  state.placed = 10;
  state.counts[{"condition", "new"}] = 6;
  state.counts[{"condition", "old"}] = 3;
  state.counts[{"condition", "refurbished"}] = 1;
  bool ok = true;
  ok &= require(delta_feature(state, {"condition", "new"}) == 0.4,
                "delta(new) != 0.4", detail);
  ok &= require(delta_feature(state, {"condition", "old"}) == 0.7,
                "delta(old) != 0.7", detail);
  ok &= require(delta_feature(state, {"condition", "refurbished"}) == 0.9,
                "delta(refurbished) != 0.9", detail);

  Candidate item;
  item.item_id = "i";
  item.aspects["condition"] = "new";
  const auto features = ais_features(item, state, {"condition"});
  ok &= require(features.at({"condition", "new"}) == 0.4, "ais(new) != 0.4",
                detail);
  ok &= require(features.at({"condition", "refurbished"}) == 0.0,
                "ais(refurbished) != 0", detail);
  ok &= require(features.at({"condition", "old"}) == 0.0, "ais(old) != 0",
                detail);

  std::vector<PurchaseEvent> events;
  const std::vector<std::pair<std::string, double>> ratio = {
      {"new", 500.0}, {"refurbished", 300.0}, {"old", 200.0}};
  for (const auto& [value, gmv] : ratio) {
    PurchaseEvent event;
    event.query = "iphone";
    event.item_id = value;
    event.aspects["condition"] = value;
    event.gmv = gmv;
    events.push_back(event);
  }
  const auto mined = aggregate_shares(events, {"condition"});
  const auto& model = mined.models.at("iphone");
  ok &= require(std::abs(model.share({"condition", "new"}) - 0.5) <= 1e-12,
                "mined share(new) != 0.5", detail);
  ok &= require(
      std::abs(model.share({"condition", "refurbished"}) - 0.3) <= 1e-12,
      "mined share(refurbished) != 0.3", detail);
  ok &= require(std::abs(model.share({"condition", "old"}) - 0.2) <= 1e-12,
                "mined share(old) != 0.2", detail);
  return ok;
}

bool p4_greedy_oracle(std::string& detail) {
  std::mt19937_64 rng(4004);
  std::uniform_int_distribution<int> pool_draw(1, 8);
  std::uniform_int_distribution<int> placed_draw(0, 6);
  std::uniform_real_distribution<double> alpha_draw(0.05, 1.0);
  Profile profile;
  profile.aspects = testutil::kAspects;
  for (int round = 0; round < 10000; ++round) {
    auto session = testutil::random_session(rng, pool_draw(rng));
    auto model = testutil::random_model(rng);
    const double alpha = alpha_draw(rng);
    profile.alpha_override = alpha;

    ImpressionState state;
    auto history = testutil::random_session(rng, placed_draw(rng));
    for (const auto& placed : history.candidates) {
      state.place(placed, profile.aspects);
    }
    std::vector<PoolEntry> remaining;
    for (std::size_t i = 0; i < session.candidates.size(); ++i) {
      remaining.push_back({session.candidates[i], i});
    }
    const auto expected =
        oracle_select(remaining, state, model, alpha, profile.aspects);
    if (select_next(remaining, state, model, profile) != expected) {
      detail = "disagreement at instance " + std::to_string(round);
      return false;
    }
  }
  return true;
}

bool p5_gap_oracle(std::string& detail) {
  QueryAspectModel hand;
  hand.shares[{"condition", "new"}] = 0.5;
  hand.shares[{"condition", "old"}] = 0.3;
  hand.shares[{"condition", "refurbished"}] = 0.2;
  std::vector<Candidate> prefix;
  auto add = [&](const std::string& value, int count) {
    for (int i = 0; i < count; ++i) {
      Candidate c;
      c.item_id = value + std::to_string(i);
      c.aspects["condition"] = value;
      prefix.push_back(c);
    }
  };
  add("new", 6);
  add("old", 3);
  add("refurbished", 1);
  if (std::abs(prefix_gap(prefix, hand, {"condition"}).total - 0.1 / 3.0) >
      1e-15) {
    detail = "hand example total != 0.1/3";
    return false;
  }

  std::mt19937_64 rng(5005);
  std::uniform_int_distribution<int> size_draw(1, 25);
  for (int round = 0; round < 10000; ++round) {
    auto session = testutil::random_session(rng, size_draw(rng));
    auto model = testutil::random_model(rng);
    const std::size_t k = 1 + rng() % session.candidates.size();
    std::vector<Candidate> cut(session.candidates.begin(),
                               session.candidates.begin() + k);
    const double expected = oracle_prefix_gap(cut, model, testutil::kAspects);
    if (std::abs(prefix_gap(cut, model, testutil::kAspects).total - expected) >
        1e-12) {
      detail = "prefix_gap disagreement at instance " + std::to_string(round);
      return false;
    }
    double mean = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
      mean += oracle_prefix_gap(
          std::vector<Candidate>(session.candidates.begin(),
                                 session.candidates.begin() + i),
          model, testutil::kAspects);
    }
    mean /= static_cast<double>(k);
    if (std::abs(average_gap(session.candidates, model, testutil::kAspects, k) -
                 mean) > 1e-12) {
      detail = "average_gap disagreement at instance " + std::to_string(round);
      return false;
    }
  }
  return true;
}

bool p6_mining_laws(std::string& detail) {
  std::mt19937_64 rng(6006);
  const std::vector<std::string> values = {"new", "used", "refurbished"};
  std::uniform_int_distribution<std::size_t> value_draw(0, values.size() - 1);
  std::uniform_real_distribution<double> gmv_draw(1.0, 400.0);
  for (int round = 0; round < 200; ++round) {
    std::vector<PurchaseEvent> events;
    const int count = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < count; ++i) {
      PurchaseEvent event;
      event.query = "q" + std::to_string(rng() % 4);
      event.item_id = "i" + std::to_string(i);
      event.aspects["condition"] = values[value_draw(rng)];
      event.gmv = gmv_draw(rng);
      event.timestamp = i;
      events.push_back(event);
    }
    const auto store = aggregate_shares(events, {"condition"});

    auto shuffled = events;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (aggregate_shares(shuffled, {"condition"}) != store) {
      detail = "permutation variance at round " + std::to_string(round);
      return false;
    }

    auto scaled = events;
    for (auto& event : scaled) event.gmv *= 7.25;
    const auto scaled_store = aggregate_shares(scaled, {"condition"});
    for (const auto& [query, model] : store.models) {
      double sum = 0.0;
      for (const auto& [key, share] : model.shares) {
        sum += share;
        if (std::abs(scaled_store.models.at(query).share(key) - share) >
            1e-12) {
          detail = "scale variance at round " + std::to_string(round);
          return false;
        }
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        detail = "distribution sum " + std::to_string(sum);
        return false;
      }
    }

    std::stringstream buffer;
    save_store(store, buffer);
    if (load_store(buffer) != store) {
      detail = "round-trip mismatch at round " + std::to_string(round);
      return false;
    }
  }
  return true;
}

bool p7_structural_laws(std::string& detail) {
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> alpha_draw(0.05, 1.0);
  std::uniform_int_distribution<int> size_draw(1, 40);
  Profile profile;
  profile.k = 8;
  profile.m = 25;
  profile.aspects = testutil::kAspects;
  for (int round = 0; round < 10000; ++round) {
    auto session = testutil::random_session(rng, size_draw(rng));
    auto model = testutil::random_model(rng);
    profile.alpha_override = alpha_draw(rng);
    const auto output = rerank(session, &model, profile);

    std::vector<std::string> in_ids, out_ids;
    for (const auto& c : session.candidates) in_ids.push_back(c.item_id);
    for (const auto& c : output) out_ids.push_back(c.item_id);
    auto sorted_in = in_ids;
    auto sorted_out = out_ids;
    std::sort(sorted_in.begin(), sorted_in.end());
    std::sort(sorted_out.begin(), sorted_out.end());
    if (sorted_in != sorted_out) {
      detail = "not a permutation at round " + std::to_string(round);
      return false;
    }

    const std::size_t n = in_ids.size();
    const std::size_t pool = std::min<std::size_t>(profile.m, n);
    for (std::size_t i = pool; i < n; ++i) {
      if (out_ids[i] != in_ids[i]) {
        detail = "tail moved at round " + std::to_string(round);
        return false;
      }
    }
    const std::size_t fill = std::min<std::size_t>(profile.k, pool);
    std::vector<std::size_t> tail_ranks;
    for (std::size_t i = fill; i < pool; ++i) {
      tail_ranks.push_back(static_cast<std::size_t>(
          std::find(in_ids.begin(), in_ids.end(), out_ids[i]) -
          in_ids.begin()));
    }
    if (!std::is_sorted(tail_ranks.begin(), tail_ranks.end())) {
      detail = "unselected order broken at round " + std::to_string(round);
      return false;
    }

    const auto again = rerank(session, &model, profile);
    for (std::size_t i = 0; i < output.size(); ++i) {
      if (again[i].item_id != output[i].item_id) {
        detail = "nondeterministic at round " + std::to_string(round);
        return false;
      }
    }
  }
  return true;
}

bool p8_generator_calibration(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  // Calibrated fixture: bias and single-value fraction chosen so the
  // workload lands on the 0.13 mean-gap / 0.77 positive-fraction targets.
  WorkloadConfig config = default_workload_config();
  config.seed = 808;
  config.num_queries = 300;
  config.sessions_per_query = 10;
  config.aspects = {
      {"condition", {"new", "refurbished", "old"}, {0.45, 0.33, 0.22}}};
  config.ranker_bias = 0.65;
  config.single_value_query_fraction = 0.23;
  const auto workload = generate_workload(config);
  const auto summary = measure_baseline(workload, 20);
  std::ostringstream numbers;
  numbers << "mean_gap=" << summary.mean_gap
          << " positive_fraction=" << summary.positive_gap_fraction;
  detail = numbers.str();
  bool ok = true;
  ok &= std::abs(summary.mean_gap - 0.13) <= 0.02;
  ok &= std::abs(summary.positive_gap_fraction - 0.77) <= 0.05;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (seconds >= 60.0) {
    detail += " (took " + std::to_string(seconds) + " s)";
    return false;
  }
  return ok;
}

bool p9_latency(std::string& detail) {
  WorkloadConfig config = default_workload_config();
  config.num_queries = 20;
  config.sessions_per_query = 5;
  config.aspects = {
      {"condition", {"new", "refurbished", "old"}, {0.5, 0.3, 0.2}},
      {"format", {"auction", "fixed", "offer"}, {0.4, 0.4, 0.2}},
      {"shipping", {"free", "paid"}, {0.7, 0.3}}};
  const auto workload = generate_workload(config);
  Profile profile = default_profile();
  profile.aspects = {"condition", "format", "shipping"};
  profile.alpha_override = 0.5;

  std::size_t sink = 0;
  for (const auto& session : workload.sessions) {
    sink += rerank(session, &workload.true_models.at(session.query), profile)
                .size();
  }
  std::vector<double> samples;
  samples.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    const auto& session = workload.sessions[i % workload.sessions.size()];
    const auto& model = workload.true_models.at(session.query);
    const auto t0 = std::chrono::steady_clock::now();
    sink += rerank(session, &model, profile).size();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  const double median = samples[samples.size() / 2];
  detail = "median=" + std::to_string(median) + " ms, " +
           std::to_string(sink) + " items";
  return median <= 1.0;
}

bool p10_degenerates(std::string& detail) {
  // empty purchase log -> empty store
  const auto empty = aggregate_shares({}, {"condition"});
  if (!empty.models.empty()) {
    detail = "empty log produced a non-empty store";
    return false;
  }

  Profile profile;
  profile.k = 1;
  profile.m = 2;
  profile.aspects = {"condition"};

  // model-less query -> identity rerank
  std::mt19937_64 rng(10010);
  auto session = testutil::random_session(rng, 5);
  const auto passthrough = rerank(session, nullptr, profile);
  for (std::size_t i = 0; i < passthrough.size(); ++i) {
    if (passthrough[i].item_id != session.candidates[i].item_id) {
      detail = "model-less rerank moved items";
      return false;
    }
  }

  // single-candidate session -> trivial output
  Session single;
  single.query = "q";
  Candidate only;
  only.item_id = "solo";
  only.best_match_score = 1.0;
  only.aspects["condition"] = "new";
  single.candidates = {only};
  QueryAspectModel model;
  model.shares[{"condition", "new"}] = 0.4;
  model.shares[{"condition", "old"}] = 0.6;
  model.alpha = 0.5;
  const auto out = rerank(single, &model, profile);
  if (out.size() != 1 || out[0].item_id != "solo") {
    detail = "single-candidate rerank broke";
    return false;
  }

  // all gaps zero -> no highest-gap aspect
  QueryAspectModel aligned;
  aligned.shares[{"condition", "new"}] = 1.0;
  std::vector<Candidate> all_new = {only, only};
  if (highest_gap_aspect(all_new, aligned, {"condition"}, 2).has_value()) {
    detail = "zero-gap query still produced an aspect";
    return false;
  }
  return true;
}

}  // namespace

int main() {
  run("P1", "alpha=1 identity on 1000 random sessions", p1_alpha_one_identity);
  run("P2", "gap reduction trend and MRR guardrail on the default workload",
      p2_paper_trend);
  run("P3", "worked delta/ais and 5:3:2 mining examples, exact",
      p3_paper_examples);
  run("P4", "greedy step vs exhaustive oracle, 10000 instances",
      p4_greedy_oracle);
  run("P5", "gap metrics vs brute-force recount, 10000 instances",
      p5_gap_oracle);
  run("P6", "mining laws and bit-exact store round-trip", p6_mining_laws);
  run("P7", "permutation / prefix-only / determinism, 10000 sessions",
      p7_structural_laws);
  run("P8", "generator calibration to the 0.13 / 0.77 targets",
      p8_generator_calibration);
  run("P9", "median rerank latency <= 1 ms at k=20, m=50", p9_latency);
  run("P10", "degenerate inputs complete per contract", p10_degenerates);
  if (failures > 0) {
    std::cout << failures << " criteria failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
