// gap-reranker: mine GMV shares, rerank sessions, evaluate gap reduction,
// generate synthetic workloads and benchmark the rerank hot path.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gapreranker/core.hpp"
#include "gapreranker/io.hpp"
#include "gapreranker/metrics.hpp"
#include "gapreranker/mining.hpp"
#include "gapreranker/rerank.hpp"
#include "gapreranker/synth.hpp"

namespace {

using namespace gapreranker;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitConfigError = 2;

struct MineArgs {
  std::string log_path;
  std::string out_path;
  std::vector<std::string> aspects;
  double smoothing = 0.0;
  bool skip_bad = false;
  int window_days = 14;
};

int cmd_mine(const MineArgs& args) {
  std::ifstream in(args.log_path);
  if (!in) throw ParseError("cannot open log: " + args.log_path);

  std::vector<PurchaseEvent> events;
  std::string line;
  std::size_t line_number = 0;
  std::size_t skipped = 0;
  while (std::getline(in, line)) {
    line_number += 1;
    if (line.empty()) continue;
    try {
      events.push_back(parse_log_record(line, line_number));
    } catch (const ParseError&) {
      if (!args.skip_bad) throw;
      skipped += 1;
    }
  }

  ModelStore store = aggregate_shares(events, args.aspects, args.smoothing);
  store.window_days = args.window_days;
  store.built_at = static_cast<std::int64_t>(std::time(nullptr));
  save_store(store, args.out_path);
  std::cout << "mined " << store.models.size() << " queries from "
            << events.size() << " events";
  if (skipped > 0) std::cout << " (" << skipped << " bad lines skipped)";
  std::cout << "\n";
  return kExitOk;
}

Profile merge_profile(const ProfileFile& file,
                      const std::optional<double>& alpha_flag) {
  Profile profile = file.profile;
  if (alpha_flag) profile.alpha_override = alpha_flag;
  auto validation = validate_profile(profile);
  if (!validation.ok()) {
    throw ConfigError("invalid profile: " + validation.message());
  }
  return profile;
}

int cmd_rerank(const std::string& sessions_path, const std::string& model_path,
               const std::string& profile_path, const std::string& out_path,
               std::optional<double> alpha_flag) {
  const ProfileFile file = parse_profile(profile_path);
  const Profile profile = merge_profile(file, alpha_flag);
  const ModelStore store = load_store(model_path);
  const std::vector<Session> sessions = read_sessions(sessions_path);

  std::vector<Session> reranked(sessions.size());
  parallel_for(sessions.size(), [&](std::size_t i) {
    Session out = sessions[i];
    out.candidates = rerank(sessions[i], store.find(sessions[i].query), profile);
    reranked[i] = std::move(out);
  });
  write_sessions(reranked, out_path);
  std::cout << "reranked " << reranked.size() << " sessions (k=" << profile.k
            << ", m=" << profile.m << ")\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& sessions_path,
                 const std::string& model_path,
                 const std::string& profile_path, const std::string& out_path,
                 std::vector<double> sweep_flag) {
  const ProfileFile file = parse_profile(profile_path);
  Profile profile = file.profile;
  auto validation = validate_profile(profile);
  if (!validation.ok()) {
    throw ConfigError("invalid profile: " + validation.message());
  }
  std::vector<double> sweep = sweep_flag.empty() ? file.sweep : sweep_flag;
  if (sweep.empty()) sweep = {1.0, 0.8, 0.5, 0.2};
  for (double alpha : sweep) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw ConfigError("sweep alpha must be in (0,1]");
    }
  }
  const ModelStore store = load_store(model_path);
  const std::vector<Session> sessions = read_sessions(sessions_path);
  if (sessions.empty()) throw ParseError("no sessions in " + sessions_path);

  std::vector<EvalReport> reports;
  std::ofstream curve_out(out_path + ".curve.tsv");
  if (!curve_out) {
    throw ParseError("cannot open for writing: " + out_path + ".curve.tsv");
  }
  curve_out << "alpha\tposition\tavg_gap\n";
  for (double alpha : sweep) {
    reports.push_back(compare_rankers(sessions, store, profile, alpha));

    // Position-wise average gap of the reranked lists over modeled sessions.
    Profile run = profile;
    run.alpha_override = alpha;
    std::vector<double> sums(static_cast<std::size_t>(profile.k), 0.0);
    std::vector<std::size_t> counts(sums.size(), 0);
    for (const auto& session : sessions) {
      const QueryAspectModel* model = store.find(session.query);
      if (model == nullptr || session.candidates.empty()) continue;
      const auto reranked = rerank(session, model, run);
      const std::size_t k_eval =
          std::min<std::size_t>(profile.k, reranked.size());
      const auto curve =
          position_gap_curve(reranked, *model, profile.aspects, k_eval);
      for (std::size_t p = 0; p < curve.size(); ++p) {
        sums[p] += curve[p];
        counts[p] += 1;
      }
    }
    for (std::size_t p = 0; p < sums.size(); ++p) {
      if (counts[p] == 0) continue;
      curve_out << std::setprecision(10) << alpha << '\t' << (p + 1) << '\t'
                << sums[p] / static_cast<double>(counts[p]) << '\n';
    }
  }

  std::ofstream out(out_path);
  if (!out) throw ParseError("cannot open for writing: " + out_path);
  write_report_tsv(reports, out);
  print_report_table(reports, std::cout);
  return kExitOk;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_flag) {
  std::ifstream in(config_path);
  if (!in) throw ParseError("cannot open config: " + config_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad config: ") + e.what());
  }
  WorkloadConfig config = parse_workload_config(doc);
  if (seed_flag) config.seed = *seed_flag;

  const Workload workload = generate_workload(config);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream log(out_dir + "/purchases.log");
    if (!log) throw ParseError("cannot write to " + out_dir);
    for (const auto& line : workload.log_lines) log << line << "\n";
  }
  write_sessions(workload.sessions, out_dir + "/sessions.jsonl");

  const BaselineSummary summary = measure_baseline(workload, 20);
  std::cout << "generated " << workload.sessions.size() << " sessions over "
            << summary.queries << " queries\n"
            << "baseline mean gap @20: " << summary.mean_gap
            << ", fraction of queries with positive gap: "
            << summary.positive_gap_fraction << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& sessions_path, const std::string& model_path,
              const std::string& profile_path, int iterations,
              std::optional<double> alpha_flag) {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  const ProfileFile file = parse_profile(profile_path);
  const Profile profile = merge_profile(file, alpha_flag);
  const ModelStore store = load_store(model_path);
  const std::vector<Session> sessions = read_sessions(sessions_path);
  if (sessions.empty()) throw ParseError("no sessions in " + sessions_path);

  // Warmup pass, then timed iterations round-robin over the sessions.
  std::size_t sink = 0;
  for (const auto& session : sessions) {
    sink += rerank(session, store.find(session.query), profile).size();
  }
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    const auto& session = sessions[static_cast<std::size_t>(i) % sessions.size()];
    const QueryAspectModel* model = store.find(session.query);
    const auto start = std::chrono::steady_clock::now();
    sink += rerank(session, model, profile).size();
    const auto stop = std::chrono::steady_clock::now();
    samples.push_back(
        std::chrono::duration<double, std::milli>(stop - start).count());
  }
  std::sort(samples.begin(), samples.end());
  const double median = samples[samples.size() / 2];
  const double p99 = samples[std::min(samples.size() - 1,
                                      static_cast<std::size_t>(
                                          samples.size() * 99 / 100))];
  std::cout << "rerank latency over " << iterations
            << " iterations (k=" << profile.k << ", m=" << profile.m
            << "): median " << median << " ms, p99 " << p99 << " ms ("
            << sink << " items moved)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Purchase-impression gap reranking toolkit"};
  app.require_subcommand(1);

  MineArgs mine;
  auto* mine_cmd =
      app.add_subcommand("mine", "Aggregate a purchase log into a model store");
  mine_cmd->add_option("--log", mine.log_path, "purchase log (JSON lines)")
      ->required();
  mine_cmd->add_option("--out", mine.out_path, "model store output path")
      ->required();
  mine_cmd->add_option("--aspects", mine.aspects, "aspects to mine")
      ->required()
      ->delimiter(',');
  mine_cmd->add_option("--smoothing", mine.smoothing, "add-lambda smoothing");
  mine_cmd->add_flag("--skip-bad", mine.skip_bad,
                     "skip malformed lines instead of failing");
  mine_cmd->add_option("--window-days", mine.window_days,
                       "data window recorded in the store");

  std::string sessions_path, model_path, profile_path, out_path, config_path,
      out_dir;
  std::optional<double> alpha_flag;
  std::vector<double> sweep_flag;
  std::optional<std::uint64_t> seed_flag;
  int iterations = 10000;

  auto* rerank_cmd = app.add_subcommand("rerank", "Rerank a sessions file");
  rerank_cmd->add_option("--sessions", sessions_path, "sessions file")
      ->required();
  rerank_cmd->add_option("--model", model_path, "model store")->required();
  rerank_cmd->add_option("--profile", profile_path, "profile file")->required();
  rerank_cmd->add_option("--out", out_path, "reranked sessions output")
      ->required();
  rerank_cmd->add_option("--alpha", alpha_flag, "override profile alpha");

  auto* eval_cmd =
      app.add_subcommand("evaluate", "Compare reranked vs baseline per alpha");
  eval_cmd->add_option("--sessions", sessions_path, "sessions file")->required();
  eval_cmd->add_option("--model", model_path, "model store")->required();
  eval_cmd->add_option("--profile", profile_path, "profile file")->required();
  eval_cmd->add_option("--out", out_path, "report output (TSV)")->required();
  eval_cmd->add_option("--sweep", sweep_flag, "alpha sweep values")
      ->delimiter(',');

  auto* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic workload");
  synth_cmd->add_option("--config", config_path, "workload config (JSON)")
      ->required();
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  synth_cmd->add_option("--seed", seed_flag, "override config seed");

  auto* bench_cmd =
      app.add_subcommand("bench", "Measure per-session rerank latency");
  bench_cmd->add_option("--sessions", sessions_path, "sessions file")
      ->required();
  bench_cmd->add_option("--model", model_path, "model store")->required();
  bench_cmd->add_option("--profile", profile_path, "profile file")->required();
  bench_cmd->add_option("--iterations", iterations, "timed iterations");
  bench_cmd->add_option("--alpha", alpha_flag, "override profile alpha");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mine_cmd->parsed()) return cmd_mine(mine);
    if (rerank_cmd->parsed()) {
      return cmd_rerank(sessions_path, model_path, profile_path, out_path,
                        alpha_flag);
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(sessions_path, model_path, profile_path, out_path,
                          sweep_flag);
    }
    if (synth_cmd->parsed()) return cmd_synth(config_path, out_dir, seed_flag);
    if (bench_cmd->parsed()) {
      return cmd_bench(sessions_path, model_path, profile_path, iterations,
                       alpha_flag);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
