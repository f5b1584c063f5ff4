#pragma once
// Purchase-log ingestion and per-query GMV-share aggregation, plus the
// versioned model store file format.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapreranker/core.hpp"

namespace gapreranker {

inline constexpr const char* kModelStoreVersion = "gap-reranker-model/1";

struct PurchaseEvent {
  std::string query;
  std::string item_id;
  std::map<std::string, std::string> aspects;
  double gmv = 0.0;
  std::int64_t timestamp = 0;
};

struct ModelStore {
  std::map<std::string, QueryAspectModel> models;  // keyed by normalized query
  std::int64_t built_at = 0;
  int window_days = 14;

  const QueryAspectModel* find(const std::string& query) const {
    auto it = models.find(normalize_query(query));
    return it == models.end() ? nullptr : &it->second;
  }

  bool operator==(const ModelStore&) const = default;
};

// Shortest-exact decimal text, padded to at least 17 significant digits so
// store round-trips are bit-exact.
inline std::string exact_decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline double parse_exact_decimal(const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("bad decimal value: '" + text + "'");
  }
  return value;
}

// One log line -> PurchaseEvent. `line_number` is only used in error text.
inline PurchaseEvent parse_log_record(const std::string& line,
                                      std::size_t line_number = 0) {
  const std::string where = "line " + std::to_string(line_number);
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": not a valid record: " + e.what());
  }
  if (!record.is_object()) throw ParseError(where + ": record is not an object");

  PurchaseEvent event;
  try {
    event.query = record.at("query").get<std::string>();
    event.item_id = record.at("item_id").get<std::string>();
    event.gmv = record.at("gmv").get<double>();
    event.timestamp = record.at("ts").get<std::int64_t>();
    for (const auto& [aspect, value] : record.at("aspects").items()) {
      event.aspects[aspect] = value.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (!(event.gmv > 0.0)) {
    throw ParseError(where + ": gmv must be > 0, got " +
                     std::to_string(event.gmv));
  }
  if (event.timestamp < 0) {
    throw ParseError(where + ": ts must be >= 0");
  }
  return event;
}

// Aggregate purchase events into per-query share distributions.
//   share(v) = (gmv_sum(v) + smoothing) / (sum_v gmv_sum(v) + smoothing * |values|)
// Smoothing is add-lambda over observed values only; values never purchased
// for a query get no entry at all.
inline ModelStore aggregate_shares(const std::vector<PurchaseEvent>& events,
                                   const std::vector<std::string>& aspects,
                                   double smoothing = 0.0) {
  if (smoothing < 0.0) throw ConfigError("smoothing must be >= 0");

  struct QueryAccumulator {
    std::map<AspectValueKey, std::vector<double>> gmv_values;
    std::uint64_t event_count = 0;
  };
  std::map<std::string, QueryAccumulator> accumulators;
  for (const auto& event : events) {
    auto& acc = accumulators[normalize_query(event.query)];
    acc.event_count += 1;
    for (const auto& aspect : aspects) {
      auto it = event.aspects.find(aspect);
      if (it == event.aspects.end()) continue;
      acc.gmv_values[AspectValueKey{aspect, it->second}].push_back(event.gmv);
    }
  }

  // Sum each key's contributions in sorted order so the result is identical
  // for any permutation of the event stream.
  std::map<std::string, std::map<AspectValueKey, double>> gmv_sums;
  for (auto& [query, acc] : accumulators) {
    for (auto& [key, values] : acc.gmv_values) {
      std::sort(values.begin(), values.end());
      double sum = 0.0;
      for (double v : values) sum += v;
      gmv_sums[query][key] = sum;
    }
  }

  ModelStore store;
  for (auto& [query, acc] : accumulators) {
    QueryAspectModel model;
    model.query = query;
    model.event_count = acc.event_count;
    const auto& sums = gmv_sums[query];
    for (const auto& aspect : aspects) {
      std::vector<AspectValueKey> keys;
      double total = 0.0;
      for (const auto& [key, gmv_sum] : sums) {
        if (key.aspect != aspect) continue;
        keys.push_back(key);
        total += gmv_sum;
      }
      if (keys.empty()) continue;
      const double denominator =
          total + smoothing * static_cast<double>(keys.size());
      for (const auto& key : keys) {
        model.shares[key] = (sums.at(key) + smoothing) / denominator;
      }
    }
    store.models.emplace(query, std::move(model));
  }
  return store;
}

inline void save_store(const ModelStore& store, std::ostream& out) {
  nlohmann::json doc;
  doc["version"] = kModelStoreVersion;
  doc["window_days"] = store.window_days;
  doc["built_at"] = store.built_at;
  nlohmann::json models = nlohmann::json::object();
  for (const auto& [query, model] : store.models) {
    nlohmann::json entry;
    entry["alpha"] = exact_decimal(model.alpha);
    entry["event_count"] = model.event_count;
    nlohmann::json shares = nlohmann::json::object();
    for (const auto& [key, share] : model.shares) {
      shares[key.aspect][key.value] = exact_decimal(share);
    }
    entry["shares"] = shares;
    models[query] = entry;
  }
  doc["models"] = models;
  out << doc.dump(2) << "\n";
}

inline void save_store(const ModelStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path);
  save_store(store, out);
}

inline ModelStore load_store(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("corrupted model store: ") + e.what());
  }
  const std::string version = doc.value("version", "");
  if (version != kModelStoreVersion) {
    throw ParseError("unsupported model store version: '" + version +
                     "', expected '" + kModelStoreVersion + "'");
  }
  ModelStore store;
  try {
    store.window_days = doc.at("window_days").get<int>();
    store.built_at = doc.at("built_at").get<std::int64_t>();
    for (const auto& [query, entry] : doc.at("models").items()) {
      QueryAspectModel model;
      model.query = query;
      model.alpha = parse_exact_decimal(entry.at("alpha").get<std::string>());
      model.event_count = entry.at("event_count").get<std::uint64_t>();
      for (const auto& [aspect, values] : entry.at("shares").items()) {
        for (const auto& [value, share] : values.items()) {
          model.shares[AspectValueKey{aspect, value}] =
              parse_exact_decimal(share.get<std::string>());
        }
      }
      auto validation = validate_model(model);
      if (!validation.ok()) {
        throw ParseError("invalid model for query '" + query +
                         "': " + validation.message());
      }
      store.models.emplace(query, std::move(model));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("corrupted model store: ") + e.what());
  }
  return store;
}

inline ModelStore load_store(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model store: " + path);
  return load_store(in);
}

}  // namespace gapreranker
