// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/evaluation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <iomanip>
#include <sstream>

namespace addrmatch {

GoldMap make_gold_map(const std::vector<UnnormalizedAddress>& queries) {
  GoldMap gold;
  for (const auto& q : queries) {
    if (q.gold_id) gold.emplace(q.raw, *q.gold_id);
  }
  return gold;
}

AddressLookup make_address_lookup(const std::vector<NormalizedAddress>& corpus) {
  AddressLookup out;
  for (const auto& a : corpus) out.emplace(a.id, a);
  return out;
}

namespace {

double pct(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

const NormalizedAddress& gold_address(const MatchDecision& d, const GoldMap& gold, const AddressLookup& addresses) {
  const auto g = gold.find(d.query.raw);
  if (g == gold.end()) throw Error(ErrorCode::kMissingGold, "no gold for '" + d.query.raw + "'");
  const auto a = addresses.find(g->second);
  if (a == addresses.end()) throw Error(ErrorCode::kMissingGold, "gold id " + g->second + " not in corpus");
  return a->second;
}

}  // namespace

EvalReport evaluate(const std::vector<MatchDecision>& decisions, const GoldMap& gold,
                    const AddressLookup& addresses, double cutoff, const std::vector<std::size_t>& recall_ks) {
  EvalReport r;
  r.cutoff_used = cutoff;
  r.n = decisions.size();
  std::size_t artery_ok = 0, door_ok = 0, artery_ok_f = 0, door_ok_f = 0;
  std::map<std::size_t, std::size_t> recall_hits;
  for (std::size_t k : recall_ks) recall_hits[k] = 0;

  for (const auto& d : decisions) {
    const auto& g = gold_address(d, gold, addresses);
    const auto pred = addresses.find(d.best.id);
    const bool artery = pred != addresses.end() && artery_key(pred->second) == artery_key(g);
    const bool door = pred != addresses.end() && door_key(pred->second) == door_key(g);
    artery_ok += artery;
    door_ok += door;
    if (d.confidence >= cutoff) {
      ++r.n_accepted;
      artery_ok_f += artery;
      door_ok_f += door;
    }
    for (auto& [k, hits] : recall_hits) {
      const std::size_t upto = std::min(k, d.candidates.size());
      for (std::size_t i = 0; i < upto; ++i) {
        if (d.candidates[i].id == g.id) {
          ++hits;
          break;
        }
      }
    }
  }
  r.artery_acc_nofilter = pct(artery_ok, r.n);
  r.door_acc_nofilter = pct(door_ok, r.n);
  if (r.n_accepted > 0) {
    r.artery_acc_filtered = pct(artery_ok_f, r.n_accepted);
    r.door_acc_filtered = pct(door_ok_f, r.n_accepted);
  }
  r.discarded_pct = pct(r.n - r.n_accepted, r.n);
  for (const auto& [k, hits] : recall_hits) r.recall_at[k] = pct(hits, r.n);
  return r;
}

std::vector<EvalReport> sweep_cutoffs(const std::vector<MatchDecision>& decisions, const GoldMap& gold,
                                      const AddressLookup& addresses, const std::vector<double>& grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorCode::kInvalidArgument, "cutoff grid must be ascending");
  }
  std::vector<EvalReport> out;
  out.reserve(grid.size());
  for (double c : grid) out.push_back(evaluate(decisions, gold, addresses, c));
  return out;
}

std::size_t ConfidenceHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::string ConfidenceHistogram::to_csv() const {
  std::ostringstream out;
  out << "bin_start,bin_end,count\n" << std::fixed << std::setprecision(2);
  for (std::size_t i = 0; i < kBins; ++i) {
    out << bin_start(i) << ',' << bin_end(i) << ',' << counts[i] << '\n';
  }
  return out.str();
}

void ConfidenceHistogram::add(double confidence) {
  // The epsilon keeps decimal edges such as 0.29 in their own bin.
  const double scaled = std::floor(std::clamp(confidence, 0.0, 1.0) * 100.0 + 1e-9);
  ++counts[std::min<std::size_t>(kBins - 1, static_cast<std::size_t>(scaled))];
}

ConfidenceHistogram histogram(const std::vector<double>& confidences) {
  ConfidenceHistogram h;
  for (double c : confidences) h.add(c);
  return h;
}

ConfidenceHistogram histogram(const std::vector<MatchDecision>& decisions) {
  std::vector<double> c;
  c.reserve(decisions.size());
  for (const auto& d : decisions) c.push_back(d.confidence);
  return histogram(c);
}

std::vector<MatchDecision> bm25_decisions(const std::vector<UnnormalizedAddress>& queries,
                                          const MatchEngine& engine, std::size_t k, bool cp4_filter) {
  std::vector<MatchDecision> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    std::optional<int> shard;
    if (cp4_filter) {
      if (const auto zip = find_zip(q.raw); zip && !engine.index().shard(zip->shard()).empty()) shard = zip->shard();
    }
    const auto ranked = top_k_lexical(engine.lexical(), q.raw, k, shard);
    MatchDecision d;
    d.query = q;
    d.shard_used = shard;
    const double top = ranked.empty() ? 0.0 : ranked.front().second;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const double p = top > 0.0 ? ranked[i].second / top : 0.0;
      d.candidates.push_back({ranked[i].first, p, static_cast<int>(i + 1), 0.0, static_cast<int>(i + 1)});
    }
    if (!d.candidates.empty()) {
      d.best = d.candidates.front();
      d.confidence = d.best.probability;
    }
    out.push_back(std::move(d));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sample_stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

ThroughputReport bench_throughput(const MatchEngine& engine, const std::vector<UnnormalizedAddress>& queries,
                                  PipelineConfig cfg, bool with_cp4_filter, int repetitions) {
  if (queries.empty()) throw Error(ErrorCode::kInvalidArgument, "no benchmark queries");
  if (repetitions < 3) throw Error(ErrorCode::kInvalidArgument, "repetitions must be >= 3");
  cfg.cp4_filter = with_cp4_filter;
  ThroughputReport r;
  r.mode = std::string(to_string(cfg.mode));
  r.with_cp4_filter = with_cp4_filter;
  r.n_queries = queries.size();
  std::vector<double> walls;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& q : queries) {
      const auto d = match(q, engine, cfg);
      (void)d;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    walls.push_back(wall);
    r.per_repetition_its.push_back(static_cast<double>(queries.size()) / wall);
  }
  r.wall_time_s = median(walls);
  r.iterations_per_second = static_cast<double>(queries.size()) / r.wall_time_s;
  r.its_stddev = sample_stddev(r.per_repetition_its);
  return r;
}

StabilitySummary multi_seed_stability(const std::function<RunMetrics(std::uint64_t)>& run,
                                      const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 2) throw Error(ErrorCode::kInvalidArgument, "stability needs at least two seeds");
  StabilitySummary s;
  std::vector<double> artery, door;
  for (auto seed : seeds) {
    auto m = run(seed);
    m.seed = seed;
    artery.push_back(m.artery_acc);
    door.push_back(m.door_acc);
    s.runs.push_back(m);
  }
  s.median_artery = median(artery);
  s.median_door = median(door);
  s.stddev_artery = sample_stddev(artery);
  s.stddev_door = sample_stddev(door);
  std::vector<std::size_t> order(s.runs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return door[a] < door[b]; });
  s.median_run_index = order[(order.size() - 1) / 2];
  return s;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["n_accepted"] = r.n_accepted;
  j["cutoff_used"] = r.cutoff_used;
  j["artery_acc_nofilter"] = r.artery_acc_nofilter;
  j["door_acc_nofilter"] = r.door_acc_nofilter;
  j["artery_acc_filtered"] = r.artery_acc_filtered ? nlohmann::json(*r.artery_acc_filtered) : nlohmann::json(nullptr);
  j["door_acc_filtered"] = r.door_acc_filtered ? nlohmann::json(*r.door_acc_filtered) : nlohmann::json(nullptr);
  j["discarded_pct"] = r.discarded_pct;
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : r.recall_at) recall[std::to_string(k)] = v;
  j["recall_at"] = recall;
  return j;
}

nlohmann::json to_json(const ThroughputReport& r) {
  return {{"mode", r.mode},
          {"with_cp4_filter", r.with_cp4_filter},
          {"iterations_per_second", r.iterations_per_second},
          {"n_queries", r.n_queries},
          {"wall_time_s", r.wall_time_s},
          {"per_repetition_its", r.per_repetition_its},
          {"its_stddev", r.its_stddev}};
}

nlohmann::json to_json(const StabilitySummary& s) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : s.runs) runs.push_back({{"seed", r.seed}, {"artery_acc", r.artery_acc}, {"door_acc", r.door_acc}});
  return {{"runs", runs},
          {"median_artery", s.median_artery},
          {"median_door", s.median_door},
          {"stddev_artery", s.stddev_artery},
          {"stddev_door", s.stddev_door},
          {"median_run_index", s.median_run_index}};
}

}  // namespace addrmatch
