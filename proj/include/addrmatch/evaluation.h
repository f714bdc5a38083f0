// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "addrmatch/pipeline.h"

namespace addrmatch {

/// Accuracy at artery and door level, with and without the confidence filter.
/// Percentages are in [0, 100]; filtered figures are absent when nothing passes.
struct EvalReport {
  double artery_acc_nofilter = 0.0;
  double door_acc_nofilter = 0.0;
  std::optional<double> artery_acc_filtered;
  std::optional<double> door_acc_filtered;
  double discarded_pct = 0.0;
  std::map<std::size_t, double> recall_at;
  double cutoff_used = 0.0;
  std::size_t n = 0;
  std::size_t n_accepted = 0;
};

using GoldMap = std::unordered_map<std::string, std::string>;  // raw query -> gold id
using AddressLookup = std::unordered_map<std::string, NormalizedAddress>;

GoldMap make_gold_map(const std::vector<UnnormalizedAddress>& queries);
AddressLookup make_address_lookup(const std::vector<NormalizedAddress>& corpus);

/// Throws MissingGold when a query (or its gold id) is not known.
EvalReport evaluate(const std::vector<MatchDecision>& decisions, const GoldMap& gold,
                    const AddressLookup& addresses, double cutoff,
                    const std::vector<std::size_t>& recall_ks = {1, 5, 10});

/// One report per cutoff; `grid` must be ascending.
std::vector<EvalReport> sweep_cutoffs(const std::vector<MatchDecision>& decisions, const GoldMap& gold,
                                      const AddressLookup& addresses, const std::vector<double>& grid);

/// 100 bins of width 0.01 over [0, 1]; the last bin includes 1.0.
struct ConfidenceHistogram {
  static constexpr std::size_t kBins = 100;
  std::array<std::size_t, kBins> counts{};

  static double bin_start(std::size_t i) { return static_cast<double>(i) / kBins; }
  static double bin_end(std::size_t i) { return static_cast<double>(i + 1) / kBins; }
  void add(double confidence);
  std::size_t total() const;
  std::string to_csv() const;  // bin_start,bin_end,count
};

ConfidenceHistogram histogram(const std::vector<MatchDecision>& decisions);
ConfidenceHistogram histogram(const std::vector<double>& confidences);

/// Ranks `queries` with BM25 alone (the lexical baseline); probability = score / best score.
std::vector<MatchDecision> bm25_decisions(const std::vector<UnnormalizedAddress>& queries,
                                          const MatchEngine& engine, std::size_t k, bool cp4_filter);

struct ThroughputReport {
  std::string mode;
  bool with_cp4_filter = false;
  double iterations_per_second = 0.0;  // n_queries / wall_time_s
  std::size_t n_queries = 0;
  double wall_time_s = 0.0;            // median over repetitions
  std::vector<double> per_repetition_its;
  double its_stddev = 0.0;
};

/// Runs `queries` one at a time through match(), `repetitions` >= 3 times.
ThroughputReport bench_throughput(const MatchEngine& engine, const std::vector<UnnormalizedAddress>& queries,
                                  PipelineConfig cfg, bool with_cp4_filter, int repetitions);

struct RunMetrics {
  std::uint64_t seed = 0;
  double artery_acc = 0.0;
  double door_acc = 0.0;
};

struct StabilitySummary {
  std::vector<RunMetrics> runs;
  double median_artery = 0.0;
  double median_door = 0.0;
  double stddev_artery = 0.0;  // sample standard deviation, percentage points
  double stddev_door = 0.0;
  std::size_t median_run_index = 0;  // index into `runs` of the median-door-accuracy run
};

/// Runs train+evaluate once per seed (at least two seeds).
StabilitySummary multi_seed_stability(const std::function<RunMetrics(std::uint64_t)>& run,
                                      const std::vector<std::uint64_t>& seeds);

double median(std::vector<double> values);
double sample_stddev(const std::vector<double>& values);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const ThroughputReport& r);
nlohmann::json to_json(const StabilitySummary& s);

}  // namespace addrmatch
