// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion. Arguments select criteria
// by name; no arguments runs all of them. Exit status is 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../unit/oracles.h"
#include "../unit/test_util.h"
#include "addrmatch/dataset.h"
#include "addrmatch/embedding.h"
#include "addrmatch/error.h"
#include "addrmatch/evaluation.h"
#include "addrmatch/lexical.h"
#include "addrmatch/service.h"
#include "addrmatch/string_metrics.h"
#include "addrmatch/vector_index.h"
#include "addrmatch/workflow.h"

using namespace addrmatch;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      detail << what << "; ";
      pass = false;
    }
  }
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<void(Verdict&)> body;
};

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_real(rng, -1.0, 1.0);
  return v;
}

// ---- contrastive loss -------------------------------------------------------

void loss_unit_cases(Verdict& o) {
  const double margin = 0.5;
  Rng rng(1);
  const auto a = random_vec(rng, kEmbeddingDim);
  auto neg = a;
  for (auto& x : neg) x = -x;
  std::vector<double> e1(kEmbeddingDim, 0.0), half(kEmbeddingDim, 0.0);
  e1[0] = 1.0;
  half[0] = 0.5;
  half[1] = std::sqrt(3.0) / 2.0;
  const double same = contrastive_loss(a, a, 1, margin);
  const double far = contrastive_loss(a, neg, 0, margin);
  const double mid = contrastive_loss(e1, half, 1, margin);
  o.require(std::abs(same) < 1e-12, "identical positive pair");
  o.require(std::abs(far) < 1e-12, "distant negative pair");
  o.require(std::abs(mid - 0.125) < 1e-12, "cosine 0.5 positive pair");
  o.detail << "losses " << same << ", " << far << ", " << mid;
}

double norm_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

void gradient_fidelity(Verdict& o) {
  Rng rng(2);
  const double h = 1e-5;
  const double margin = 0.5;
  double worst = 0;
  int points = 0;
  while (points < 100) {
    auto a = random_vec(rng, kEmbeddingDim);
    auto b = random_vec(rng, kEmbeddingDim);
    const int y = points % 2;
    // Negatives are drawn near the hinge so the active branch is exercised.
    if (y == 0) {
      for (std::size_t i = 0; i < kEmbeddingDim; ++i) b[i] = a[i] + 0.8 * b[i];
      const double d = 1.0 - cosine(a, b);
      if (d >= margin || margin - d < 1e-3) continue;
    }
    const auto g = contrastive_grad(a, b, y, margin);
    std::vector<double> na(kEmbeddingDim), nb(kEmbeddingDim);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
      const double ai = a[i];
      a[i] = ai + h;
      const double up = contrastive_loss(a, b, y, margin);
      a[i] = ai - h;
      const double down = contrastive_loss(a, b, y, margin);
      a[i] = ai;
      na[i] = (up - down) / (2 * h);
      const double bi = b[i];
      b[i] = bi + h;
      const double up_b = contrastive_loss(a, b, y, margin);
      b[i] = bi - h;
      const double down_b = contrastive_loss(a, b, y, margin);
      b[i] = bi;
      nb[i] = (up_b - down_b) / (2 * h);
    }
    worst = std::max({worst, norm_rel_error(g.wrt_a, na), norm_rel_error(g.wrt_b, nb)});
    ++points;
  }
  o.require(worst < 1e-4, "relative error above 1e-4");
  o.detail << "100 points, max relative error " << worst;
}

// ---- retrieval ----------------------------------------------------------------

void retrieval_exactness(Verdict& o) {
  Rng rng(3);
  CorpusConfig cc;
  cc.n_addresses = 1000;
  cc.seed = 3;
  const auto corpus = generate_corpus(cc);
  std::vector<EmbeddingVector> vectors;
  std::vector<std::pair<std::string, std::vector<float>>> items;
  for (const auto& a : corpus) {
    std::vector<float> f(kEmbeddingDim);
    for (auto& x : f) x = static_cast<float>(uniform_real(rng, -1.0, 1.0));
    vectors.push_back({std::vector<double>(f.begin(), f.end())});
    items.emplace_back(a.id, f);
  }
  const auto index = build_index(corpus, vectors, 0);
  std::size_t mismatches = 0, compared = 0;
  for (int q = 0; q < 100; ++q) {
    std::vector<float> qf(kEmbeddingDim);
    for (auto& x : qf) x = static_cast<float>(uniform_real(rng, -1.0, 1.0));
    const std::vector<double> qd(qf.begin(), qf.end());
    for (std::size_t k : {1, 10}) {
      const auto got = index.top_k(qd, std::nullopt, k);
      const auto want = oracle::brute_top_k(items, qf, k);
      ++compared;
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i].id == want[i].first;
      mismatches += same ? 0 : 1;
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatching rankings");
  o.detail << compared << " rankings compared, " << mismatches << " mismatches";
}

// ---- BM25 -----------------------------------------------------------------------

void bm25_exactness(Verdict& o) {
  using testutil::make_address;
  const std::vector<NormalizedAddress> corpus{make_address("d1", "Rua", "das Flores", "12", 1000, 1, "Lisboa"),
                                              make_address("d2", "Rua", "Direita", "5", 1000, 2, "Lisboa"),
                                              make_address("d3", "Avenida", "da Liberdade", "12", 4715, 22, "Braga")};
  const auto index = build_lexical_index(corpus);
  const std::map<std::vector<std::string>, std::vector<double>> expected{
      {{"flores", "12"}, {1.418907464310476, 0.0, 0.45966125109607386}},
      {{"lisboa", "1000"}, {0.9193225021921477, 0.984300794231907, 0.0}},
  };
  double worst = 0;
  for (const auto& [query, scores] : expected) {
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      worst = std::max(worst, std::abs(bm25_score(index, query, corpus[d].id) - scores[d]));
    }
  }
  o.require(worst <= 1e-9, "score off by more than 1e-9");
  o.detail << "6 scores, max abs error " << worst;
}

// ---- string metrics -----------------------------------------------------------

// Every string over `alphabet` of length <= max_len, visited depth first so a
// caller can extend per-prefix state one character at a time.
template <typename Visit>
void for_each_string(std::string_view alphabet, std::size_t max_len, std::string& buf, const Visit& visit) {
  visit(buf);
  if (buf.size() == max_len) return;
  for (char c : alphabet) {
    buf.push_back(c);
    for_each_string(alphabet, max_len, buf, visit);
    buf.pop_back();
  }
}

void string_metric_oracles(Verdict& o) {
  const std::string alphabet = "abc";
  const std::size_t max_len = 8;
  std::vector<std::string> all;
  std::string buf;
  for_each_string(alphabet, max_len, buf, [&](const std::string& s) { all.push_back(s); });

  std::size_t pairs = 0, mismatches = 0;
  for (const auto& a : all) {
    const std::size_t m = a.size();
    // lev[d] and ind[d] are DP rows for the current prefix of b at depth d.
    std::vector<std::vector<std::size_t>> lev(max_len + 1, std::vector<std::size_t>(m + 1));
    std::vector<std::vector<std::size_t>> ind(max_len + 1, std::vector<std::size_t>(m + 1));
    for (std::size_t i = 0; i <= m; ++i) lev[0][i] = ind[0][i] = i;
    std::string b;
    for_each_string(alphabet, max_len, b, [&](const std::string& s) {
      const std::size_t d = s.size();
      if (d > 0) {
        const char c = s[d - 1];
        lev[d][0] = ind[d][0] = d;
        for (std::size_t i = 1; i <= m; ++i) {
          const bool eq = a[i - 1] == c;
          lev[d][i] = std::min({lev[d - 1][i] + 1, lev[d][i - 1] + 1, lev[d - 1][i - 1] + (eq ? 0 : 1)});
          ind[d][i] = std::min({ind[d - 1][i] + 1, ind[d][i - 1] + 1, ind[d - 1][i - 1] + (eq ? 0 : 2)});
        }
      }
      ++pairs;
      const std::size_t want_lev = lev[d][m], want_ind = ind[d][m];
      if (levenshtein(a, s) != want_lev || indel_distance(a, s) != want_ind ||
          similarity_ratio(a, s).value != oracle::ratio_from(m + d, want_ind)) {
        if (mismatches++ < 3) o.detail << "mismatch '" << a << "' '" << s << "'; ";
      }
    });
  }
  o.require(mismatches == 0, "character metrics disagree with the DP oracle");

  // Token metrics: exhaustive over {a, b, space} up to length 6.
  std::vector<std::string> token_strings;
  buf.clear();
  for_each_string("ab ", 6, buf, [&](const std::string& s) { token_strings.push_back(s); });
  std::size_t token_pairs = 0, token_mismatches = 0;
  for (const auto& a : token_strings) {
    for (const auto& b : token_strings) {
      ++token_pairs;
      if (token_sort_ratio(a, b).value != oracle::token_sort(a, b) ||
          token_set_ratio(a, b).value != oracle::token_set(a, b)) {
        ++token_mismatches;
      }
    }
  }
  o.require(token_mismatches == 0, "token metrics disagree with the oracle");

  Rng rng(5);
  const std::vector<std::string> vocab{"rua", "das", "flores", "12", "lisboa", "1000", "001", "av", "sol", "3a"};
  std::size_t perm_failures = 0;
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> ta, tb;
    for (std::size_t k = 0, n = 1 + uniform_index(rng, 6); k < n; ++k) ta.push_back(vocab[uniform_index(rng, 10)]);
    for (std::size_t k = 0, n = 1 + uniform_index(rng, 6); k < n; ++k) tb.push_back(vocab[uniform_index(rng, 10)]);
    const auto base = token_sort_ratio(oracle::join(ta), oracle::join(tb));
    shuffle(ta, rng);
    shuffle(tb, rng);
    perm_failures += token_sort_ratio(oracle::join(ta), oracle::join(tb)) == base ? 0 : 1;
  }
  o.require(perm_failures == 0, "token_sort_ratio changed under permutation");
  o.detail << pairs << " character pairs (" << mismatches << " mismatches), " << token_pairs << " token pairs ("
           << token_mismatches << "), 500 permutations (" << perm_failures << ")";
}

// ---- end-to-end desk pipeline --------------------------------------------------

void desk_pipeline(Verdict& o) {
  const DeskConfig cfg;
  const auto data = make_desk_data(cfg);
  o.require(data.corpus.size() == 5000 && data.queries.size() == 2000, "dataset size");
  const auto run = run_desk_training(data, cfg, 1);

  std::map<NegCategory, std::size_t> cats;
  std::size_t pos = 0, neg = 0;
  for (const auto& p : run.biencoder_pairs) {
    (p.label == 1 ? pos : neg)++;
    if (p.label == 0) ++cats[p.neg_category];
  }
  o.require(pos == neg, "bi-encoder pairs not 1:1");
  double worst_share = 0;
  for (auto c : {NegCategory::kEasy, NegCategory::kHard, NegCategory::kVeryHard}) {
    worst_share = std::max(worst_share, std::abs(static_cast<double>(cats[c]) / static_cast<double>(neg) - 1.0 / 3));
  }
  o.require(worst_share <= 0.05, "negative category mix off by more than 5 points");

  std::size_t ce_pos = 0, ce_neg = 0;
  for (const auto& p : run.crossencoder_pairs) (p.label == 1 ? ce_pos : ce_neg)++;
  const double ratio = static_cast<double>(ce_neg) / static_cast<double>(ce_pos);
  o.require(ratio >= 8.5 && ratio <= 9.0, "cross-encoder ratio outside [8.5, 9]");

  const auto& r = run.report;
  const double r1 = r.recall_at.at(1), r10 = r.recall_at.at(10);
  o.require(r10 >= r1, "recall@10 < recall@1");
  o.require(r10 >= 90.0, "recall@10 below 90%");
  o.require(r.door_acc_filtered.has_value() && *r.door_acc_filtered >= r.door_acc_nofilter,
            "filtered door accuracy below unfiltered");

  const auto bm25 = bm25_decisions(data.split.test, *run.engine, cfg.pipeline.top_k, true);
  const auto bm25_report = evaluate(bm25, make_gold_map(data.split.test), make_address_lookup(data.corpus),
                                    cfg.pipeline.cutoff_bice);
  o.require(r.door_acc_nofilter >= bm25_report.door_acc_nofilter, "reranked door accuracy below BM25");

  o.detail << "bi pairs " << pos << ":" << neg << " (max category deviation " << worst_share * 100 << " pts), ce ratio 1:"
           << ratio << ", recall@1 " << r1 << ", recall@10 " << r10 << ", door " << r.door_acc_nofilter
           << " -> filtered " << r.door_acc_filtered.value_or(-1) << " (" << r.discarded_pct << "% discarded), bm25 door "
           << bm25_report.door_acc_nofilter;
}

// ---- sharding speedup -----------------------------------------------------------

void sharding_speedup(Verdict& o) {
  CorpusConfig cc;
  cc.n_addresses = 100000;
  cc.seed = 8;
  const auto corpus = generate_corpus(cc);
  Rng rng(8);
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) vectors.push_back({random_vec(rng, kEmbeddingDim)});
  const auto bi = init_projection(kDefaultFeatureSpace, 9);
  RerankerWeights rw;
  rw.coefficients = {4.0, 2.0, 1.0, 1.0, 1.0, 3.0};
  rw.bias = -6.0;
  const MatchEngine engine(build_index(corpus, vectors, bi.fingerprint()), bi, rw);
  vectors.clear();
  const auto queries = generate_queries(corpus, 200, NoiseConfig::realistic(10), 11);
  const PipelineConfig cfg;
  const auto with = bench_throughput(engine, queries, cfg, true, 3);
  const auto without = bench_throughput(engine, queries, cfg, false, 3);
  const double speedup = with.iterations_per_second / without.iterations_per_second;
  o.require(speedup >= 3.0, "speedup below 3x");
  o.detail << "100000 entries, " << with.iterations_per_second << " it/s filtered vs "
           << without.iterations_per_second << " it/s unfiltered, speedup " << speedup << "x";
}

// ---- stability ------------------------------------------------------------------

void stability(Verdict& o) {
  const DeskConfig cfg;
  const auto data = make_desk_data(cfg);
  const std::vector<std::uint64_t> seeds{11, 23, 37, 41, 59};
  const auto summary = multi_seed_stability(
      [&](std::uint64_t seed) {
        const auto run = run_desk_training(data, cfg, seed);
        return RunMetrics{seed, run.report.artery_acc_nofilter, run.report.door_acc_nofilter};
      },
      seeds);
  o.require(summary.stddev_door <= 2.0, "door accuracy std above 2.0 points");
  const bool valid_median = summary.median_run_index < summary.runs.size() &&
                            summary.runs[summary.median_run_index].door_acc == summary.median_door;
  o.require(valid_median, "median run does not carry the median door accuracy");
  o.detail << "door accuracy";
  for (const auto& r : summary.runs) o.detail << ' ' << r.door_acc;
  o.detail << ", std " << summary.stddev_door << ", median " << summary.median_door << " (seed "
           << summary.runs[std::min(summary.median_run_index, summary.runs.size() - 1)].seed << ")";
}

// ---- service contract -------------------------------------------------------------

const std::vector<NormalizedAddress>& service_corpus() {
  static const auto c = [] {
    CorpusConfig cc;
    cc.n_addresses = 400;
    cc.seed = 12;
    return generate_corpus(cc);
  }();
  return c;
}

std::unique_ptr<MatchService> make_service(const testutil::TempDir& dir, double cutoff) {
  ServiceConfig cfg;
  cfg.pipeline.cutoff_bice = cutoff;
  cfg.review_log = dir.file("review.jsonl");
  cfg.feedback_pairs = dir.file("feedback.jsonl");
  RerankerWeights rw;
  rw.coefficients = {4.0, 2.0, 1.0, 1.0, 1.0, 3.0};
  rw.bias = -6.0;
  const auto bi = init_projection(kDefaultFeatureSpace, 13);
  auto svc = std::make_unique<MatchService>(cfg, bi, rw);
  svc->install(precompute_store(service_corpus(), bi));
  return svc;
}

std::string match_body(const std::string& raw) { return json{{"raw", raw}}.dump(); }

void review_transitions(Verdict& o) {
  // Every (start status, request) combination; only the two pending transitions succeed.
  const std::vector<std::string> actions{"choose", "undeliverable", "neither", "both", "unknown"};
  auto body_for = [](const std::string& a, const std::string& chosen) {
    if (a == "choose") return json{{"chosen_id", chosen}}.dump();
    if (a == "undeliverable") return json{{"undeliverable", true}}.dump();
    if (a == "neither") return std::string("{}");
    if (a == "both") return json{{"chosen_id", chosen}, {"undeliverable", true}}.dump();
    return json{{"chosen_id", "no-such-address"}}.dump();
  };
  std::size_t cases = 0, bad = 0;
  for (const auto start : {ReviewStatus::kPending, ReviewStatus::kResolved, ReviewStatus::kUndeliverable}) {
    for (const auto& action : actions) {
      testutil::TempDir dir("acc-sm");
      auto svc = make_service(dir, 1.0);
      const auto m = svc->post_match(match_body(render_normalized(service_corpus()[3]))).json();
      const auto id = m["review_item_id"].get<std::string>();
      const auto chosen = m["best_id"].get<std::string>();
      if (start == ReviewStatus::kResolved) svc->post_resolve(id, body_for("choose", chosen));
      if (start == ReviewStatus::kUndeliverable) svc->post_resolve(id, body_for("undeliverable", chosen));
      const auto before = svc->queue().get(id);
      const int status = svc->post_resolve(id, body_for(action, chosen)).status;
      const auto after = svc->queue().get(id);
      int want = 0;
      if (start != ReviewStatus::kPending) {
        want = action == "neither" || action == "both" ? 400 : 409;
      } else {
        want = action == "choose" || action == "undeliverable" ? 200 : 400;
      }
      bool ok = status == want && before->status == start;
      if (want == 200) {
        ok = ok && after->status == (action == "choose" ? ReviewStatus::kResolved : ReviewStatus::kUndeliverable);
      } else {
        ok = ok && after->status == before->status && after->resolution == before->resolution;
      }
      ++cases;
      bad += ok ? 0 : 1;
    }
  }
  o.require(bad == 0, std::to_string(bad) + " transition cases wrong");
  o.detail << cases << " transition cases; ";
}

void crash_replay(Verdict& o) {
  testutil::TempDir dir("acc-replay");
  std::vector<std::string> ids;
  std::string best;
  {
    auto svc = make_service(dir, 1.0);
    for (int i = 0; i < 5; ++i) {
      ids.push_back(svc->post_match(match_body(render_normalized(service_corpus()[i]))).json()["review_item_id"]);
    }
    best = svc->queue().get(ids[1])->decision.best.id;
    svc->post_resolve(ids[1], json{{"chosen_id", best}}.dump());
    svc->post_resolve(ids[2], R"({"undeliverable":true})");
  }
  const auto log = testutil::read_all(dir.file("review.jsonl"));
  {
    std::ofstream out(dir.file("review.jsonl"), std::ios::app | std::ios::binary);
    out << R"({"event":"resolve","item_id":")" << ids[0];
  }
  bool ok = false;
  {
    auto svc = make_service(dir, 1.0);
    const auto& q = svc->queue();
    ok = q.size() == 5 && q.get(ids[0])->status == ReviewStatus::kPending &&
         q.get(ids[1])->status == ReviewStatus::kResolved && q.get(ids[1])->resolution == best &&
         q.get(ids[2])->status == ReviewStatus::kUndeliverable && testutil::read_all(dir.file("review.jsonl")) == log;
    ok = ok && svc->post_resolve(ids[0], R"({"undeliverable":true})").status == 200;
  }
  ok = ok && ReviewQueue(dir.file("review.jsonl")).get(ids[0])->status == ReviewStatus::kUndeliverable;
  o.require(ok, "replay lost or altered state");
  o.detail << "replay after torn write " << (ok ? "ok" : "wrong") << "; ";
}

void concurrent_match(Verdict& o) {
  testutil::TempDir dir("acc-conc");
  auto svc = make_service(dir, 0.9);
  const auto queries = generate_queries(service_corpus(), 200, NoiseConfig::realistic(14), 15);
  auto strip = [](json j) {
    j.erase("timings_us");
    j.erase("review_item_id");
    return j.dump();
  };
  std::vector<std::string> sequential;
  for (const auto& q : queries) sequential.push_back(strip(svc->post_match(match_body(q.raw)).json()));
  std::vector<std::string> concurrent(queries.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < queries.size(); i += 8) {
        concurrent[i] = strip(svc->post_match(match_body(queries[i].raw)).json());
      }
    });
  }
  for (auto& th : threads) th.join();
  std::size_t diff = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) diff += concurrent[i] == sequential[i] ? 0 : 1;
  o.require(diff == 0, std::to_string(diff) + " concurrent responses differ");
  o.detail << "200 queries on 8 threads, " << diff << " differences";
}

void service_contract(Verdict& o) {
  review_transitions(o);
  crash_replay(o);
  concurrent_match(o);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"loss-unit-cases", 1, loss_unit_cases},
      {"gradient-fidelity", 10, gradient_fidelity},
      {"retrieval-exactness", 30, retrieval_exactness},
      {"bm25-exactness", 1, bm25_exactness},
      {"string-metric-oracles", 60, string_metric_oracles},
      {"desk-pipeline", 600, desk_pipeline},
      {"sharding-speedup", 300, sharding_speedup},
      {"stability", 1800, stability},
      {"service-contract", 120, service_contract},
  };
  const std::set<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.name)) continue;
    Verdict o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < c.budget_s, "over the time budget");
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " (" << secs << " s, budget " << c.budget_s
              << " s): " << o.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
