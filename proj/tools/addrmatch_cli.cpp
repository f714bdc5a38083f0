// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

// addrmatch: operator entry points. Every subcommand prints one JSON manifest
// on stdout; errors go to stderr with exit 1 (operation) or 2 (usage).

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "addrmatch/dataset.h"
#include "addrmatch/embedding.h"
#include "addrmatch/evaluation.h"
#include "addrmatch/pipeline.h"
#include "addrmatch/random.h"
#include "addrmatch/reranker.h"
#include "addrmatch/service.h"
#include "addrmatch/vector_index.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace addrmatch;

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kStoreFile = "store.abes";
constexpr const char* kCorpusFile = "corpus.jsonl";
constexpr const char* kWeightsFile = "biencoder.abmw";
constexpr const char* kRerankerFile = "reranker.json";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_fingerprint(const std::string& path) { return hex64(fnv1a64(slurp(path))); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
}

// One manifest per run: command, config, seeds, paths, timings, fingerprints.
class Manifest {
 public:
  Manifest(std::string command, bool timings) : timings_(timings), t0_(Clock::now()) {
    j_["command"] = std::move(command);
    j_["config"] = json::object();
    j_["seeds"] = json::object();
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
    j_["fingerprints"] = json::object();
  }
  json& config() { return j_["config"]; }
  json& results() { return j_["results"]; }
  void seed(const std::string& name, std::uint64_t v) { j_["seeds"][name] = v; }
  void input(const std::string& name, const std::string& path) { j_["inputs"][name] = path; }
  void output(const std::string& name, const std::string& path) {
    j_["outputs"][name] = path;
    j_["fingerprints"][name] = file_fingerprint(path);
  }
  void fingerprint(const std::string& name, const std::string& value) { j_["fingerprints"][name] = value; }
  void stage(const std::string& name, Clock::time_point since) {
    stages_[name] = std::chrono::duration<double, std::milli>(Clock::now() - since).count();
  }
  json finish() {
    if (timings_) {
      stages_["total"] = std::chrono::duration<double, std::milli>(Clock::now() - t0_).count();
      j_["timings_ms"] = stages_;
    }
    return j_;
  }

 private:
  json j_;
  json stages_ = json::object();
  bool timings_;
  Clock::time_point t0_;
};

void emit(const json& j) { std::cout << j.dump() << std::endl; }

NoiseConfig noise_preset(const std::string& name, std::uint64_t seed) {
  if (name == "realistic") return NoiseConfig::realistic(seed);
  if (name == "none") {
    NoiseConfig n;
    n.seed = seed;
    return n;
  }
  throw Error(ErrorCode::kInvalidArgument, "noise preset must be 'realistic' or 'none'");
}

struct IndexBundle {
  ShardedIndex index;
  ProjectionWeights weights;
  std::optional<RerankerWeights> reranker;
  std::vector<NormalizedAddress> corpus;
};

IndexBundle load_index_dir(const std::string& dir, const std::string& reranker_path, bool require_reranker) {
  IndexBundle b;
  const fs::path d(dir);
  b.weights = load_weights((d / kWeightsFile).string());
  auto loaded = load_store(slurp((d / kStoreFile).string()), b.weights.fingerprint());
  if (loaded.fingerprint_mismatch) {
    throw Error(ErrorCode::kCorruptStore, "store was embedded with different bi-encoder weights");
  }
  b.corpus = read_corpus((d / kCorpusFile).string());
  loaded.index.attach_corpus(b.corpus);
  b.index = std::move(loaded.index);
  const auto rr = reranker_path.empty() ? (d / kRerankerFile).string() : reranker_path;
  if (fs::exists(rr)) {
    b.reranker = load_reranker(rr);
  } else if (require_reranker) {
    throw Error(ErrorCode::kIo, "no reranker weights at " + rr + " (train-reranker or --reranker)");
  }
  return b;
}

// ---------------------------------------------------------------- subcommands

struct GenerateOpts {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t queries = 0;
  std::string gold_out;
  std::string noise = "realistic";
  std::string split_dir;
  double bi_fraction = 0.5;
  double ce_fraction = 0.25;
};

json run_generate(const GenerateOpts& o, bool timings) {
  Manifest m("generate-corpus", timings);
  m.config() = {{"n", o.n}, {"queries", o.queries}, {"noise", o.noise}};
  m.seed("corpus", o.seed);
  const auto t0 = Clock::now();
  CorpusConfig cfg;
  cfg.n_addresses = o.n;
  cfg.seed = o.seed;
  const auto corpus = generate_corpus(cfg);
  write_corpus(o.out, corpus);
  m.output("corpus", o.out);
  json results{{"addresses", corpus.size()}};
  if (o.queries > 0) {
    if (o.gold_out.empty()) throw Error(ErrorCode::kInvalidArgument, "--queries needs --gold-out");
    const auto queries = generate_queries(corpus, o.queries, noise_preset(o.noise, o.seed), mix_seed(o.seed, 1));
    write_gold(o.gold_out, queries);
    m.output("gold", o.gold_out);
    m.seed("queries", mix_seed(o.seed, 1));
    results["queries"] = queries.size();
    if (!o.split_dir.empty()) {
      fs::create_directories(o.split_dir);
      const auto split = split_by_gold(queries, o.bi_fraction, o.ce_fraction, mix_seed(o.seed, 2));
      m.seed("split", mix_seed(o.seed, 2));
      m.config()["split"] = {{"biencoder", o.bi_fraction}, {"crossencoder", o.ce_fraction}};
      const std::pair<const char*, const std::vector<UnnormalizedAddress>*> parts[] = {
          {"biencoder", &split.biencoder}, {"crossencoder", &split.crossencoder}, {"test", &split.test}};
      for (const auto& [name, part] : parts) {
        const auto path = (fs::path(o.split_dir) / (std::string(name) + ".jsonl")).string();
        write_gold(path, *part);
        m.output(std::string("split_") + name, path);
        results["split"][name] = part->size();
      }
    }
  } else if (!o.split_dir.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--split-dir needs --queries");
  }
  m.stage("generate", t0);
  m.results() = results;
  return m.finish();
}

struct PairsOpts {
  std::string kind;
  std::string corpus;
  std::string gold;
  std::string index;
  std::uint64_t seed = 1;
  std::string out;
};

json category_counts(const std::vector<TrainingPair>& pairs) {
  json c = json::object();
  std::size_t fallback = 0;
  for (const auto& p : pairs) {
    const auto key = std::string(to_string(p.neg_category));
    c[key] = c.value(key, 0) + 1;
    fallback += p.fallback ? 1 : 0;
  }
  return {{"categories", c}, {"fallbacks", fallback}};
}

json run_build_pairs(const PairsOpts& o, bool timings) {
  Manifest m("build-pairs", timings);
  m.config() = {{"kind", o.kind}};
  m.seed("pairs", o.seed);
  const auto t0 = Clock::now();
  std::vector<TrainingPair> pairs;
  if (o.kind == "bi") {
    if (o.corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "--kind bi needs --corpus");
    const auto corpus = read_corpus(o.corpus);
    m.input("corpus", o.corpus);
    pairs = build_biencoder_pairs(resolve_gold(read_gold(o.gold), corpus), corpus, o.seed);
  } else {
    if (o.index.empty()) throw Error(ErrorCode::kInvalidArgument, "--kind ce needs --index (bi-encoder retrieval)");
    auto b = load_index_dir(o.index, "", false);
    m.input("index", o.index);
    const MatchEngine engine(std::move(b.index), b.weights, std::nullopt);
    pairs = build_crossencoder_pairs(resolve_gold(read_gold(o.gold), b.corpus), engine, o.seed);
  }
  m.input("gold", o.gold);
  write_pairs(o.out, pairs);
  m.output("pairs", o.out);
  m.stage("build", t0);
  std::size_t positives = 0;
  for (const auto& p : pairs) positives += p.label == 1 ? 1 : 0;
  m.results() = {{"pairs", pairs.size()}, {"positives", positives}, {"negatives", pairs.size() - positives}};
  m.results().update(category_counts(pairs));
  return m.finish();
}

struct TrainBiOpts {
  std::string pairs;
  std::string out;
  BiTrainerConfig cfg;
};

json run_train_biencoder(const TrainBiOpts& o, bool timings) {
  Manifest m("train-biencoder", timings);
  m.config() = {{"margin", o.cfg.margin},         {"epochs", o.cfg.epochs},
                {"batch_size", o.cfg.batch_size}, {"learning_rate", o.cfg.learning_rate},
                {"weight_decay", o.cfg.weight_decay}, {"warmup_steps", o.cfg.warmup_steps},
                {"feature_space", o.cfg.feature_space}};
  m.seed("train", o.cfg.seed);
  m.input("pairs", o.pairs);
  const auto t0 = Clock::now();
  const auto result = train_biencoder(read_pairs(o.pairs), o.cfg);
  m.stage("train", t0);
  save_weights(o.out, result.weights);
  m.output("weights", o.out);
  m.fingerprint("weights_content", hex64(result.weights.fingerprint()));
  m.results() = {{"epoch_losses", result.epoch_losses}};
  return m.finish();
}

struct TrainRrOpts {
  std::string pairs;
  std::string index;
  std::string out;
  RerankerTrainConfig cfg;
};

json run_train_reranker(const TrainRrOpts& o, bool timings) {
  Manifest m("train-reranker", timings);
  m.config() = {{"epochs", o.cfg.epochs},
                {"batch_size", o.cfg.batch_size},
                {"learning_rate", o.cfg.learning_rate},
                {"weight_decay", o.cfg.weight_decay},
                {"warmup_steps", o.cfg.warmup_steps}};
  m.seed("train", o.cfg.seed);
  m.input("pairs", o.pairs);
  m.input("index", o.index);
  auto b = load_index_dir(o.index, "", false);
  const MatchEngine engine(std::move(b.index), b.weights, std::nullopt);
  const auto t0 = Clock::now();
  const auto examples = make_reranker_examples(read_pairs(o.pairs), engine);
  const auto result = train_reranker(examples, o.cfg);
  m.stage("train", t0);
  const auto out = o.out.empty() ? (fs::path(o.index) / kRerankerFile).string() : o.out;
  save_reranker(out, result.weights);
  m.output("reranker", out);
  m.results() = {{"examples", examples.size()},
                 {"initial_loss", result.initial_loss},
                 {"epoch_losses", result.epoch_losses},
                 {"weights", to_json(result.weights)}};
  return m.finish();
}

struct EmbedOpts {
  std::string corpus;
  std::string weights;
  std::string out;
};

json run_embed_db(const EmbedOpts& o, bool timings) {
  Manifest m("embed-db", timings);
  m.input("corpus", o.corpus);
  m.input("weights", o.weights);
  const auto corpus = read_corpus(o.corpus);
  const auto weights = load_weights(o.weights);
  const auto t0 = Clock::now();
  const auto index = precompute_store(corpus, weights);
  m.stage("embed", t0);
  fs::create_directories(o.out);
  const fs::path d(o.out);
  write_text((d / kStoreFile).string(), save_store(index));
  write_corpus((d / kCorpusFile).string(), corpus);
  save_weights((d / kWeightsFile).string(), weights);
  m.output("store", (d / kStoreFile).string());
  m.output("corpus", (d / kCorpusFile).string());
  m.output("weights", (d / kWeightsFile).string());
  m.fingerprint("index", index_fingerprint(index));
  json shards = json::array();
  for (int s = 1; s <= kShardCount; ++s) shards.push_back(index.shard(s).size());
  m.results() = {{"addresses", index.size()}, {"shard_sizes", shards}};
  return m.finish();
}

struct MatchOpts {
  std::string index;
  std::string reranker;
  std::string raw;
  std::string queries;
  std::string out;
  std::string mode = "bice";
  std::optional<double> cutoff;
  std::size_t top_k = 10;
  bool no_cp4_filter = false;
};

PipelineConfig pipeline_from(const std::string& mode, std::optional<double> cutoff, std::size_t top_k,
                             bool no_filter) {
  PipelineConfig cfg;
  cfg.mode = match_mode_from_string(mode);
  cfg.top_k = top_k;
  cfg.cp4_filter = !no_filter;
  if (cutoff) (cfg.mode == MatchMode::kBiCe ? cfg.cutoff_bice : cfg.cutoff_bi_only) = *cutoff;
  cfg.validate();
  return cfg;
}

json run_match(const MatchOpts& o, bool timings) {
  Manifest m("match", timings);
  const auto cfg = pipeline_from(o.mode, o.cutoff, o.top_k, o.no_cp4_filter);
  m.config() = {{"mode", o.mode}, {"cutoff", cfg.active_cutoff()}, {"top_k", cfg.top_k}, {"cp4_filter", cfg.cp4_filter}};
  m.input("index", o.index);
  auto b = load_index_dir(o.index, o.reranker, cfg.mode == MatchMode::kBiCe);
  const MatchEngine engine(std::move(b.index), b.weights, b.reranker);
  if (!o.raw.empty()) {
    // A single query prints the decision itself, with the manifest attached.
    const auto d = match(UnnormalizedAddress{o.raw, std::nullopt}, engine, cfg);
    auto out = to_json(d, timings);
    out["manifest"] = m.finish();
    return out;
  }
  m.input("queries", o.queries);
  const auto queries = read_gold(o.queries);
  const auto t0 = Clock::now();
  const auto results = match_batch(queries, engine, cfg);
  m.stage("match", t0);
  std::ofstream out(o.out, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + o.out);
  std::size_t accepted = 0, failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].decision) {
      auto j = to_json(*results[i].decision, timings);
      accepted += results[i].decision->outcome == Outcome::kAccepted ? 1 : 0;
      out << j.dump() << '\n';
    } else {
      ++failed;
      std::cerr << "query " << i + 1 << ": " << results[i].error << '\n';
    }
  }
  out.close();
  m.output("decisions", o.out);
  m.results() = {{"queries", queries.size()},
                 {"accepted", accepted},
                 {"for_review", queries.size() - accepted - failed},
                 {"failed", failed}};
  return m.finish();
}

struct EvalOpts {
  std::string decisions;
  std::string gold;
  std::string corpus;
  std::string index;
  double cutoff = 0.90;
  std::vector<double> sweep;
  std::string histogram_out;
};

json run_evaluate(const EvalOpts& o, bool timings) {
  Manifest m("evaluate", timings);
  m.config() = {{"cutoff", o.cutoff}, {"sweep", o.sweep}};
  m.input("decisions", o.decisions);
  m.input("gold", o.gold);
  std::string corpus_path = o.corpus;
  if (corpus_path.empty()) {
    if (o.index.empty()) throw Error(ErrorCode::kInvalidArgument, "give --corpus or --index");
    corpus_path = (fs::path(o.index) / kCorpusFile).string();
  }
  m.input("corpus", corpus_path);
  std::vector<MatchDecision> decisions;
  for (const auto& j : read_jsonl(o.decisions)) decisions.push_back(decision_from_json(j));
  const auto gold = make_gold_map(read_gold(o.gold));
  const auto lookup = make_address_lookup(read_corpus(corpus_path));
  m.results() = to_json(evaluate(decisions, gold, lookup, o.cutoff));
  if (!o.sweep.empty()) {
    json sweep = json::array();
    for (const auto& r : sweep_cutoffs(decisions, gold, lookup, o.sweep)) sweep.push_back(to_json(r));
    m.results()["sweep"] = sweep;
  }
  if (!o.histogram_out.empty()) {
    write_text(o.histogram_out, histogram(decisions).to_csv());
    m.output("histogram", o.histogram_out);
  }
  return m.finish();
}

struct BenchOpts {
  std::string index;
  std::string reranker;
  std::string queries;
  std::string mode = "bice";
  int repetitions = 3;
  std::size_t limit = 0;
};

json run_bench(const BenchOpts& o, bool timings) {
  Manifest m("bench", timings);
  m.config() = {{"mode", o.mode}, {"repetitions", o.repetitions}};
  m.input("index", o.index);
  m.input("queries", o.queries);
  const auto cfg = pipeline_from(o.mode, std::nullopt, 10, false);
  auto b = load_index_dir(o.index, o.reranker, cfg.mode == MatchMode::kBiCe);
  const MatchEngine engine(std::move(b.index), b.weights, b.reranker);
  auto queries = read_gold(o.queries);
  if (o.limit > 0 && queries.size() > o.limit) queries.resize(o.limit);
  const auto with = bench_throughput(engine, queries, cfg, true, o.repetitions);
  const auto without = bench_throughput(engine, queries, cfg, false, o.repetitions);
  // Throughput numbers are timings by nature; --no-timings reports shape only.
  if (timings) {
    m.results() = {{"with_cp4_filter", to_json(with)},
                   {"without_cp4_filter", to_json(without)},
                   {"speedup", with.iterations_per_second / without.iterations_per_second}};
  } else {
    m.results() = {{"queries", queries.size()}};
  }
  return m.finish();
}

struct ServeOpts {
  std::string index;
  std::string reranker;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string review_log;
  std::string feedback_pairs;
  std::string mode = "bice";
  std::optional<double> cutoff;
  std::string sidecar_url;
  std::string sidecar_role = "both";
  std::string sidecar_fallback = "error";
  int sidecar_timeout_ms = 2000;
};

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

json run_serve(const ServeOpts& o, bool timings) {
  Manifest m("serve", timings);
  ServiceConfig cfg;
  cfg.pipeline = pipeline_from(o.mode, o.cutoff, 10, false);
  cfg.review_log = o.review_log;
  cfg.feedback_pairs = o.feedback_pairs;
  if (!o.sidecar_url.empty()) {
    cfg.sidecar.enabled = true;
    cfg.sidecar.base_url = o.sidecar_url;
    cfg.sidecar.role = sidecar_role_from_string(o.sidecar_role);
    if (o.sidecar_fallback != "error" && o.sidecar_fallback != "builtin") {
      throw Error(ErrorCode::kInvalidArgument, "--sidecar-fallback must be error or builtin");
    }
    cfg.sidecar.fallback = o.sidecar_fallback == "builtin" ? SidecarFallback::kBuiltin : SidecarFallback::kError;
    cfg.sidecar.timeout_ms = o.sidecar_timeout_ms;
  }
  auto b = load_index_dir(o.index, o.reranker, cfg.pipeline.mode == MatchMode::kBiCe && !cfg.sidecar.scores());
  MatchService service(cfg, b.weights, b.reranker);
  service.install(std::move(b.index));
  HttpServer server(service);
  const int port = server.bind(o.host, o.port);
  m.config() = {{"host", o.host}, {"port", port}, {"mode", o.mode}, {"cutoff", cfg.pipeline.active_cutoff()}};
  m.input("index", o.index);
  m.fingerprint("index", *service.current_fingerprint());
  // Announce the bound port before blocking so callers can connect.
  std::cerr << "listening on " << o.host << ":" << port << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.run();
  g_server = nullptr;
  m.results() = {{"review_items", service.queue().size()}};
  return m.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"addrmatch: bi-encoder + cross-encoder postal address matching"};
  app.require_subcommand(1);
  bool no_timings = false;
  app.add_flag("--no-timings", no_timings, "Omit timing fields so outputs are byte-identical across runs");

  GenerateOpts gen;
  auto* c_gen = app.add_subcommand("generate-corpus", "Synthetic normalized corpus (and noisy gold queries)");
  c_gen->add_option("--n", gen.n, "Number of addresses")->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gen.seed, "Corpus seed (queries and split derive from it)");
  c_gen->add_option("--out", gen.out, "Corpus JSONL output")->required();
  c_gen->add_option("--queries", gen.queries, "Number of noisy queries to derive");
  c_gen->add_option("--gold-out", gen.gold_out, "Gold JSONL output {raw, gold_id}");
  c_gen->add_option("--noise", gen.noise, "Noise preset: realistic | none");
  c_gen->add_option("--split-dir", gen.split_dir, "Write biencoder/crossencoder/test gold splits here");
  c_gen->add_option("--bi-fraction", gen.bi_fraction, "Share of gold ids for bi-encoder training");
  c_gen->add_option("--ce-fraction", gen.ce_fraction, "Share of gold ids for reranker training");

  PairsOpts pairs;
  auto* c_pairs = app.add_subcommand("build-pairs", "Training pairs for the bi-encoder (bi) or reranker (ce)");
  c_pairs->add_option("--kind", pairs.kind, "bi | ce")->required()->check(CLI::IsMember({"bi", "ce"}));
  c_pairs->add_option("--gold", pairs.gold, "Gold JSONL")->required();
  c_pairs->add_option("--corpus", pairs.corpus, "Corpus JSONL (kind bi)");
  c_pairs->add_option("--index", pairs.index, "Index directory for retrieved negatives (kind ce)");
  c_pairs->add_option("--seed", pairs.seed, "Sampling seed");
  c_pairs->add_option("--out", pairs.out, "Pairs JSONL output")->required();

  TrainBiOpts tbi;
  auto* c_tbi = app.add_subcommand("train-biencoder", "Train the projection head with the contrastive loss");
  c_tbi->add_option("--pairs", tbi.pairs, "Bi-encoder pairs JSONL")->required();
  c_tbi->add_option("--out", tbi.out, "Weights output (.abmw)")->required();
  c_tbi->add_option("--seed", tbi.cfg.seed, "Initialization and shuffling seed");
  c_tbi->add_option("--epochs", tbi.cfg.epochs, "Epochs")->check(CLI::PositiveNumber);
  c_tbi->add_option("--batch-size", tbi.cfg.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  c_tbi->add_option("--lr", tbi.cfg.learning_rate, "Peak learning rate");
  c_tbi->add_option("--weight-decay", tbi.cfg.weight_decay, "Decoupled weight decay");
  c_tbi->add_option("--warmup", tbi.cfg.warmup_steps, "Linear warmup steps");
  c_tbi->add_option("--margin", tbi.cfg.margin, "Contrastive margin");
  c_tbi->add_option("--feature-space", tbi.cfg.feature_space, "Hashed feature space size");

  TrainRrOpts trr;
  auto* c_trr = app.add_subcommand("train-reranker", "Train the pair scorer on cross-encoder pairs");
  c_trr->add_option("--pairs", trr.pairs, "Cross-encoder pairs JSONL")->required();
  c_trr->add_option("--index", trr.index, "Index directory (features use its embeddings and BM25)")->required();
  c_trr->add_option("--out", trr.out, "Weights output (default: <index>/reranker.json)");
  c_trr->add_option("--seed", trr.cfg.seed, "Initialization and shuffling seed");
  c_trr->add_option("--epochs", trr.cfg.epochs, "Epochs")->check(CLI::PositiveNumber);
  c_trr->add_option("--batch-size", trr.cfg.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  c_trr->add_option("--lr", trr.cfg.learning_rate, "Peak learning rate");
  c_trr->add_option("--weight-decay", trr.cfg.weight_decay, "Decoupled weight decay");
  c_trr->add_option("--warmup", trr.cfg.warmup_steps, "Linear warmup steps");

  EmbedOpts emb;
  auto* c_emb = app.add_subcommand("embed-db", "Pre-embed the corpus into a sharded index directory");
  c_emb->add_option("--corpus", emb.corpus, "Corpus JSONL")->required();
  c_emb->add_option("--weights", emb.weights, "Bi-encoder weights (.abmw)")->required();
  c_emb->add_option("--out", emb.out, "Index directory")->required();

  MatchOpts mo;
  std::optional<double> match_cutoff;
  auto* c_match = app.add_subcommand("match", "Match one raw address or a query file");
  c_match->add_option("--index", mo.index, "Index directory")->required();
  c_match->add_option("--reranker", mo.reranker, "Reranker weights (default: <index>/reranker.json)");
  auto* o_raw = c_match->add_option("--raw", mo.raw, "One unnormalized address");
  auto* o_queries = c_match->add_option("--queries", mo.queries, "Query JSONL {raw[, gold_id]}");
  c_match->add_option("--out", mo.out, "Decisions JSONL output (with --queries)");
  c_match->add_option("--mode", mo.mode, "bi | bice")->check(CLI::IsMember({"bi", "bice"}));
  c_match->add_option("--cutoff", match_cutoff, "Acceptance cutoff for the chosen mode")->check(CLI::Range(0.0, 1.0));
  c_match->add_option("--top-k", mo.top_k, "Candidates retrieved")->check(CLI::PositiveNumber);
  c_match->add_flag("--no-cp4-filter", mo.no_cp4_filter, "Scan all shards");
  o_raw->excludes(o_queries);

  EvalOpts ev;
  auto* c_eval = app.add_subcommand("evaluate", "Accuracy, recall@k and discards of a decisions file");
  c_eval->add_option("--decisions", ev.decisions, "Decisions JSONL")->required();
  c_eval->add_option("--gold", ev.gold, "Gold JSONL")->required();
  c_eval->add_option("--corpus", ev.corpus, "Corpus JSONL (for artery/door keys)");
  c_eval->add_option("--index", ev.index, "Index directory (uses its corpus)");
  c_eval->add_option("--cutoff", ev.cutoff, "Confidence cutoff")->check(CLI::Range(0.0, 1.0));
  c_eval->add_option("--sweep", ev.sweep, "Ascending cutoff grid")->delimiter(',');
  c_eval->add_option("--histogram-out", ev.histogram_out, "Confidence histogram CSV");

  BenchOpts bench;
  auto* c_bench = app.add_subcommand("bench", "Per-query throughput with and without the CP4 filter");
  c_bench->add_option("--index", bench.index, "Index directory")->required();
  c_bench->add_option("--reranker", bench.reranker, "Reranker weights");
  c_bench->add_option("--queries", bench.queries, "Query JSONL")->required();
  c_bench->add_option("--mode", bench.mode, "bi | bice")->check(CLI::IsMember({"bi", "bice"}));
  c_bench->add_option("--repetitions", bench.repetitions, "Repetitions (>= 3)")->check(CLI::Range(3, 1000));
  c_bench->add_option("--limit", bench.limit, "Use at most this many queries");

  ServeOpts srv;
  std::optional<double> serve_cutoff;
  auto* c_serve = app.add_subcommand("serve", "HTTP matching and review service");
  c_serve->add_option("--index", srv.index, "Index directory")->required();
  c_serve->add_option("--reranker", srv.reranker, "Reranker weights");
  c_serve->add_option("--host", srv.host, "Listen address");
  c_serve->add_option("--port", srv.port, "Listen port (0 = any)")->check(CLI::Range(0, 65535));
  c_serve->add_option("--review-log", srv.review_log, "Review event log (JSONL, append-only)");
  c_serve->add_option("--feedback-pairs", srv.feedback_pairs, "Pairs file receiving resolved reviews");
  c_serve->add_option("--mode", srv.mode, "Default mode: bi | bice")->check(CLI::IsMember({"bi", "bice"}));
  c_serve->add_option("--cutoff", serve_cutoff, "Cutoff override for the default mode")->check(CLI::Range(0.0, 1.0));
  c_serve->add_option("--sidecar-url", srv.sidecar_url, "Transformer sidecar base URL (enables it)");
  c_serve->add_option("--sidecar-role", srv.sidecar_role, "embedder | scorer | both")
      ->check(CLI::IsMember({"embedder", "scorer", "both"}));
  c_serve->add_option("--sidecar-fallback", srv.sidecar_fallback, "error | builtin")
      ->check(CLI::IsMember({"error", "builtin"}));
  c_serve->add_option("--sidecar-timeout-ms", srv.sidecar_timeout_ms, "Sidecar timeout")->check(CLI::PositiveNumber);

  for (auto* sub : app.get_subcommands({})) {
    sub->add_flag("--no-timings", no_timings, "Omit timing fields");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const bool timings = !no_timings;
  try {
    if (c_match->parsed() && mo.raw.empty() && (mo.queries.empty() || mo.out.empty())) {
      std::cerr << "match: give --raw, or --queries with --out\n";
      return 2;
    }
    if (c_gen->parsed()) emit(run_generate(gen, timings));
    if (c_pairs->parsed()) emit(run_build_pairs(pairs, timings));
    if (c_tbi->parsed()) emit(run_train_biencoder(tbi, timings));
    if (c_trr->parsed()) emit(run_train_reranker(trr, timings));
    if (c_emb->parsed()) emit(run_embed_db(emb, timings));
    if (c_match->parsed()) {
      mo.cutoff = match_cutoff;
      emit(run_match(mo, timings));
    }
    if (c_eval->parsed()) emit(run_evaluate(ev, timings));
    if (c_bench->parsed()) emit(run_bench(bench, timings));
    if (c_serve->parsed()) {
      srv.cutoff = serve_cutoff;
      emit(run_serve(srv, timings));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
