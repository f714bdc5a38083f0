// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/workflow.h"

#include "addrmatch/random.h"

namespace addrmatch {

DeskData make_desk_data(const DeskConfig& cfg) {
  DeskData data;
  CorpusConfig corpus_cfg;
  corpus_cfg.n_addresses = cfg.n_addresses;
  corpus_cfg.seed = cfg.data_seed;
  data.corpus = generate_corpus(corpus_cfg);
  data.queries = generate_queries(data.corpus, cfg.n_queries, cfg.noise, mix_seed(cfg.data_seed, 1));
  data.split = split_by_gold(data.queries, cfg.biencoder_fraction, cfg.crossencoder_fraction,
                             mix_seed(cfg.data_seed, 2));
  return data;
}

DeskRun run_desk_training(const DeskData& data, const DeskConfig& cfg, std::uint64_t train_seed) {
  DeskRun run;
  run.train_seed = train_seed;
  run.biencoder_pairs =
      build_biencoder_pairs(resolve_gold(data.split.biencoder, data.corpus), data.corpus, mix_seed(train_seed, 1));

  auto bi_cfg = cfg.biencoder;
  bi_cfg.seed = mix_seed(train_seed, 2);
  run.biencoder = train_biencoder(run.biencoder_pairs, bi_cfg);

  auto index = precompute_store(data.corpus, run.biencoder.weights);
  const MatchEngine retrieval_engine(index, run.biencoder.weights, std::nullopt);
  run.crossencoder_pairs = build_crossencoder_pairs(resolve_gold(data.split.crossencoder, data.corpus),
                                                    retrieval_engine, mix_seed(train_seed, 3), cfg.pipeline);
  const auto examples = make_reranker_examples(run.crossencoder_pairs, retrieval_engine);
  auto rr_cfg = cfg.reranker;
  rr_cfg.seed = mix_seed(train_seed, 4);
  run.reranker = train_reranker(examples, rr_cfg);

  run.engine = std::make_shared<const MatchEngine>(std::move(index), run.biencoder.weights, run.reranker.weights);
  auto pipeline = cfg.pipeline;
  pipeline.mode = MatchMode::kBiCe;
  run.decisions.reserve(data.split.test.size());
  for (const auto& q : data.split.test) run.decisions.push_back(match(q, *run.engine, pipeline));
  run.report = evaluate(run.decisions, make_gold_map(data.split.test), make_address_lookup(data.corpus),
                        pipeline.cutoff_bice);
  return run;
}

}  // namespace addrmatch
