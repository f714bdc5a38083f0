// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "addrmatch/dataset.h"
#include "addrmatch/embedding.h"
#include "addrmatch/evaluation.h"
#include "addrmatch/pipeline.h"
#include "addrmatch/reranker.h"

namespace addrmatch {

/// End-to-end desk experiment: synthetic data, both trainers, evaluation.
struct DeskConfig {
  std::size_t n_addresses = 5000;
  std::size_t n_queries = 2000;
  std::uint64_t data_seed = 7;
  NoiseConfig noise = NoiseConfig::realistic(7);
  double biencoder_fraction = 0.5;
  double crossencoder_fraction = 0.25;
  BiTrainerConfig biencoder;
  RerankerTrainConfig reranker;
  PipelineConfig pipeline;
};

struct DeskData {
  std::vector<NormalizedAddress> corpus;
  std::vector<UnnormalizedAddress> queries;
  DatasetSplit split;
};

DeskData make_desk_data(const DeskConfig& cfg);

struct DeskRun {
  std::uint64_t train_seed = 0;
  std::vector<TrainingPair> biencoder_pairs;
  std::vector<TrainingPair> crossencoder_pairs;
  BiTrainResult biencoder;
  RerankerTrainResult reranker;
  std::shared_ptr<const MatchEngine> engine;
  std::vector<MatchDecision> decisions;  // test split, BI+CE
  EvalReport report;                     // at cfg.pipeline.cutoff_bice
};

/// Builds pairs, trains the bi-encoder, embeds the corpus, builds cross-encoder
/// pairs, trains the reranker and evaluates on the test split.
DeskRun run_desk_training(const DeskData& data, const DeskConfig& cfg, std::uint64_t train_seed);

}  // namespace addrmatch
