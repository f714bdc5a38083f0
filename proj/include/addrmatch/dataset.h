// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "addrmatch/core_model.h"
#include "addrmatch/pipeline.h"
#include "addrmatch/training_pair.h"

namespace addrmatch {

struct CorpusConfig {
  std::size_t n_addresses = 1000;
  std::uint64_t seed = 1;
  /// Share of addresses per CP4 first digit 1..9; must sum to 1.
  std::array<double, 9> region_mix{1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9,
                                   1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 9};
  std::vector<std::string> artery_types{"Rua",     "Avenida", "Travessa", "Praça",
                                        "Largo",   "Estrada", "Beco",     "Calçada"};
  std::size_t name_lexicon_size = 400;
  std::size_t designation_lexicon_size = 60;

  void validate() const;
};

struct NoiseConfig {
  double p_abbreviate = 0.0;
  double p_typo = 0.0;
  double p_drop_token = 0.0;
  double p_shuffle = 0.0;
  double p_zip_degrade = 0.0;
  int max_typos = 2;
  std::uint64_t seed = 0;

  void validate() const;
  /// Moderate noise used by the demo pipeline and the acceptance run.
  static NoiseConfig realistic(std::uint64_t seed);
};

/// Deterministic synthetic corpus of localities -> arteries -> doors (some with units).
std::vector<NormalizedAddress> generate_corpus(const CorpusConfig& cfg);

/// Sender-style rendering of `addr`; identical to render_normalized when every
/// probability is 0. Typos only touch letters, drops never touch the door or
/// the postal code.
UnnormalizedAddress derive_unnormalized(const NormalizedAddress& addr, const NoiseConfig& noise);

/// `n` noisy queries over distinct corpus addresses (with replacement once the corpus is exhausted).
std::vector<UnnormalizedAddress> generate_queries(const std::vector<NormalizedAddress>& corpus, std::size_t n,
                                                  const NoiseConfig& noise, std::uint64_t seed);

struct DatasetSplit {
  std::vector<UnnormalizedAddress> biencoder;
  std::vector<UnnormalizedAddress> crossencoder;
  std::vector<UnnormalizedAddress> test;
};

/// Splits by gold id so no address appears in two parts. Fractions are of distinct gold ids;
/// the test part takes the remainder.
DatasetSplit split_by_gold(const std::vector<UnnormalizedAddress>& queries, double biencoder_fraction,
                           double crossencoder_fraction, std::uint64_t seed);

using GoldPair = std::pair<UnnormalizedAddress, NormalizedAddress>;

/// Resolves each query's gold_id against the corpus. Throws MissingGold.
std::vector<GoldPair> resolve_gold(const std::vector<UnnormalizedAddress>& queries,
                                   const std::vector<NormalizedAddress>& corpus);

/// One positive and one negative per gold record; the negative is Easy, Hard
/// or VeryHard with equal probability (see README for the fallback chain).
std::vector<TrainingPair> build_biencoder_pairs(const std::vector<GoldPair>& gold,
                                                const std::vector<NormalizedAddress>& corpus, std::uint64_t seed);

/// One positive plus up to nine retrieved non-matching negatives per gold record.
std::vector<TrainingPair> build_crossencoder_pairs(const std::vector<GoldPair>& gold, const MatchEngine& engine,
                                                   std::uint64_t seed, const PipelineConfig& retrieval = {});

}  // namespace addrmatch
