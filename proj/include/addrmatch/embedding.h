// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "addrmatch/training_pair.h"

namespace addrmatch {

inline constexpr std::size_t kEmbeddingDim = 512;
inline constexpr std::size_t kDefaultFeatureSpace = 4096;

/// Hashed bag of character n-grams (n = 2..4 over "<token>") and whole tokens,
/// L2-normalized. Entries are sorted by index.
struct SparseFeatures {
  std::size_t space = kDefaultFeatureSpace;
  std::vector<std::pair<std::uint32_t, double>> entries;
};

/// 64-bit FNV-1a; the featurizer hashes "w:<token>" and "c:<ngram>".
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

SparseFeatures featurize(std::string_view text, std::size_t space = kDefaultFeatureSpace);

/// Output of the projection head; components lie in (-1, 1).
struct EmbeddingVector {
  std::vector<double> values;

  std::span<const double> view() const { return values; }
  std::size_t size() const { return values.size(); }
};

/// F x 512 row-major projection matrix feeding the tanh head.
struct ProjectionWeights {
  std::size_t feature_space = kDefaultFeatureSpace;
  std::uint64_t seed = 0;
  std::vector<float> matrix;

  std::span<const float> row(std::size_t f) const {
    return std::span<const float>(matrix).subspan(f * kEmbeddingDim, kEmbeddingDim);
  }
  /// FNV-1a over the serialized header and matrix bytes.
  std::uint64_t fingerprint() const;
};

/// Uniform in +-1/sqrt(F) from `seed`.
ProjectionWeights init_projection(std::size_t feature_space, std::uint64_t seed);
ProjectionWeights zero_projection(std::size_t feature_space);

/// Binary "ABMW" file: magic, version u32, F u32, dim u32, seed u64, F*512 float32 LE.
std::string serialize_weights(const ProjectionWeights& w);
ProjectionWeights deserialize_weights(std::string_view bytes);
void save_weights(const std::string& path, const ProjectionWeights& w);
ProjectionWeights load_weights(const std::string& path);

EmbeddingVector embed(const SparseFeatures& features, const ProjectionWeights& w);
EmbeddingVector embed(std::string_view text, const ProjectionWeights& w);

/// Cosine similarity; throws ZeroVector when either norm is below 1e-12.
double cosine(std::span<const double> a, std::span<const double> b);
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine(a.view(), b.view());
}

/// 0.5 * [y D^2 + (1 - y) relu(margin - D)^2] with D = 1 - cosine(a, b).
double contrastive_loss(std::span<const double> a, std::span<const double> b, int y, double margin);

struct PairGradient {
  std::vector<double> wrt_a;
  std::vector<double> wrt_b;
};

/// Analytic gradient of contrastive_loss; zero at the D == margin kink for y = 0.
PairGradient contrastive_grad(std::span<const double> a, std::span<const double> b, int y,
                              double margin);

struct BiTrainerConfig {
  double margin = 0.5;
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 1e-2;
  double weight_decay = 0.01;
  int warmup_steps = 100;
  std::uint64_t seed = 0;
  std::size_t feature_space = kDefaultFeatureSpace;
};

struct BiTrainResult {
  ProjectionWeights weights;
  std::vector<double> epoch_losses;  // mean pair loss per epoch
};

/// Mini-batch AdamW with linear warmup then linear decay. Throws InvalidArgument
/// on a bad config and DegenerateData when only one label is present.
BiTrainResult train_biencoder(const std::vector<TrainingPair>& pairs, const BiTrainerConfig& cfg);

/// Learning-rate multiplier shared by both trainers: linear ramp over `warmup`
/// steps, then linear decay to zero at `total`.
double linear_schedule(int step, int warmup, int total);

}  // namespace addrmatch
