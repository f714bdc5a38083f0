// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#include "addrmatch/embedding.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_map>

#include "addrmatch/core_model.h"
#include "addrmatch/error.h"
#include "addrmatch/random.h"
#include "binary_io.h"

namespace addrmatch {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

}  // namespace detail

namespace {

constexpr std::uint32_t kWeightsVersion = 1;
constexpr double kZeroNorm = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

SparseFeatures featurize(std::string_view text, std::size_t space) {
  if (space < 256) throw Error(ErrorCode::kInvalidArgument, "feature space must be >= 256");
  std::map<std::uint32_t, double> counts;
  auto add = [&](std::string_view key) {
    counts[static_cast<std::uint32_t>(fnv1a64(key) % space)] += 1.0;
  };
  std::string key;
  for (const auto& token : normalize_text(text)) {
    key = "w:" + token;
    add(key);
    const std::string bounded = "<" + token + ">";
    for (std::size_t n = 2; n <= 4; ++n) {
      for (std::size_t i = 0; i + n <= bounded.size(); ++i) {
        key = "c:";
        key.append(bounded, i, n);
        add(key);
      }
    }
  }
  SparseFeatures out;
  out.space = space;
  double norm = 0.0;
  for (const auto& [idx, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  out.entries.reserve(counts.size());
  for (const auto& [idx, c] : counts) out.entries.emplace_back(idx, c / norm);
  return out;
}

std::uint64_t ProjectionWeights::fingerprint() const { return fnv1a64(serialize_weights(*this)); }

ProjectionWeights init_projection(std::size_t feature_space, std::uint64_t seed) {
  ProjectionWeights w;
  w.feature_space = feature_space;
  w.seed = seed;
  w.matrix.resize(feature_space * kEmbeddingDim);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_space));
  for (auto& x : w.matrix) x = static_cast<float>(uniform_real(rng, -bound, bound));
  return w;
}

ProjectionWeights zero_projection(std::size_t feature_space) {
  ProjectionWeights w;
  w.feature_space = feature_space;
  w.matrix.assign(feature_space * kEmbeddingDim, 0.0f);
  return w;
}

std::string serialize_weights(const ProjectionWeights& w) {
  detail::ByteWriter out;
  out.bytes("ABMW");
  out.uint<std::uint32_t>(kWeightsVersion);
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(w.feature_space));
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(kEmbeddingDim));
  out.uint<std::uint64_t>(w.seed);
  out.floats(w.matrix);
  return out.take();
}

ProjectionWeights deserialize_weights(std::string_view bytes) {
  detail::ByteReader in(bytes, ErrorCode::kCorruptStore);
  if (in.bytes(4) != "ABMW") throw Error(ErrorCode::kCorruptStore, "bad weights magic");
  if (in.uint<std::uint32_t>() != kWeightsVersion) {
    throw Error(ErrorCode::kCorruptStore, "unsupported weights version");
  }
  ProjectionWeights w;
  w.feature_space = in.uint<std::uint32_t>();
  const auto dim = in.uint<std::uint32_t>();
  if (dim != kEmbeddingDim) {
    throw Error(ErrorCode::kDimensionMismatch, "weights dim " + std::to_string(dim));
  }
  w.seed = in.uint<std::uint64_t>();
  if (w.feature_space == 0 || in.remaining() / (kEmbeddingDim * sizeof(float)) != w.feature_space ||
      in.remaining() % (kEmbeddingDim * sizeof(float)) != 0) {
    throw Error(ErrorCode::kCorruptStore, "weights payload does not match F x 512");
  }
  w.matrix.resize(w.feature_space * kEmbeddingDim);
  in.floats(w.matrix);
  if (!in.at_end()) throw Error(ErrorCode::kCorruptStore, "trailing bytes in weights file");
  for (float x : w.matrix) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kCorruptStore, "non-finite weight");
  }
  return w;
}

void save_weights(const std::string& path, const ProjectionWeights& w) {
  detail::write_file(path, serialize_weights(w));
}

ProjectionWeights load_weights(const std::string& path) {
  return deserialize_weights(detail::read_file(path));
}

EmbeddingVector embed(const SparseFeatures& features, const ProjectionWeights& w) {
  if (features.space != w.feature_space) {
    throw Error(ErrorCode::kDimensionMismatch, "feature space differs from weights");
  }
  EmbeddingVector e;
  e.values.assign(kEmbeddingDim, 0.0);
  for (const auto& [idx, x] : features.entries) {
    const auto row = w.row(idx);
    for (std::size_t j = 0; j < kEmbeddingDim; ++j) e.values[j] += x * row[j];
  }
  for (auto& v : e.values) v = std::tanh(v);
  return e;
}

EmbeddingVector embed(std::string_view text, const ProjectionWeights& w) {
  return embed(featurize(text, w.feature_space), w);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "cosine of unequal sizes");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na < kZeroNorm || nb < kZeroNorm) throw Error(ErrorCode::kZeroVector, "cosine of zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

namespace {

void check_loss_args(int y, double margin) {
  if (y != 0 && y != 1) throw Error(ErrorCode::kInvalidArgument, "label must be 0 or 1");
  if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be positive");
}

}  // namespace

double contrastive_loss(std::span<const double> a, std::span<const double> b, int y, double margin) {
  check_loss_args(y, margin);
  const double d = 1.0 - cosine(a, b);
  const double hinge = std::max(0.0, margin - d);
  return 0.5 * (y * d * d + (1 - y) * hinge * hinge);
}

PairGradient contrastive_grad(std::span<const double> a, std::span<const double> b, int y,
                              double margin) {
  check_loss_args(y, margin);
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "gradient of unequal sizes");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na < kZeroNorm || nb < kZeroNorm) throw Error(ErrorCode::kZeroVector, "gradient of zero vector");
  // Unclamped cosine keeps the gradient consistent with finite differences.
  const double c = dot(a, b) / (na * nb);
  const double d = 1.0 - c;
  // dL/dD; relu'(0) taken as 0.
  const double dl_dd = y * d - (1 - y) * (margin - d > 0.0 ? margin - d : 0.0);
  PairGradient g{std::vector<double>(a.size()), std::vector<double>(b.size())};
  // dD/da = -(b / (|a||b|) - c a / |a|^2)
  for (std::size_t i = 0; i < a.size(); ++i) {
    g.wrt_a[i] = -dl_dd * (b[i] / (na * nb) - c * a[i] / (na * na));
    g.wrt_b[i] = -dl_dd * (a[i] / (na * nb) - c * b[i] / (nb * nb));
  }
  return g;
}

double linear_schedule(int step, int warmup, int total) {
  if (warmup > 0 && step < warmup) return static_cast<double>(step + 1) / warmup;
  if (total <= warmup) return 1.0;
  return std::max(0.0, static_cast<double>(total - step) / static_cast<double>(total - warmup));
}

namespace {

// Decoupled-weight-decay Adam over a flat float parameter buffer.
class AdamW {
 public:
  AdamW(std::size_t n, double weight_decay) : m_(n, 0.0f), v_(n, 0.0f), wd_(weight_decay) {}

  void step(std::span<float> params, std::span<const float> grad, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    const float decay = static_cast<float>(1.0 - lr * wd_);
    const float step_size = static_cast<float>(lr / bc1);
    const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
    const float b1 = kBeta1, b2 = kBeta2, eps = kEps;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const float g = grad[i];
      m_[i] = b1 * m_[i] + (1.0f - b1) * g;
      v_[i] = b2 * v_[i] + (1.0f - b2) * g * g;
      params[i] = params[i] * decay - step_size * m_[i] / (std::sqrt(v_[i]) * inv_sqrt_bc2 + eps);
    }
  }

 private:
  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.999f;
  static constexpr float kEps = 1e-8f;

  std::vector<float> m_;
  std::vector<float> v_;
  double wd_;
  int t_ = 0;
};

EmbeddingVector forward_head(const SparseFeatures& f, const ProjectionWeights& w) { return embed(f, w); }

}  // namespace

BiTrainResult train_biencoder(const std::vector<TrainingPair>& pairs, const BiTrainerConfig& cfg) {
  if (cfg.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(cfg.margin > 0.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be > 0");
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no training pairs");
  const bool has_pos = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.label == 1; });
  const bool has_neg = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.label == 0; });
  if (!has_pos || !has_neg) throw Error(ErrorCode::kDegenerateData, "pairs carry a single label");

  // Featurize each distinct text once.
  std::unordered_map<std::string, std::size_t> text_slot;
  std::vector<SparseFeatures> features;
  std::vector<std::pair<std::size_t, std::size_t>> pair_slots;
  auto slot_of = [&](const std::string& text) {
    auto [it, inserted] = text_slot.emplace(text, features.size());
    if (inserted) features.push_back(featurize(text, cfg.feature_space));
    return it->second;
  };
  for (const auto& p : pairs) pair_slots.emplace_back(slot_of(p.unnorm_text), slot_of(p.norm_text));

  BiTrainResult result;
  result.weights = init_projection(cfg.feature_space, cfg.seed);
  auto& w = result.weights;
  AdamW optimizer(w.matrix.size(), cfg.weight_decay);
  std::vector<float> grad(w.matrix.size(), 0.0f);
  std::vector<std::uint32_t> touched;
  std::vector<char> is_touched(cfg.feature_space, 0);

  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const int steps_per_epoch = static_cast<int>((pairs.size() + batch - 1) / batch);
  const int total_steps = steps_per_epoch * cfg.epochs;
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(cfg.seed, 0x5eed));

  std::vector<double> dz(kEmbeddingDim);
  auto backprop = [&](const SparseFeatures& f, const EmbeddingVector& e, const std::vector<double>& de,
                      double scale) {
    for (std::size_t j = 0; j < kEmbeddingDim; ++j) dz[j] = de[j] * (1.0 - e.values[j] * e.values[j]) * scale;
    for (const auto& [idx, x] : f.entries) {
      if (!is_touched[idx]) {
        is_touched[idx] = 1;
        touched.push_back(idx);
      }
      float* g = grad.data() + static_cast<std::size_t>(idx) * kEmbeddingDim;
      for (std::size_t j = 0; j < kEmbeddingDim; ++j) g[j] += static_cast<float>(x * dz[j]);
    }
  };

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& pair = pairs[order[k]];
        const auto [sa, sb] = pair_slots[order[k]];
        const auto ea = forward_head(features[sa], w);
        const auto eb = forward_head(features[sb], w);
        epoch_loss += contrastive_loss(ea.view(), eb.view(), pair.label, cfg.margin);
        const auto g = contrastive_grad(ea.view(), eb.view(), pair.label, cfg.margin);
        backprop(features[sa], ea, g.wrt_a, scale);
        backprop(features[sb], eb, g.wrt_b, scale);
      }
      optimizer.step(w.matrix, grad, cfg.learning_rate * linear_schedule(step, cfg.warmup_steps, total_steps));
      for (auto idx : touched) {
        std::fill_n(grad.begin() + static_cast<std::ptrdiff_t>(idx) * kEmbeddingDim, kEmbeddingDim, 0.0f);
        is_touched[idx] = 0;
      }
      touched.clear();
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(pairs.size()));
  }
  return result;
}

}  // namespace addrmatch
