#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlva/layers.hpp"
#include "dlva/tensor.hpp"
#include "dlva/vocab.hpp"

namespace dlva {

// Deep-averaging block encoder: mean of token embeddings through two tanh
// dense layers, L2-normalized 512-dimensional output.
template <class T>
struct DanEncoderT {
  static constexpr size_t kEmbedDim = 128;
  static constexpr size_t kOutDim = 512;

  Param<T> embed;    // vocab × 128
  Param<T> w1, b1;   // 128 × 512
  Param<T> w2, b2;   // 512 × 512

  static DanEncoderT random_init(size_t vocab_size, Rng& rng) {
    DanEncoderT e;
    e.embed = Param<T>({vocab_size, kEmbedDim});
    e.w1 = Param<T>({kEmbedDim, kOutDim});
    e.b1 = Param<T>({kOutDim});
    e.w2 = Param<T>({kOutDim, kOutDim});
    e.b2 = Param<T>({kOutDim});
    e.embed.glorot_init(rng, vocab_size, kEmbedDim);
    e.w1.glorot_init(rng, kEmbedDim, kOutDim);
    e.w2.glorot_init(rng, kOutDim, kOutDim);
    return e;
  }

  size_t vocab_size() const { return embed.value.shape.empty() ? 0 : embed.value.shape[0]; }

  struct Trace {
    std::vector<uint32_t> tokens;
    std::vector<T> mean;  // 128
    std::vector<T> y1;    // 512
    std::vector<T> y2;    // 512
    std::vector<T> out;   // 512, unit norm
    T norm = T(1);
  };

  std::vector<T> encode(const std::vector<uint32_t>& tokens, Trace* trace = nullptr) const {
    std::vector<T> mean(kEmbedDim, T(0));
    if (!tokens.empty()) {
      // canonical accumulation order so the mean is exactly invariant under
      // token permutations
      std::vector<uint32_t> sorted = tokens;
      std::sort(sorted.begin(), sorted.end());
      for (uint32_t id : sorted) {
        const T* row = embed.value.data.data() + static_cast<size_t>(id) * kEmbedDim;
        for (size_t j = 0; j < kEmbedDim; ++j) mean[j] += row[j];
      }
      const T inv = T(1) / static_cast<T>(tokens.size());
      for (T& v : mean) v *= inv;
    }
    std::vector<T> y1 = affine(mean, w1.value, b1.value);
    for (T& v : y1) v = std::tanh(v);
    std::vector<T> y2 = affine(y1, w2.value, b2.value);
    for (T& v : y2) v = std::tanh(v);
    std::vector<T> out;
    T norm = l2_normalize(y2, out);
    if (trace) {
      trace->tokens = tokens;
      trace->mean = std::move(mean);
      trace->y1 = std::move(y1);
      trace->y2 = y2;
      trace->out = out;
      trace->norm = norm;
    }
    return out;
  }

  // Accumulates parameter gradients for one encoded block.
  void backward(const Trace& trace, const std::vector<T>& dout) {
    std::vector<T> dy2;
    l2_normalize_backward(trace.out, trace.norm, dout, dy2);
    for (size_t j = 0; j < kOutDim; ++j) dy2[j] *= T(1) - trace.y2[j] * trace.y2[j];
    std::vector<T> dy1 = affine_backward(trace.y1, w2, b2, dy2);
    for (size_t j = 0; j < kOutDim; ++j) dy1[j] *= T(1) - trace.y1[j] * trace.y1[j];
    std::vector<T> dmean = affine_backward(trace.mean, w1, b1, dy1);
    if (!trace.tokens.empty()) {
      const T inv = T(1) / static_cast<T>(trace.tokens.size());
      for (uint32_t id : trace.tokens) {
        T* grow = embed.grad.data.data() + static_cast<size_t>(id) * kEmbedDim;
        for (size_t j = 0; j < kEmbedDim; ++j) grow[j] += dmean[j] * inv;
      }
    }
  }

  std::vector<Param<T>*> params() { return {&embed, &w1, &b1, &w2, &b2}; }

 private:
  static std::vector<T> affine(const std::vector<T>& x, const Tens<T>& w, const Tens<T>& b) {
    const size_t in = w.shape[0], out = w.shape[1];
    std::vector<T> y(b.data.begin(), b.data.end());
    for (size_t p = 0; p < in; ++p) {
      const T xv = x[p];
      if (xv == T(0)) continue;
      const T* wrow = w.data.data() + p * out;
      for (size_t j = 0; j < out; ++j) y[j] += xv * wrow[j];
    }
    return y;
  }

  // accumulates dw/db into the params; returns dx
  static std::vector<T> affine_backward(const std::vector<T>& x, Param<T>& w, Param<T>& b,
                                        const std::vector<T>& dy) {
    const size_t in = w.value.shape[0], out = w.value.shape[1];
    for (size_t j = 0; j < out; ++j) b.grad.data[j] += dy[j];
    std::vector<T> dx(in, T(0));
    for (size_t p = 0; p < in; ++p) {
      const T* wrow = w.value.data.data() + p * out;
      T* gwrow = w.grad.data.data() + p * out;
      const T xv = x[p];
      T acc = T(0);
      for (size_t j = 0; j < out; ++j) {
        acc += dy[j] * wrow[j];
        gwrow[j] += dy[j] * xv;
      }
      dx[p] = acc;
    }
    return dx;
  }
};

using DanEncoder = DanEncoderT<float>;

// Per-node 512-dimensional features for a CFG, row i belonging to nodes[i].
Tensor encode_contract_nodes(const ControlFlowGraph& cfg, const DisassemblyListing& listing,
                             const TokenVocab& vocab, const DanEncoder& encoder);

// One contract's blocks as token sentences plus undirected block adjacency.
struct BlockGraph {
  std::vector<std::vector<uint32_t>> blocks;
  std::vector<std::vector<uint32_t>> neighbors;
};
BlockGraph block_graph(const ControlFlowGraph& cfg, const DisassemblyListing& listing,
                       const TokenVocab& vocab);

struct EncoderTrainConfig {
  double learning_rate = 5e-4;
  size_t batch_size = 512;
  size_t epochs = 5;
  size_t negatives = 8;
  double temperature = 0.07;
  uint64_t seed = 1;
};

struct EncoderTrainReport {
  std::vector<double> epoch_losses;
};

// Contrastive objective: for each anchor block, one CFG-adjacent positive and
// `negatives` uniform negatives; softmax cross-entropy over cosine scores.
DanEncoder train_unsupervised(const std::vector<BlockGraph>& corpus,
                              const EncoderTrainConfig& config,
                              EncoderTrainReport* report = nullptr);

// mean cosine(anchor, CFG-neighbor) minus mean cosine(anchor, random block)
double neighbor_margin(const DanEncoder& encoder, const std::vector<BlockGraph>& corpus,
                       uint64_t seed, size_t samples = 256);

}  // namespace dlva
