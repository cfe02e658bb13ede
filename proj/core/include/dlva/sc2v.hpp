#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dlva/cfg.hpp"
#include "dlva/layers.hpp"
#include "dlva/tensor.hpp"

namespace dlva {

enum class SizeClass : uint8_t { Large, Small };
const char* size_class_name(SizeClass s);
SizeClass size_class_from_name(const std::string& name);

enum class Aggregation : uint8_t { Mean, Sum, SortTopK };
const char* aggregation_name(Aggregation a);
Aggregation aggregation_from_name(const std::string& name);

// Architecture of the contract embedder. The shipped presets are
// preset(Large): GCN 256/128/1, sort-top-100, two conv layers with 96
// channels -> 4,128-dimensional embeddings; preset(Small) pools the top 30
// nodes -> 768 dimensions.
struct Sc2vConfig {
  std::vector<size_t> gcn_sizes = {256, 128, 1};
  Aggregation aggregation = Aggregation::SortTopK;
  size_t sortpool_k = 100;
  size_t conv_layers = 2;
  size_t conv_channels = 96;
  size_t conv_kernel = 8;  // kernel of the second and later conv layers
  Activation gcn_activation = Activation::Tanh;
  size_t node_dim = 512;

  static Sc2vConfig preset(SizeClass size_class);

  size_t concat_dim() const {
    size_t c = 0;
    for (size_t s : gcn_sizes) c += s;
    return c;
  }
  size_t pooled_rows() const {
    return aggregation == Aggregation::SortTopK ? sortpool_k : 1;
  }
  // embedding length implied by the conv-head geometry
  size_t embedding_dim() const;
};

// Â = D^{-1/2}(A_sym + I)D^{-1/2} over the symmetrized edge set, stored
// sparse by row. Weights are kept in double so both check modes share them.
struct NormalizedAdjacency {
  size_t n = 0;
  std::vector<std::vector<std::pair<uint32_t, double>>> rows;

  Tens<double> dense() const;
};

NormalizedAdjacency normalize_adjacency(const ControlFlowGraph& cfg);
// edges given directly as (from, to) node-index pairs
NormalizedAdjacency normalize_adjacency(size_t n,
                                        const std::vector<std::pair<uint32_t, uint32_t>>& edges);

// y[n×d] = Â · x[n×d]
template <class T>
Tens<T> adjacency_multiply(const NormalizedAdjacency& adj, const Tens<T>& x) {
  require_shape(x.shape[0] == adj.n, "adjacency rows");
  const size_t d = x.shape[1];
  Tens<T> y({adj.n, d});
  parallel_for(adj.n, 256, [&](size_t r0, size_t r1) {
    for (size_t i = r0; i < r1; ++i) {
      T* yrow = y.data.data() + i * d;
      for (const auto& [j, w] : adj.rows[i]) {
        const T wv = static_cast<T>(w);
        const T* xrow = x.data.data() + static_cast<size_t>(j) * d;
        for (size_t c = 0; c < d; ++c) yrow[c] += wv * xrow[c];
      }
    }
  });
  return y;
}

// SortPooling: rows ordered ascending by the last column (ties by row index),
// the k largest kept in that order, zero rows prepended when n < k.
// kept[i] is the source row of output row i, or -1 for padding.
template <class T>
Tens<T> sort_pool(const Tens<T>& hcat, size_t k, std::vector<int64_t>* kept = nullptr);

// Contract embedding plus the preset tag it was produced under.
struct ContractEmbedding {
  std::vector<float> vector;
  SizeClass size_class = SizeClass::Large;
};

template <class T>
struct Sc2vNetT {
  Sc2vConfig cfg;
  std::vector<Param<T>> gcn_w;  // layer l: [in_l × out_l], no bias
  struct ConvLayer {
    Param<T> w;  // [kernel × in_ch × out_ch]
    Param<T> b;  // [out_ch]
    size_t kernel = 0;
    size_t stride = 1;
    bool pool_before = false;
  };
  std::vector<ConvLayer> convs;

  static Sc2vNetT random_init(const Sc2vConfig& cfg, Rng& rng);

  struct Trace {
    std::vector<Tens<T>> h;        // h[0] = input features, h[l] = gcn layer l output
    Tens<T> hcat;                  // n × concat_dim
    std::vector<int64_t> kept;     // sortpool source rows
    Tens<T> flat;                  // conv input (len × 1)
    std::vector<Tens<T>> conv_in;  // input to each conv (after optional pool)
    std::vector<std::vector<uint32_t>> pool_argmax;
    std::vector<size_t> pool_in_len;
    std::vector<Tens<T>> conv_out;  // post-ReLU outputs
  };

  // nodes: [n × node_dim] features; returns the flattened embedding
  std::vector<T> forward(const NormalizedAdjacency& adj, const Tens<T>& nodes,
                         Trace* trace = nullptr) const;

  // Gradient buffers mirroring gcn_w / convs, for deterministic sharded
  // accumulation during training.
  struct Grads {
    std::vector<Tens<T>> gcn_w;
    std::vector<Tens<T>> conv_w, conv_b;
  };
  Grads make_grads() const;
  void add_grads(const Grads& g);  // accumulate into the params' .grad

  void backward(const NormalizedAdjacency& adj, const Trace& trace,
                const std::vector<T>& dembedding, Grads& grads) const;

  std::vector<Param<T>*> params();
  // every persistent tensor, named; used by snapshots and the container format
  void visit_state(const std::function<void(const std::string&, Tens<T>&)>& fn);
};

using Sc2vNet = Sc2vNetT<float>;

ContractEmbedding embed_contract(const ControlFlowGraph& cfg, const Tensor& nodes,
                                 const Sc2vNet& net, SizeClass size_class);

}  // namespace dlva
