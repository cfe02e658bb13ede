#include "dlva/sc2v.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "dlva/error.hpp"

namespace dlva {

const char* size_class_name(SizeClass s) { return s == SizeClass::Large ? "large" : "small"; }

SizeClass size_class_from_name(const std::string& name) {
  if (name == "large") return SizeClass::Large;
  if (name == "small") return SizeClass::Small;
  raise(ErrorKind::Internal, "unknown size class " + name);
}

const char* aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Sum: return "sum";
    case Aggregation::SortTopK: return "sort-top-k";
  }
  return "?";
}

Aggregation aggregation_from_name(const std::string& name) {
  if (name == "mean") return Aggregation::Mean;
  if (name == "sum") return Aggregation::Sum;
  if (name == "sort-top-k") return Aggregation::SortTopK;
  raise(ErrorKind::Internal, "unknown aggregation " + name);
}

Sc2vConfig Sc2vConfig::preset(SizeClass size_class) {
  Sc2vConfig c;
  c.sortpool_k = size_class == SizeClass::Large ? 100 : 30;
  return c;
}

size_t Sc2vConfig::embedding_dim() const {
  size_t len = pooled_rows();
  for (size_t layer = 1; layer < conv_layers; ++layer) {
    if (len >= 2) len /= 2;
    const size_t k = std::min(conv_kernel, len);
    len = len - k + 1;
  }
  return len * conv_channels;
}

Tens<double> NormalizedAdjacency::dense() const {
  Tens<double> m({n, n});
  for (size_t i = 0; i < n; ++i)
    for (const auto& [j, w] : rows[i]) m(i, j) = w;
  return m;
}

NormalizedAdjacency normalize_adjacency(size_t n,
                                        const std::vector<std::pair<uint32_t, uint32_t>>& edges) {
  std::set<std::pair<uint32_t, uint32_t>> sym;
  for (size_t i = 0; i < n; ++i) sym.insert({static_cast<uint32_t>(i), static_cast<uint32_t>(i)});
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) continue;
    sym.insert({a, b});
    sym.insert({b, a});
  }
  std::vector<double> degree(n, 0.0);
  for (const auto& [a, b] : sym) degree[a] += 1.0;
  NormalizedAdjacency adj;
  adj.n = n;
  adj.rows.assign(n, {});
  for (const auto& [a, b] : sym) {
    adj.rows[a].push_back({b, 1.0 / std::sqrt(degree[a] * degree[b])});
  }
  return adj;
}

NormalizedAdjacency normalize_adjacency(const ControlFlowGraph& cfg) {
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  edges.reserve(cfg.edges.size());
  for (const auto& [from, to] : cfg.edges) {
    edges.push_back({static_cast<uint32_t>(cfg.node_index(from)),
                     static_cast<uint32_t>(cfg.node_index(to))});
  }
  return normalize_adjacency(cfg.nodes.size(), edges);
}

template <class T>
Tens<T> sort_pool(const Tens<T>& hcat, size_t k, std::vector<int64_t>* kept_out) {
  const size_t n = hcat.shape[0], c = hcat.shape[1];
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const size_t sort_col = c - 1;
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    const T va = hcat(a, sort_col), vb = hcat(b, sort_col);
    if (va != vb) return va < vb;
    return a < b;
  });
  Tens<T> pooled({k, c});
  std::vector<int64_t> kept(k, -1);
  const size_t take = std::min(n, k);
  for (size_t i = 0; i < take; ++i) {
    const uint32_t src = order[n - take + i];
    const size_t dst = k - take + i;
    kept[dst] = src;
    std::copy(hcat.data.begin() + src * c, hcat.data.begin() + (src + 1) * c,
              pooled.data.begin() + dst * c);
  }
  if (kept_out) *kept_out = std::move(kept);
  return pooled;
}

template Tens<float> sort_pool<float>(const Tens<float>&, size_t, std::vector<int64_t>*);
template Tens<double> sort_pool<double>(const Tens<double>&, size_t, std::vector<int64_t>*);

template <class T>
Sc2vNetT<T> Sc2vNetT<T>::random_init(const Sc2vConfig& cfg, Rng& rng) {
  Sc2vNetT net;
  net.cfg = cfg;
  size_t in = cfg.node_dim;
  for (size_t out : cfg.gcn_sizes) {
    Param<T> w({in, out});
    w.glorot_init(rng, in, out);
    net.gcn_w.push_back(std::move(w));
    in = out;
  }
  const size_t c = cfg.concat_dim();
  size_t len = cfg.pooled_rows();
  for (size_t layer = 0; layer < cfg.conv_layers; ++layer) {
    ConvLayer conv;
    size_t in_ch;
    if (layer == 0) {
      conv.kernel = c;
      conv.stride = c;
      conv.pool_before = false;
      in_ch = 1;
    } else {
      conv.pool_before = len >= 2;
      if (conv.pool_before) len /= 2;
      conv.kernel = std::min(cfg.conv_kernel, len);
      conv.stride = 1;
      in_ch = cfg.conv_channels;
      len = len - conv.kernel + 1;
    }
    conv.w = Param<T>({conv.kernel, in_ch, cfg.conv_channels});
    conv.b = Param<T>({cfg.conv_channels});
    conv.w.glorot_init(rng, conv.kernel * in_ch, cfg.conv_channels);
    net.convs.push_back(std::move(conv));
  }
  return net;
}

template <class T>
std::vector<T> Sc2vNetT<T>::forward(const NormalizedAdjacency& adj, const Tens<T>& nodes,
                                    Trace* trace) const {
  require_shape(nodes.shape.size() == 2 && nodes.shape[1] == cfg.node_dim, "sc2v node features");
  require_shape(nodes.shape[0] == adj.n, "sc2v node count");
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr.h.clear();
  tr.h.push_back(nodes);

  // GCN stack: H_{l+1} = act(Â H_l W_{l+1})
  for (size_t l = 0; l < gcn_w.size(); ++l) {
    Tens<T> m = adjacency_multiply(adj, tr.h.back());
    Tens<T> pre;
    matmul(m, gcn_w[l].value, pre);
    activation_forward(cfg.gcn_activation, pre);
    tr.h.push_back(std::move(pre));
  }

  // column concatenation of all GCN layer outputs
  const size_t n = adj.n, c = cfg.concat_dim();
  tr.hcat = Tens<T>({n, c});
  for (size_t i = 0; i < n; ++i) {
    size_t col = 0;
    for (size_t l = 1; l < tr.h.size(); ++l) {
      const size_t w = tr.h[l].shape[1];
      std::copy(tr.h[l].data.begin() + i * w, tr.h[l].data.begin() + (i + 1) * w,
                tr.hcat.data.begin() + i * c + col);
      col += w;
    }
  }

  // aggregation
  Tens<T> pooled;
  if (cfg.aggregation == Aggregation::SortTopK) {
    pooled = sort_pool(tr.hcat, cfg.sortpool_k, &tr.kept);
  } else {
    pooled = Tens<T>({1, c});
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < c; ++j) pooled(0, j) += tr.hcat(i, j);
    if (cfg.aggregation == Aggregation::Mean) {
      const T inv = T(1) / static_cast<T>(n);
      for (auto& v : pooled.data) v *= inv;
    }
  }

  // conv head over the flattened summaries
  tr.flat = Tens<T>({pooled.size(), 1});
  std::copy(pooled.data.begin(), pooled.data.end(), tr.flat.data.begin());
  tr.conv_in.clear();
  tr.conv_out.clear();
  tr.pool_argmax.assign(convs.size(), {});
  tr.pool_in_len.assign(convs.size(), 0);
  Tens<T> x = tr.flat;
  for (size_t layer = 0; layer < convs.size(); ++layer) {
    const ConvLayer& conv = convs[layer];
    if (conv.pool_before) {
      tr.pool_in_len[layer] = x.shape[0];
      x = maxpool1d_forward(x, tr.pool_argmax[layer]);
    }
    tr.conv_in.push_back(x);
    Tens<T> y = conv1d_forward(x, conv.w.value, conv.b.value, conv.stride);
    activation_forward(Activation::Relu, y);
    tr.conv_out.push_back(y);
    x = tr.conv_out.back();
  }
  const Tens<T>& last = tr.conv_out.back();
  return std::vector<T>(last.data.begin(), last.data.end());
}

template <class T>
typename Sc2vNetT<T>::Grads Sc2vNetT<T>::make_grads() const {
  Grads g;
  for (const auto& w : gcn_w) g.gcn_w.push_back(Tens<T>(w.value.shape));
  for (const auto& conv : convs) {
    g.conv_w.push_back(Tens<T>(conv.w.value.shape));
    g.conv_b.push_back(Tens<T>(conv.b.value.shape));
  }
  return g;
}

template <class T>
void Sc2vNetT<T>::add_grads(const Grads& g) {
  for (size_t l = 0; l < gcn_w.size(); ++l)
    for (size_t i = 0; i < g.gcn_w[l].size(); ++i) gcn_w[l].grad.data[i] += g.gcn_w[l].data[i];
  for (size_t l = 0; l < convs.size(); ++l) {
    for (size_t i = 0; i < g.conv_w[l].size(); ++i) convs[l].w.grad.data[i] += g.conv_w[l].data[i];
    for (size_t i = 0; i < g.conv_b[l].size(); ++i) convs[l].b.grad.data[i] += g.conv_b[l].data[i];
  }
}

template <class T>
void Sc2vNetT<T>::backward(const NormalizedAdjacency& adj, const Trace& tr,
                           const std::vector<T>& dembedding, Grads& grads) const {
  // conv head, last layer first
  Tens<T> dy(tr.conv_out.back().shape);
  std::copy(dembedding.begin(), dembedding.end(), dy.data.begin());
  for (size_t layer = convs.size(); layer-- > 0;) {
    const ConvLayer& conv = convs[layer];
    dy = activation_backward(Activation::Relu, tr.conv_out[layer], dy);
    Tens<T> dx = conv1d_backward(tr.conv_in[layer], conv.w.value, conv.stride, dy,
                                 grads.conv_w[layer], grads.conv_b[layer]);
    if (conv.pool_before) {
      dx = maxpool1d_backward(dx, tr.pool_argmax[layer], tr.pool_in_len[layer]);
    }
    dy = std::move(dx);
  }

  // un-flatten, then route through the aggregation
  const size_t n = adj.n, c = cfg.concat_dim();
  Tens<T> dhcat({n, c});
  if (cfg.aggregation == Aggregation::SortTopK) {
    const size_t k = cfg.sortpool_k;
    for (size_t i = 0; i < k; ++i) {
      const int64_t src = tr.kept[i];
      if (src < 0) continue;
      for (size_t j = 0; j < c; ++j) dhcat(static_cast<size_t>(src), j) += dy.data[i * c + j];
    }
  } else {
    const T scale = cfg.aggregation == Aggregation::Mean ? T(1) / static_cast<T>(n) : T(1);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < c; ++j) dhcat(i, j) = dy.data[j] * scale;
  }

  // split the concat gradient per GCN layer, then walk the stack backwards
  std::vector<Tens<T>> dh(gcn_w.size() + 1);
  size_t col = 0;
  for (size_t l = 1; l <= gcn_w.size(); ++l) {
    const size_t w = tr.h[l].shape[1];
    dh[l] = Tens<T>({n, w});
    for (size_t i = 0; i < n; ++i) {
      std::copy(dhcat.data.begin() + i * c + col, dhcat.data.begin() + i * c + col + w,
                dh[l].data.begin() + i * w);
    }
    col += w;
  }
  for (size_t l = gcn_w.size(); l-- > 0;) {
    Tens<T> dpre = activation_backward(cfg.gcn_activation, tr.h[l + 1], dh[l + 1]);
    Tens<T> m = adjacency_multiply(adj, tr.h[l]);  // recompute Â H_l
    matmul_at(m, dpre, grads.gcn_w[l], /*accumulate=*/true);
    if (l == 0) break;  // node features are inputs, not parameters
    Tens<T> dm;
    matmul_bt(dpre, gcn_w[l].value, dm);
    Tens<T> back = adjacency_multiply(adj, dm);  // Â is symmetric
    for (size_t i = 0; i < back.size(); ++i) dh[l].data[i] += back.data[i];
  }
}

template <class T>
std::vector<Param<T>*> Sc2vNetT<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& w : gcn_w) out.push_back(&w);
  for (auto& conv : convs) {
    out.push_back(&conv.w);
    out.push_back(&conv.b);
  }
  return out;
}

template <class T>
void Sc2vNetT<T>::visit_state(const std::function<void(const std::string&, Tens<T>&)>& fn) {
  for (size_t l = 0; l < gcn_w.size(); ++l) fn("sc2v.gcn" + std::to_string(l) + ".w", gcn_w[l].value);
  for (size_t l = 0; l < convs.size(); ++l) {
    fn("sc2v.conv" + std::to_string(l) + ".w", convs[l].w.value);
    fn("sc2v.conv" + std::to_string(l) + ".b", convs[l].b.value);
  }
}

template struct Sc2vNetT<float>;
template struct Sc2vNetT<double>;

ContractEmbedding embed_contract(const ControlFlowGraph& cfg, const Tensor& nodes,
                                 const Sc2vNet& net, SizeClass size_class) {
  NormalizedAdjacency adj = normalize_adjacency(cfg);
  ContractEmbedding e;
  e.vector = net.forward(adj, nodes);
  e.size_class = size_class;
  return e;
}

}  // namespace dlva
