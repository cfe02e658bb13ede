#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"

#include "dlva/classifier.hpp"
#include "dlva/gradcheck.hpp"
#include "dlva/grid.hpp"
#include "dlva/sc2v.hpp"

using namespace dlva;

TEST_CASE("normalize_adjacency") {
  SUBCASE("single isolated node") {
    NormalizedAdjacency adj = normalize_adjacency(1, {});
    Tens<double> d = adj.dense();
    CHECK(d(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("two nodes, one edge") {
    NormalizedAdjacency adj = normalize_adjacency(2, {{0, 1}});
    Tens<double> d = adj.dense();
    for (size_t i = 0; i < 2; ++i)
      for (size_t j = 0; j < 2; ++j) CHECK(d(i, j) == doctest::Approx(0.5));
  }
  SUBCASE("self loops are not doubled") {
    NormalizedAdjacency adj = normalize_adjacency(1, {{0, 0}});
    CHECK(adj.dense()(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("symmetric, entries in [0,1], strictly positive diagonal") {
    // row sums of the symmetric normalization can exceed 1 (a star hub sums
    // to about sqrt(n/2)), so the checkable bound is per-entry
    Rng rng(0xabc);
    for (int iter = 0; iter < 50; ++iter) {
      const size_t n = 1 + rng.range(40);
      std::vector<std::pair<uint32_t, uint32_t>> edges;
      for (size_t e = 0; e < 2 * n; ++e) {
        edges.push_back({static_cast<uint32_t>(rng.range(n)), static_cast<uint32_t>(rng.range(n))});
      }
      NormalizedAdjacency adj = normalize_adjacency(n, edges);
      Tens<double> d = adj.dense();
      for (size_t i = 0; i < n; ++i) {
        CHECK(d(i, i) > 0.0);
        double row = 0.0;
        for (size_t j = 0; j < n; ++j) {
          CHECK(d(i, j) == doctest::Approx(d(j, i)));
          CHECK(d(i, j) >= 0.0);
          CHECK(d(i, j) <= 1.0);
          row += d(i, j);
        }
        CHECK(row > 0.0);
      }
    }
  }
}

TEST_CASE("gcn stack widths and the 385 concat") {
  Sc2vConfig cfg = Sc2vConfig::preset(SizeClass::Large);
  CHECK(cfg.concat_dim() == 385);  // 256 + 128 + 1
  Rng rng(1);
  Sc2vNet net = Sc2vNet::random_init(cfg, rng);
  REQUIRE(net.gcn_w.size() == 3);
  CHECK(net.gcn_w[0].value.shape == std::vector<size_t>{512, 256});
  CHECK(net.gcn_w[1].value.shape == std::vector<size_t>{256, 128});
  CHECK(net.gcn_w[2].value.shape == std::vector<size_t>{128, 1});
  CHECK(net.convs[0].w.value.shape == std::vector<size_t>{385, 1, 96});
  CHECK(net.convs[1].w.value.shape == std::vector<size_t>{8, 96, 96});

  SUBCASE("single node: propagation is a per-node transform") {
    NormalizedAdjacency adj = normalize_adjacency(1, {});
    Tensor h0 = testutil::random_features(1, 512, rng);
    Sc2vNet::Trace tr;
    net.forward(adj, h0, &tr);
    // H1 = tanh(h0 W1) since Â = [[1]]
    Tensor expect;
    matmul(h0, net.gcn_w[0].value, expect);
    activation_forward(Activation::Tanh, expect);
    REQUIRE(tr.h[1].shape == std::vector<size_t>{1, 256});
    for (size_t j = 0; j < 256; ++j) CHECK(tr.h[1](0, j) == doctest::Approx(expect(0, j)));
    CHECK(tr.hcat.shape == std::vector<size_t>{1, 385});
  }
}

TEST_CASE("sort_pool") {
  SUBCASE("padding when n < k") {
    Tens<float> h({2, 3});
    h.data = {9, 9, 0.5f, 8, 8, 0.7f};
    std::vector<int64_t> kept;
    Tens<float> p = sort_pool(h, 5, &kept);
    REQUIRE(p.shape == std::vector<size_t>{5, 3});
    for (size_t i = 0; i < 3; ++i)
      for (size_t j = 0; j < 3; ++j) CHECK(p(i, j) == 0.0f);
    CHECK(kept == std::vector<int64_t>{-1, -1, -1, 0, 1});
    CHECK(p(3, 2) == 0.5f);
    CHECK(p(4, 2) == 0.7f);
  }
  SUBCASE("matches a brute-force sort oracle") {
    Rng rng(0x50f7);
    for (int iter = 0; iter < 50; ++iter) {
      const size_t n = 20, k = 10, c = 385;
      Tens<float> h({n, c});
      for (auto& v : h.data) v = static_cast<float>(rng.normal());
      std::vector<int64_t> kept;
      Tens<float> pooled = sort_pool(h, k, &kept);

      // oracle: sort row indices ascending by last column, take the last k
      std::vector<size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return h(a, c - 1) < h(b, c - 1); });
      for (size_t i = 0; i < k; ++i) {
        const size_t src = order[n - k + i];
        CHECK(kept[i] == static_cast<int64_t>(src));
        for (size_t j = 0; j < c; ++j) CHECK(pooled(i, j) == h(src, j));
      }
    }
  }
  SUBCASE("ties broken by node id ascending") {
    Tens<float> h({3, 1});
    h.data = {5.0f, 5.0f, 5.0f};
    std::vector<int64_t> kept;
    sort_pool(h, 2, &kept);
    CHECK(kept == std::vector<int64_t>{1, 2});
  }
}

TEST_CASE("conv head dimensions (large 4128 / small 768)") {
  CHECK(Sc2vConfig::preset(SizeClass::Large).embedding_dim() == 4128);
  CHECK(Sc2vConfig::preset(SizeClass::Small).embedding_dim() == 768);

  Rng rng(2);
  SUBCASE("forward produces exactly those lengths") {
    for (SizeClass sc : {SizeClass::Large, SizeClass::Small}) {
      Sc2vNet net = Sc2vNet::random_init(Sc2vConfig::preset(sc), rng);
      for (size_t n : {1u, 3u, 57u, 211u}) {
        ControlFlowGraph cfg = testutil::fake_cfg(n, 2 * n, rng);
        Tensor h0 = testutil::random_features(n, 512, rng);
        ContractEmbedding e = embed_contract(cfg, h0, net, sc);
        CHECK(e.vector.size() == (sc == SizeClass::Large ? 4128u : 768u));
        for (float v : e.vector) CHECK(std::isfinite(v));
      }
    }
  }
  SUBCASE("all-zero pooled input still yields a finite deterministic embedding") {
    Sc2vNet net = Sc2vNet::random_init(Sc2vConfig::preset(SizeClass::Small), rng);
    ControlFlowGraph cfg = testutil::fake_cfg(1, 0, rng);
    Tensor h0({1, 512});  // zeros
    ContractEmbedding a = embed_contract(cfg, h0, net, SizeClass::Small);
    ContractEmbedding b = embed_contract(cfg, h0, net, SizeClass::Small);
    CHECK(a.vector == b.vector);
    for (float v : a.vector) CHECK(std::isfinite(v));
  }
}

TEST_CASE("permutation invariance with distinct sort values") {
  Rng rng(0x9e9);
  Sc2vNet net = Sc2vNet::random_init(Sc2vConfig::preset(SizeClass::Small), rng);

  const size_t n = 12;
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  for (size_t e = 0; e < 20; ++e) {
    edges.push_back({static_cast<uint32_t>(rng.range(n)), static_cast<uint32_t>(rng.range(n))});
  }
  Tensor h0 = testutil::random_features(n, 512, rng);
  NormalizedAdjacency adj = normalize_adjacency(n, edges);
  std::vector<float> base = net.forward(adj, h0);

  // relabel nodes by a permutation and re-run
  std::vector<uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.range(i)]);

  Tensor h0p({n, 512});
  for (size_t i = 0; i < n; ++i) {
    std::copy(h0.data.begin() + i * 512, h0.data.begin() + (i + 1) * 512,
              h0p.data.begin() + perm[i] * 512);
  }
  std::vector<std::pair<uint32_t, uint32_t>> edges_p;
  for (auto [a, b] : edges) edges_p.push_back({perm[a], perm[b]});
  NormalizedAdjacency adj_p = normalize_adjacency(n, edges_p);
  std::vector<float> permuted = net.forward(adj_p, h0p);

  // sort channel values are distinct with probability 1 for random features
  for (size_t i = 0; i < base.size(); ++i) {
    CHECK(base[i] == doctest::Approx(permuted[i]).epsilon(1e-4));
  }
}

TEST_CASE("full embedder+classifier composite passes the gradient check") {
  Rng rng(0x6c);
  Sc2vConfig cfg = Sc2vConfig::preset(SizeClass::Small);
  Sc2vNetT<double> net = Sc2vNetT<double>::random_init(cfg, rng);
  CoreClassifierT<double> cc =
      CoreClassifierT<double>::random_init(cfg.embedding_dim(), {32, 16}, rng);
  // a single-sample batch normalizes every pre-activation to exactly beta;
  // keep the affine parameters away from the ReLU kink
  for (auto& layer : cc.hidden) {
    for (auto& v : layer.bn.beta.value.data) v = 0.4 + 0.2 * rng.uniform();
    for (auto& v : layer.bn.gamma.value.data) v = 0.8 + 0.4 * rng.uniform();
  }

  const size_t n = 10;
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  for (size_t e = 0; e < 18; ++e) {
    edges.push_back({static_cast<uint32_t>(rng.range(n)), static_cast<uint32_t>(rng.range(n))});
  }
  NormalizedAdjacency adj = normalize_adjacency(n, edges);
  Tens<double> h0({n, 512});
  for (auto& v : h0.data) v = rng.normal() * 0.3;
  const std::vector<uint8_t> label = {1};

  std::vector<std::pair<std::string, Param<double>*>> params;
  auto net_params = net.params();
  for (size_t i = 0; i < net_params.size(); ++i) {
    params.push_back({"sc2v#" + std::to_string(i), net_params[i]});
  }
  auto cc_params = cc.params();
  for (size_t i = 0; i < cc_params.size(); ++i) {
    params.push_back({"cc#" + std::to_string(i), cc_params[i]});
  }

  auto loss_fn = [&]() {
    Sc2vNetT<double>::Trace tr;
    std::vector<double> emb = net.forward(adj, h0, &tr);
    Tens<double> x({1, emb.size()});
    std::copy(emb.begin(), emb.end(), x.data.begin());
    CoreClassifierT<double> cc_local = cc;  // keep BN running stats fixed
    CoreClassifierT<double>::Trace cct;
    Rng drop_rng(4242);  // identical dropout mask on every evaluation
    Tens<double> prob = cc_local.forward(x, Mode::Train, &drop_rng, &cct);
    Tens<double> dprob;
    const double loss = bce_loss(prob, label, &dprob);
    Tens<double> dx = cc_local.backward(dprob, cct);
    auto local_params = cc_local.params();
    for (size_t i = 0; i < local_params.size(); ++i) {
      for (size_t j = 0; j < local_params[i]->grad.size(); ++j) {
        cc_params[i]->grad.data[j] += local_params[i]->grad.data[j];
      }
    }
    std::vector<double> de(dx.data.begin(), dx.data.end());
    auto grads = net.make_grads();
    net.backward(adj, tr, de, grads);
    net.add_grads(grads);
    return loss;
  };

  auto r = grad_check(params, loss_fn, 1e-4, 12);
  INFO("worst: " << r.worst_param << "[" << r.worst_index << "] analytic " << r.analytic
                 << " numeric " << r.numeric);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("grid coverage: every configuration constructs and runs") {
  Rng rng(0x9d);
  // spot-train the extremes plus a few sampled points
  std::vector<GridConfig> picks;
  auto all = enumerate_grid();
  picks.push_back(all.front());
  picks.push_back(all.back());
  for (size_t i = 0; i < 6; ++i) picks.push_back(all[rng.range(all.size())]);
  for (const GridConfig& g : picks) {
    for (SizeClass sc : {SizeClass::Large, SizeClass::Small}) {
      Sc2vConfig cfg = g.sc2v_config(sc);
      Sc2vNet net = Sc2vNet::random_init(cfg, rng);
      ControlFlowGraph graph = testutil::fake_cfg(7, 12, rng);
      Tensor h0 = testutil::random_features(7, 512, rng);
      ContractEmbedding e = embed_contract(graph, h0, net, sc);
      CHECK(e.vector.size() == cfg.embedding_dim());
      for (float v : e.vector) CHECK(std::isfinite(v));
    }
  }
}
