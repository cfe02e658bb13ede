#include "dlva/dan.hpp"

#include <algorithm>
#include <cmath>

#include "dlva/error.hpp"

namespace dlva {

Tensor encode_contract_nodes(const ControlFlowGraph& cfg, const DisassemblyListing& listing,
                             const TokenVocab& vocab, const DanEncoder& encoder) {
  Tensor m({cfg.nodes.size(), DanEncoder::kOutDim});
  for (size_t i = 0; i < cfg.nodes.size(); ++i) {
    std::vector<uint32_t> tokens = tokenize_block(cfg.nodes[i], listing, vocab);
    std::vector<float> v = encoder.encode(tokens);
    std::copy(v.begin(), v.end(), m.data.begin() + i * DanEncoder::kOutDim);
  }
  return m;
}

BlockGraph block_graph(const ControlFlowGraph& cfg, const DisassemblyListing& listing,
                       const TokenVocab& vocab) {
  BlockGraph g;
  g.blocks.reserve(cfg.nodes.size());
  for (const BasicBlock& b : cfg.nodes) g.blocks.push_back(tokenize_block(b, listing, vocab));
  g.neighbors.assign(cfg.nodes.size(), {});
  for (const auto& [from, to] : cfg.edges) {
    size_t fi = cfg.node_index(from), ti = cfg.node_index(to);
    if (fi >= cfg.nodes.size() || ti >= cfg.nodes.size() || fi == ti) continue;
    g.neighbors[fi].push_back(static_cast<uint32_t>(ti));
    g.neighbors[ti].push_back(static_cast<uint32_t>(fi));
  }
  for (auto& ns : g.neighbors) {
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  }
  return g;
}

namespace {

struct BlockRef {
  uint32_t contract;
  uint32_t block;
};

template <class V>
void fisher_yates(std::vector<V>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.range(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

DanEncoder train_unsupervised(const std::vector<BlockGraph>& corpus,
                              const EncoderTrainConfig& config, EncoderTrainReport* report) {
  std::vector<BlockRef> all_blocks;
  std::vector<BlockRef> anchors;
  for (uint32_t c = 0; c < corpus.size(); ++c) {
    for (uint32_t b = 0; b < corpus[c].blocks.size(); ++b) {
      all_blocks.push_back({c, b});
      if (!corpus[c].neighbors[b].empty()) anchors.push_back({c, b});
    }
  }
  if (all_blocks.empty() || anchors.empty()) {
    raise(ErrorKind::EmptyCorpus, "no blocks with CFG neighbors to train on");
  }

  Rng init_rng = Rng(config.seed).split(0);
  DanEncoder enc = DanEncoder::random_init(TokenVocab::standard().size(), init_rng);
  Adam<float> opt(AdamConfig{config.learning_rate});

  const size_t cands = 1 + config.negatives;
  const float inv_temp = static_cast<float>(1.0 / config.temperature);

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng = Rng(config.seed).split(epoch + 1);
    std::vector<BlockRef> order = anchors;
    fisher_yates(order, epoch_rng);
    double epoch_loss = 0.0;
    size_t seen = 0;

    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      for (size_t a = start; a < stop; ++a) {
        const BlockRef anchor = order[a];
        const auto& g = corpus[anchor.contract];
        const auto& ns = g.neighbors[anchor.block];
        const uint32_t pos = ns[epoch_rng.range(ns.size())];

        DanEncoder::Trace at;
        std::vector<float> ea = enc.encode(g.blocks[anchor.block], &at);
        std::vector<DanEncoder::Trace> ct(cands);
        std::vector<std::vector<float>> ec(cands);
        ec[0] = enc.encode(g.blocks[pos], &ct[0]);
        std::vector<BlockRef> negrefs(config.negatives);
        for (size_t k = 0; k < config.negatives; ++k) {
          negrefs[k] = all_blocks[epoch_rng.range(all_blocks.size())];
          ec[k + 1] = enc.encode(corpus[negrefs[k].contract].blocks[negrefs[k].block], &ct[k + 1]);
        }

        // softmax cross-entropy over cosine scores, positive first
        std::vector<float> logits(cands, 0.f);
        for (size_t k = 0; k < cands; ++k) {
          float dot = 0.f;
          for (size_t j = 0; j < DanEncoder::kOutDim; ++j) dot += ea[j] * ec[k][j];
          logits[k] = dot * inv_temp;
        }
        float maxl = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (float l : logits) denom += std::exp(static_cast<double>(l - maxl));
        epoch_loss += -static_cast<double>(logits[0] - maxl) + std::log(denom);
        seen++;

        std::vector<float> dlogit(cands);
        for (size_t k = 0; k < cands; ++k) {
          double p = std::exp(static_cast<double>(logits[k] - maxl)) / denom;
          dlogit[k] = static_cast<float>(p - (k == 0 ? 1.0 : 0.0));
        }
        std::vector<float> da(DanEncoder::kOutDim, 0.f);
        for (size_t k = 0; k < cands; ++k) {
          const float gk = dlogit[k] * inv_temp;
          std::vector<float> dc(DanEncoder::kOutDim);
          for (size_t j = 0; j < DanEncoder::kOutDim; ++j) {
            da[j] += gk * ec[k][j];
            dc[j] = gk * ea[j];
          }
          enc.backward(ct[k], dc);
        }
        enc.backward(at, da);
      }
      opt.step(enc.params());
    }
    if (report) report->epoch_losses.push_back(seen ? epoch_loss / seen : 0.0);
  }
  return enc;
}

double neighbor_margin(const DanEncoder& encoder, const std::vector<BlockGraph>& corpus,
                       uint64_t seed, size_t samples) {
  std::vector<BlockRef> anchors, all_blocks;
  for (uint32_t c = 0; c < corpus.size(); ++c) {
    for (uint32_t b = 0; b < corpus[c].blocks.size(); ++b) {
      all_blocks.push_back({c, b});
      if (!corpus[c].neighbors[b].empty()) anchors.push_back({c, b});
    }
  }
  if (anchors.empty()) return 0.0;
  Rng rng(seed);
  double neigh = 0.0, rand = 0.0;
  size_t n = 0;
  for (size_t s = 0; s < samples; ++s) {
    const BlockRef a = anchors[rng.range(anchors.size())];
    const auto& g = corpus[a.contract];
    const uint32_t pos = g.neighbors[a.block][rng.range(g.neighbors[a.block].size())];
    const BlockRef r = all_blocks[rng.range(all_blocks.size())];
    std::vector<float> ea = encoder.encode(g.blocks[a.block]);
    std::vector<float> ep = encoder.encode(g.blocks[pos]);
    std::vector<float> er = encoder.encode(corpus[r.contract].blocks[r.block]);
    double dn = 0.0, dr = 0.0;
    for (size_t j = 0; j < DanEncoder::kOutDim; ++j) {
      dn += ea[j] * ep[j];
      dr += ea[j] * er[j];
    }
    neigh += dn;
    rand += dr;
    ++n;
  }
  return (neigh - rand) / static_cast<double>(n);
}

}  // namespace dlva
