#include "dlva/train.hpp"

#include <algorithm>
#include <cstdio>

#include "dlva/error.hpp"
#include "dlva/parallel.hpp"

namespace dlva {
namespace {

// Fixed shard count so gradient reduction order does not depend on how many
// worker threads happen to run.
constexpr size_t kGradShards = 16;

template <class V>
void fisher_yates(std::vector<V>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.range(i);
    std::swap(v[i - 1], v[j]);
  }
}

struct Snapshot {
  std::vector<Tensor> tensors;
};

Snapshot take_snapshot(VulnerabilityModel& model) {
  Snapshot s;
  model.visit_state([&](const std::string&, Tensor& t) { s.tensors.push_back(t); });
  return s;
}

void restore_snapshot(VulnerabilityModel& model, const Snapshot& s) {
  size_t i = 0;
  model.visit_state([&](const std::string&, Tensor& t) { t = s.tensors[i++]; });
}

}  // namespace

std::vector<PreparedContract> prepare_contracts(const std::vector<ContractRecord>& records,
                                                const std::string& vulnerability,
                                                const TokenVocab& vocab,
                                                const DanEncoder& encoder) {
  std::vector<PreparedContract> out(records.size());
  std::vector<const ContractRecord*> recs(records.size());
  for (size_t i = 0; i < records.size(); ++i) recs[i] = &records[i];
  parallel_for(records.size(), 4, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const ContractRecord& rec = *recs[i];
      auto it = rec.labels.find(vulnerability);
      if (it == rec.labels.end()) {
        raise(ErrorKind::MissingLabels, rec.address + " lacks label " + vulnerability);
      }
      DisassemblyListing listing = disassemble(rec.bytecode);
      ControlFlowGraph cfg = build_cfg(listing);
      out[i].adj = normalize_adjacency(cfg);
      out[i].nodes = encode_contract_nodes(cfg, listing, vocab, encoder);
      out[i].label = it->second;
    }
  });
  return out;
}

double evaluate_loss(VulnerabilityModel& model, const std::vector<PreparedContract>& contracts) {
  const size_t n = contracts.size();
  Tensor embeddings({n, model.embedding_dim()});
  parallel_for(n, 2, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      std::vector<float> e = model.sc2v.forward(contracts[i].adj, contracts[i].nodes);
      std::copy(e.begin(), e.end(), embeddings.data.begin() + i * e.size());
    }
  });
  Tensor probs = model.cc.forward(embeddings, Mode::Infer, nullptr, nullptr);
  std::vector<uint8_t> labels(n);
  for (size_t i = 0; i < n; ++i) labels[i] = contracts[i].label;
  return bce_loss(probs, labels, static_cast<Tensor*>(nullptr));
}

void train_model_inplace(VulnerabilityModel& model, const std::vector<PreparedContract>& train,
                         const std::vector<PreparedContract>& valid, const TrainConfig& config,
                         TrainReport* report) {
  if (train.empty() || valid.empty()) {
    raise(ErrorKind::EmptyDataset, "training and validation sets must be non-empty");
  }
  TrainReport local;
  TrainReport& rep = report ? *report : local;

  bool has0 = false, has1 = false;
  for (const auto& c : train) (c.label ? has1 : has0) = true;
  rep.single_class_warning = !(has0 && has1);
  if (rep.single_class_warning) {
    std::fprintf(stderr, "warning: %s training set contains a single class only\n",
                 model.vulnerability.c_str());
  }

  Adam<float> opt(AdamConfig{config.learning_rate});
  std::vector<Param<float>*> trainable = model.sc2v.params();
  for (Param<float>* p : model.cc.params()) trainable.push_back(p);

  const size_t embed_dim = model.embedding_dim();
  double best_valid = 0.0;
  Snapshot best;
  size_t since_best = 0;
  uint64_t batch_counter = 0;

  for (size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng order_rng = Rng(config.seed).split(1000 + epoch);
    std::vector<uint32_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<uint32_t>(i);
    fisher_yates(order, order_rng);

    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      const size_t bsz = stop - start;

      // phase A: per-contract embeddings in parallel shards
      Tensor embeddings({bsz, embed_dim});
      std::vector<Sc2vNet::Trace> traces(bsz);
      parallel_for(bsz, 2, [&](size_t lo, size_t hi) {
        for (size_t b = lo; b < hi; ++b) {
          const PreparedContract& c = train[order[start + b]];
          std::vector<float> e = model.sc2v.forward(c.adj, c.nodes, &traces[b]);
          std::copy(e.begin(), e.end(), embeddings.data.begin() + b * embed_dim);
        }
      });

      // phase B: classifier over the whole batch
      Rng dropout_rng = Rng(config.seed).split(2000 + batch_counter);
      CoreClassifier::Trace cc_trace;
      Tensor probs = model.cc.forward(embeddings, Mode::Train, &dropout_rng, &cc_trace);
      std::vector<uint8_t> labels(bsz);
      for (size_t b = 0; b < bsz; ++b) labels[b] = train[order[start + b]].label;
      Tensor dprob;
      epoch_loss += bce_loss(probs, labels, &dprob);
      Tensor dembeddings = model.cc.backward(dprob, cc_trace);

      // phase C: embedder gradients in fixed shards, reduced in shard order
      std::vector<Sc2vNet::Grads> shard_grads(kGradShards);
      const size_t chunk = (bsz + kGradShards - 1) / kGradShards;
      parallel_for(kGradShards, 1, [&](size_t s0, size_t s1) {
        for (size_t s = s0; s < s1; ++s) {
          const size_t lo = s * chunk, hi = std::min(bsz, lo + chunk);
          if (lo >= hi) continue;
          shard_grads[s] = model.sc2v.make_grads();
          std::vector<float> de(embed_dim);
          for (size_t b = lo; b < hi; ++b) {
            const PreparedContract& c = train[order[start + b]];
            std::copy(dembeddings.data.begin() + b * embed_dim,
                      dembeddings.data.begin() + (b + 1) * embed_dim, de.begin());
            model.sc2v.backward(c.adj, traces[b], de, shard_grads[s]);
          }
        }
      });
      for (const auto& g : shard_grads) {
        if (!g.gcn_w.empty()) model.sc2v.add_grads(g);
      }

      opt.step(trainable);
      ++batches;
      ++batch_counter;
    }
    rep.train_losses.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);

    const double vloss = evaluate_loss(model, valid);
    rep.valid_losses.push_back(vloss);
    rep.epochs_run = epoch + 1;
    if (epoch == 0 || vloss < best_valid) {
      best_valid = vloss;
      best = take_snapshot(model);
      rep.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }
  restore_snapshot(model, best);
  rep.best_valid_loss = best_valid;
}

VulnerabilityModel train_model(const std::vector<ContractRecord>& train,
                               const std::vector<ContractRecord>& valid,
                               const std::string& vulnerability, SizeClass size_class,
                               const TrainConfig& config, const GridConfig& arch,
                               TrainReport* report) {
  if (train.empty() || valid.empty()) {
    raise(ErrorKind::EmptyDataset, "training and validation sets must be non-empty");
  }
  VulnerabilityModel model =
      VulnerabilityModel::random_init(vulnerability, size_class, arch, config.seed);
  std::vector<PreparedContract> ptrain =
      prepare_contracts(train, vulnerability, model.vocab, model.encoder);
  std::vector<PreparedContract> pvalid =
      prepare_contracts(valid, vulnerability, model.vocab, model.encoder);
  train_model_inplace(model, ptrain, pvalid, config, report);
  return model;
}

}  // namespace dlva
