#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlva/dataset.hpp"
#include "dlva/model.hpp"

namespace dlva {

struct TrainConfig {
  double learning_rate = 5e-4;
  size_t batch_size = 512;
  size_t max_epochs = 100;
  size_t early_stop_patience = 20;
  uint64_t seed = 1;
};

// A contract reduced to what the joint trainer consumes: normalized
// adjacency, frozen node features and the supervision bit.
struct PreparedContract {
  NormalizedAdjacency adj;
  Tensor nodes;
  uint8_t label = 0;
};

std::vector<PreparedContract> prepare_contracts(const std::vector<ContractRecord>& records,
                                                const std::string& vulnerability,
                                                const TokenVocab& vocab,
                                                const DanEncoder& encoder);

struct TrainReport {
  std::vector<double> train_losses;
  std::vector<double> valid_losses;
  size_t best_epoch = 0;
  double best_valid_loss = 0.0;
  size_t epochs_run = 0;
  bool single_class_warning = false;
};

// Joint SC2V + classifier training with BCE, early stopping on validation
// loss (patience epochs without improvement) and best-epoch weight restore.
// The block encoder stays frozen. Deterministic for a fixed seed regardless
// of the worker-thread count.
VulnerabilityModel train_model(const std::vector<ContractRecord>& train,
                               const std::vector<ContractRecord>& valid,
                               const std::string& vulnerability, SizeClass size_class,
                               const TrainConfig& config, const GridConfig& arch,
                               TrainReport* report = nullptr);

// Same, but with pre-encoded contracts and an existing model to train in
// place (its encoder is only used as metadata here).
void train_model_inplace(VulnerabilityModel& model, const std::vector<PreparedContract>& train,
                         const std::vector<PreparedContract>& valid, const TrainConfig& config,
                         TrainReport* report = nullptr);

// Mean inference-mode BCE over a prepared set.
double evaluate_loss(VulnerabilityModel& model, const std::vector<PreparedContract>& contracts);

}  // namespace dlva
