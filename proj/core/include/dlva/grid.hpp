#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlva/sc2v.hpp"

namespace dlva {

// One point of the hyperparameter grid:
// {2,3,4} GCN layers x {128,256} leading width x {mean,sum,sort-top-k}
// aggregation x {1,2,3} conv layers x {1,2,3} dense layers x {256,512,1024}
// leading dense width x {tanh,relu} -> 972 configurations.
struct GridConfig {
  size_t gcn_layers = 3;
  size_t gcn_leading = 256;
  Aggregation aggregation = Aggregation::SortTopK;
  size_t conv_layers = 2;
  size_t dense_layers = 3;
  size_t dense_leading = 1024;
  Activation activation = Activation::Tanh;

  // GCN widths halve from the leading size; the final layer is always the
  // single sort/readout channel.
  std::vector<size_t> gcn_sizes() const;
  // Hidden dense widths halve from the leading size; the sigmoid output unit
  // is implied.
  std::vector<size_t> dense_hidden_sizes() const;

  Sc2vConfig sc2v_config(SizeClass size_class) const;

  std::string to_string() const;
  bool operator==(const GridConfig&) const = default;

  static GridConfig shipped();  // the architecture the presets use
};

struct HyperGrid {
  std::vector<size_t> gcn_layer_counts = {2, 3, 4};
  std::vector<size_t> neuron_sizes = {128, 256};
  std::vector<Aggregation> aggregations = {Aggregation::Mean, Aggregation::Sum,
                                           Aggregation::SortTopK};
  std::vector<size_t> conv1d_counts = {1, 2, 3};
  std::vector<size_t> dense_counts = {1, 2, 3};
  std::vector<size_t> dense_sizes = {256, 512, 1024};
  std::vector<Activation> activations = {Activation::Tanh, Activation::Relu};
};

// All configurations in lexicographic order of the fields above.
std::vector<GridConfig> enumerate_grid(const HyperGrid& grid = HyperGrid{});

}  // namespace dlva
