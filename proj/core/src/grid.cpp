#include "dlva/grid.hpp"

namespace dlva {

std::vector<size_t> GridConfig::gcn_sizes() const {
  std::vector<size_t> sizes;
  size_t w = gcn_leading;
  for (size_t l = 0; l + 1 < gcn_layers; ++l) {
    sizes.push_back(w);
    w = w / 2;
  }
  sizes.push_back(1);
  return sizes;
}

std::vector<size_t> GridConfig::dense_hidden_sizes() const {
  std::vector<size_t> sizes;
  size_t w = dense_leading;
  for (size_t l = 0; l + 1 < dense_layers; ++l) {
    sizes.push_back(w);
    w = w / 2;
  }
  return sizes;
}

Sc2vConfig GridConfig::sc2v_config(SizeClass size_class) const {
  Sc2vConfig c = Sc2vConfig::preset(size_class);
  c.gcn_sizes = gcn_sizes();
  c.aggregation = aggregation;
  c.conv_layers = conv_layers;
  c.gcn_activation = activation;
  return c;
}

std::string GridConfig::to_string() const {
  std::string s = "gcn=" + std::to_string(gcn_layers) + "x" + std::to_string(gcn_leading);
  s += " agg=" + std::string(aggregation_name(aggregation));
  s += " conv=" + std::to_string(conv_layers);
  s += " dense=" + std::to_string(dense_layers) + "x" + std::to_string(dense_leading);
  s += " act=" + std::string(activation_name(activation));
  return s;
}

GridConfig GridConfig::shipped() { return GridConfig{}; }

std::vector<GridConfig> enumerate_grid(const HyperGrid& grid) {
  std::vector<GridConfig> out;
  out.reserve(972);
  for (size_t gl : grid.gcn_layer_counts)
    for (size_t gs : grid.neuron_sizes)
      for (Aggregation agg : grid.aggregations)
        for (size_t cv : grid.conv1d_counts)
          for (size_t dl : grid.dense_counts)
            for (size_t ds : grid.dense_sizes)
              for (Activation act : grid.activations)
                out.push_back(GridConfig{gl, gs, agg, cv, dl, ds, act});
  return out;
}

}  // namespace dlva
