#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dlva/layers.hpp"
#include "dlva/tensor.hpp"

namespace dlva {

// Feed-forward head over contract embeddings. Hidden layers are
// Dense -> BatchNorm -> ReLU -> Dropout(0.5); the output layer is a single
// sigmoid unit. Shipped sizes: 1024, 512, 1.
template <class T>
struct CoreClassifierT {
  struct HiddenLayer {
    Param<T> w, b;
    BatchNorm<T> bn;
  };
  std::vector<HiddenLayer> hidden;
  Param<T> w_out, b_out;
  double dropout_p = 0.5;

  static CoreClassifierT random_init(size_t input_dim, const std::vector<size_t>& hidden_sizes,
                                     Rng& rng) {
    CoreClassifierT cc;
    size_t in = input_dim;
    for (size_t out : hidden_sizes) {
      HiddenLayer layer;
      layer.w = Param<T>({in, out});
      layer.b = Param<T>({out});
      layer.w.glorot_init(rng, in, out);
      layer.bn = BatchNorm<T>(out);
      cc.hidden.push_back(std::move(layer));
      in = out;
    }
    cc.w_out = Param<T>({in, 1});
    cc.b_out = Param<T>({1});
    cc.w_out.glorot_init(rng, in, 1);
    return cc;
  }

  size_t input_dim() const {
    return hidden.empty() ? w_out.value.shape[0] : hidden.front().w.value.shape[0];
  }

  struct Trace {
    std::vector<Tens<T>> x;      // input to each hidden dense
    std::vector<typename BatchNorm<T>::Ctx> bn;
    std::vector<Tens<T>> relu;   // post-ReLU output per hidden layer
    std::vector<Tens<T>> mask;   // dropout masks
    Tens<T> x_out;               // input to the output dense
    Tens<T> prob;                // sigmoid output [n×1]
  };

  // x[n×E] -> probabilities [n×1]. Dropout draws from rng in Train mode.
  Tens<T> forward(const Tens<T>& x, Mode mode, Rng* rng, Trace* trace) {
    require_shape(x.shape.size() == 2 && x.shape[1] == input_dim(), "classifier input");
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.x.clear();
    tr.bn.clear();
    tr.relu.clear();
    tr.mask.clear();
    Tens<T> cur = x;
    Rng fallback(0);
    for (auto& layer : hidden) {
      tr.x.push_back(cur);
      Tens<T> pre = dense_forward(cur, layer.w.value, layer.b.value);
      tr.bn.emplace_back();
      Tens<T> normed = layer.bn.forward(pre, mode, &tr.bn.back());
      activation_forward(Activation::Relu, normed);
      tr.relu.push_back(normed);
      tr.mask.emplace_back();
      cur = dropout_forward(tr.relu.back(), dropout_p, mode, rng ? *rng : fallback,
                            &tr.mask.back());
    }
    tr.x_out = cur;
    Tens<T> out = dense_forward(cur, w_out.value, b_out.value);
    activation_forward(Activation::Sigmoid, out);
    tr.prob = out;
    return out;
  }

  // dprob: dL/d(probability); returns dL/dx. Accumulates parameter grads.
  Tens<T> backward(const Tens<T>& dprob, const Trace& tr) {
    Tens<T> dy = activation_backward(Activation::Sigmoid, tr.prob, dprob);
    Tens<T> dx = dense_backward(tr.x_out, w_out.value, dy, w_out.grad, b_out.grad);
    for (size_t l = hidden.size(); l-- > 0;) {
      HiddenLayer& layer = hidden[l];
      dx = dropout_backward(dx, tr.mask[l]);
      dx = activation_backward(Activation::Relu, tr.relu[l], dx);
      dx = layer.bn.backward(dx, tr.bn[l]);
      dx = dense_backward(tr.x[l], layer.w.value, dx, layer.w.grad, layer.b.grad);
    }
    return dx;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& layer : hidden) {
      out.push_back(&layer.w);
      out.push_back(&layer.b);
      out.push_back(&layer.bn.gamma);
      out.push_back(&layer.bn.beta);
    }
    out.push_back(&w_out);
    out.push_back(&b_out);
    return out;
  }

  void visit_state(const std::function<void(const std::string&, Tens<T>&)>& fn) {
    for (size_t l = 0; l < hidden.size(); ++l) {
      const std::string p = "cc.dense" + std::to_string(l);
      fn(p + ".w", hidden[l].w.value);
      fn(p + ".b", hidden[l].b.value);
      fn(p + ".bn.gamma", hidden[l].bn.gamma.value);
      fn(p + ".bn.beta", hidden[l].bn.beta.value);
      fn(p + ".bn.running_mean", hidden[l].bn.running_mean);
      fn(p + ".bn.running_var", hidden[l].bn.running_var);
    }
    fn("cc.out.w", w_out.value);
    fn("cc.out.b", b_out.value);
  }
};

using CoreClassifier = CoreClassifierT<float>;

// Inference probability for a single embedding.
float cc_forward(const std::vector<float>& embedding, CoreClassifier& cc);

enum class Verdict : uint8_t { NonVulnerable = 0, Vulnerable = 1 };

// vulnerable iff probability >= threshold (boundary inclusive)
inline Verdict classify(double probability, double threshold) {
  return probability >= threshold ? Verdict::Vulnerable : Verdict::NonVulnerable;
}

}  // namespace dlva
