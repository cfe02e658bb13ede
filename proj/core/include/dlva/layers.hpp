#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dlva/rng.hpp"
#include "dlva/tensor.hpp"

namespace dlva {

enum class Mode { Train, Infer };
enum class Activation : uint8_t { Tanh, Relu, Sigmoid };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// ---- dense -----------------------------------------------------------------

// y[n×out] = x[n×in] · w[in×out] + b[out]
template <class T>
Tens<T> dense_forward(const Tens<T>& x, const Tens<T>& w, const Tens<T>& b) {
  require_shape(x.shape.size() == 2 && w.shape.size() == 2 && x.shape[1] == w.shape[0],
                "dense input/weight");
  require_shape(b.size() == w.shape[1], "dense bias");
  Tens<T> y;
  matmul(x, w, y);
  const size_t out = w.shape[1];
  for (size_t i = 0; i < y.shape[0]; ++i)
    for (size_t j = 0; j < out; ++j) y(i, j) += b.data[j];
  return y;
}

// accumulates dw, db; returns dx
template <class T>
Tens<T> dense_backward(const Tens<T>& x, const Tens<T>& w, const Tens<T>& dy, Tens<T>& dw,
                       Tens<T>& db) {
  matmul_at(x, dy, dw, /*accumulate=*/true);
  for (size_t i = 0; i < dy.shape[0]; ++i)
    for (size_t j = 0; j < dy.shape[1]; ++j) db.data[j] += dy(i, j);
  Tens<T> dx;
  matmul_bt(dy, w, dx);
  return dx;
}

// ---- 1-D convolution (valid padding) ----------------------------------------

inline size_t conv1d_out_len(size_t len, size_t kernel, size_t stride) {
  return (len - kernel) / stride + 1;
}

// x[len×ic], kernel[kw×ic×oc], bias[oc] -> y[olen×oc]
template <class T>
Tens<T> conv1d_forward(const Tens<T>& x, const Tens<T>& kernel, const Tens<T>& bias,
                       size_t stride) {
  require_shape(x.shape.size() == 2 && kernel.shape.size() == 3, "conv1d rank");
  const size_t len = x.shape[0], ic = x.shape[1];
  const size_t kw = kernel.shape[0], oc = kernel.shape[2];
  require_shape(kernel.shape[1] == ic, "conv1d channels");
  require_shape(bias.size() == oc, "conv1d bias");
  if (len < kw) raise(ErrorKind::KernelTooLong, "input length " + std::to_string(len) +
                                                    " < kernel " + std::to_string(kw));
  const size_t olen = conv1d_out_len(len, kw, stride);
  Tens<T> y({olen, oc});
  for (size_t o = 0; o < olen; ++o) {
    T* yrow = y.data.data() + o * oc;
    for (size_t j = 0; j < oc; ++j) yrow[j] = bias.data[j];
    const size_t base = o * stride;
    for (size_t t = 0; t < kw; ++t) {
      const T* xrow = x.data.data() + (base + t) * ic;
      const T* krow = kernel.data.data() + t * ic * oc;
      for (size_t c = 0; c < ic; ++c) {
        const T xv = xrow[c];
        if (xv == T(0)) continue;
        const T* kk = krow + c * oc;
        for (size_t j = 0; j < oc; ++j) yrow[j] += xv * kk[j];
      }
    }
  }
  return y;
}

template <class T>
Tens<T> conv1d_backward(const Tens<T>& x, const Tens<T>& kernel, size_t stride, const Tens<T>& dy,
                        Tens<T>& dkernel, Tens<T>& dbias) {
  const size_t len = x.shape[0], ic = x.shape[1];
  const size_t kw = kernel.shape[0], oc = kernel.shape[2];
  const size_t olen = dy.shape[0];
  Tens<T> dx({len, ic});
  for (size_t o = 0; o < olen; ++o) {
    const T* dyrow = dy.data.data() + o * oc;
    for (size_t j = 0; j < oc; ++j) dbias.data[j] += dyrow[j];
    const size_t base = o * stride;
    for (size_t t = 0; t < kw; ++t) {
      const T* xrow = x.data.data() + (base + t) * ic;
      T* dxrow = dx.data.data() + (base + t) * ic;
      const size_t koff = t * ic * oc;
      for (size_t c = 0; c < ic; ++c) {
        const T* kk = kernel.data.data() + koff + c * oc;
        T* dk = dkernel.data.data() + koff + c * oc;
        T acc = T(0);
        const T xv = xrow[c];
        for (size_t j = 0; j < oc; ++j) {
          acc += dyrow[j] * kk[j];
          dk[j] += dyrow[j] * xv;
        }
        dxrow[c] += acc;
      }
    }
  }
  return dx;
}

// ---- max pooling (size 2, stride 2) -----------------------------------------

// x[len×ch] -> y[len/2×ch]; argmax records the winning source row per output
template <class T>
Tens<T> maxpool1d_forward(const Tens<T>& x, std::vector<uint32_t>& argmax) {
  const size_t len = x.shape[0], ch = x.shape[1];
  const size_t olen = len / 2;  // trailing odd element dropped
  Tens<T> y({olen, ch});
  argmax.assign(olen * ch, 0);
  for (size_t o = 0; o < olen; ++o) {
    for (size_t c = 0; c < ch; ++c) {
      const T a = x(2 * o, c), b = x(2 * o + 1, c);
      const bool second = b > a;
      y(o, c) = second ? b : a;
      argmax[o * ch + c] = static_cast<uint32_t>(2 * o + (second ? 1 : 0));
    }
  }
  return y;
}

template <class T>
Tens<T> maxpool1d_backward(const Tens<T>& dy, const std::vector<uint32_t>& argmax, size_t len) {
  const size_t olen = dy.shape[0], ch = dy.shape[1];
  Tens<T> dx({len, ch});
  for (size_t o = 0; o < olen; ++o)
    for (size_t c = 0; c < ch; ++c) dx(argmax[o * ch + c], c) += dy(o, c);
  return dx;
}

// ---- activations ------------------------------------------------------------

template <class T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
void activation_forward(Activation act, Tens<T>& x) {
  switch (act) {
    case Activation::Tanh:
      for (auto& v : x.data) v = std::tanh(v);
      break;
    case Activation::Relu:
      for (auto& v : x.data) v = v > T(0) ? v : T(0);
      break;
    case Activation::Sigmoid:
      for (auto& v : x.data) v = sigmoid_scalar(v);
      break;
  }
}

// dx from dy and the activation *output* y
template <class T>
Tens<T> activation_backward(Activation act, const Tens<T>& y, const Tens<T>& dy) {
  Tens<T> dx = dy;
  switch (act) {
    case Activation::Tanh:
      for (size_t i = 0; i < dx.size(); ++i) dx.data[i] *= T(1) - y.data[i] * y.data[i];
      break;
    case Activation::Relu:
      for (size_t i = 0; i < dx.size(); ++i) dx.data[i] = y.data[i] > T(0) ? dx.data[i] : T(0);
      break;
    case Activation::Sigmoid:
      for (size_t i = 0; i < dx.size(); ++i) dx.data[i] *= y.data[i] * (T(1) - y.data[i]);
      break;
  }
  return dx;
}

// ---- batch normalization -----------------------------------------------------

template <class T>
struct BatchNorm {
  Param<T> gamma, beta;
  Tens<T> running_mean, running_var;
  T eps = T(1e-5);
  T momentum = T(0.99);

  BatchNorm() = default;
  explicit BatchNorm(size_t features)
      : gamma({features}), beta({features}), running_mean({features}), running_var({features}) {
    gamma.value.fill(T(1));
    running_var.fill(T(1));
  }

  size_t features() const { return gamma.value.size(); }

  struct Ctx {
    Tens<T> xhat;
    std::vector<T> inv_std;
  };

  // x[n×f]; training mode normalizes by batch statistics (biased variance)
  // and updates running stats; inference uses the running statistics.
  Tens<T> forward(const Tens<T>& x, Mode mode, Ctx* ctx) {
    const size_t n = x.shape[0], f = x.shape[1];
    require_shape(f == features(), "batchnorm features");
    Tens<T> y({n, f});
    if (mode == Mode::Train) {
      ctx->xhat = Tens<T>({n, f});
      ctx->inv_std.assign(f, T(0));
      for (size_t j = 0; j < f; ++j) {
        T mean = T(0);
        for (size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<T>(n);
        T var = T(0);
        for (size_t i = 0; i < n; ++i) {
          const T d = x(i, j) - mean;
          var += d * d;
        }
        var /= static_cast<T>(n);
        const T inv = T(1) / std::sqrt(var + eps);
        ctx->inv_std[j] = inv;
        for (size_t i = 0; i < n; ++i) {
          const T xh = (x(i, j) - mean) * inv;
          ctx->xhat(i, j) = xh;
          y(i, j) = gamma.value.data[j] * xh + beta.value.data[j];
        }
        running_mean.data[j] = momentum * running_mean.data[j] + (T(1) - momentum) * mean;
        running_var.data[j] = momentum * running_var.data[j] + (T(1) - momentum) * var;
      }
    } else {
      for (size_t j = 0; j < f; ++j) {
        const T inv = T(1) / std::sqrt(running_var.data[j] + eps);
        for (size_t i = 0; i < n; ++i) {
          y(i, j) = gamma.value.data[j] * (x(i, j) - running_mean.data[j]) * inv +
                    beta.value.data[j];
        }
      }
    }
    return y;
  }

  Tens<T> backward(const Tens<T>& dy, const Ctx& ctx) {
    const size_t n = dy.shape[0], f = dy.shape[1];
    Tens<T> dx({n, f});
    for (size_t j = 0; j < f; ++j) {
      T sum_dy = T(0), sum_dy_xhat = T(0);
      for (size_t i = 0; i < n; ++i) {
        sum_dy += dy(i, j);
        sum_dy_xhat += dy(i, j) * ctx.xhat(i, j);
      }
      gamma.grad.data[j] += sum_dy_xhat;
      beta.grad.data[j] += sum_dy;
      const T g = gamma.value.data[j];
      const T inv = ctx.inv_std[j];
      const T invn = T(1) / static_cast<T>(n);
      for (size_t i = 0; i < n; ++i) {
        dx(i, j) = g * inv * (dy(i, j) - invn * sum_dy - invn * ctx.xhat(i, j) * sum_dy_xhat);
      }
    }
    return dx;
  }
};

// ---- dropout -----------------------------------------------------------------

// Inverted dropout: train mode zeroes with probability p and scales survivors
// by 1/(1-p); inference is the identity. The mask doubles as the backward
// multiplier.
template <class T>
Tens<T> dropout_forward(const Tens<T>& x, double p, Mode mode, Rng& rng, Tens<T>* mask) {
  if (mode == Mode::Infer || p <= 0.0) {
    if (mask) {
      *mask = Tens<T>(x.shape);
      mask->fill(T(1));
    }
    return x;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  Tens<T> y(x.shape);
  *mask = Tens<T>(x.shape);
  for (size_t i = 0; i < x.size(); ++i) {
    const bool keep = rng.uniform() >= p;
    mask->data[i] = keep ? scale : T(0);
    y.data[i] = x.data[i] * mask->data[i];
  }
  return y;
}

template <class T>
Tens<T> dropout_backward(const Tens<T>& dy, const Tens<T>& mask) {
  Tens<T> dx = dy;
  for (size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask.data[i];
  return dx;
}

// ---- binary cross-entropy ------------------------------------------------------

// mean of -(y·log p̂ + (1-y)·log(1-p̂)), p̂ clamped to [1e-7, 1-1e-7].
// Returns the loss and writes dL/dp.
template <class T>
double bce_loss(const Tens<T>& p, const std::vector<uint8_t>& y, Tens<T>* dp) {
  require_shape(p.size() == y.size(), "bce sizes");
  const size_t n = p.size();
  if (n == 0) return 0.0;
  const double lo = 1e-7, hi = 1.0 - 1e-7;
  if (dp) *dp = Tens<T>(p.shape);
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double ph = std::min(hi, std::max(lo, static_cast<double>(p.data[i])));
    loss += y[i] ? -std::log(ph) : -std::log(1.0 - ph);
    if (dp) {
      const bool clamped = static_cast<double>(p.data[i]) < lo || static_cast<double>(p.data[i]) > hi;
      double g = clamped ? 0.0 : (y[i] ? -1.0 / ph : 1.0 / (1.0 - ph));
      dp->data[i] = static_cast<T>(g / static_cast<double>(n));
    }
  }
  return loss / static_cast<double>(n);
}

// ---- L2 normalization -----------------------------------------------------------

// y = x / max(||x||, floor); returns the norm used.
template <class T>
T l2_normalize(const std::vector<T>& x, std::vector<T>& y) {
  T norm2 = T(0);
  for (T v : x) norm2 += v * v;
  T norm = std::sqrt(norm2);
  const T floor_ = T(1e-12);
  const T denom = norm > floor_ ? norm : floor_;
  y.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] / denom;
  return denom;
}

// dx given the normalized output y, the norm used, and dy.
template <class T>
void l2_normalize_backward(const std::vector<T>& y, T norm, const std::vector<T>& dy,
                           std::vector<T>& dx) {
  T dot = T(0);
  for (size_t i = 0; i < y.size(); ++i) dot += y[i] * dy[i];
  dx.resize(y.size());
  for (size_t i = 0; i < y.size(); ++i) dx[i] = (dy[i] - y[i] * dot) / norm;
}

// ---- Adam ------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction; zeroes gradients after applying them.
template <class T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::vector<Param<T>*> params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Param<T>* p : params) {
      auto& w = p->value.data;
      auto& g = p->grad.data;
      auto& m = p->adam_m.data;
      auto& v = p->adam_v.data;
      for (size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * gi;
        const double vi = cfg_.beta2 * static_cast<double>(v[i]) + (1.0 - cfg_.beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        w[i] -= static_cast<T>(cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps));
        g[i] = T(0);
      }
    }
  }

  uint64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  uint64_t t_ = 0;
};

}  // namespace dlva
