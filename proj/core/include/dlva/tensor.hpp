#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "dlva/error.hpp"
#include "dlva/parallel.hpp"
#include "dlva/rng.hpp"

namespace dlva {

// Dense row-major tensor. Storage is float in the pipeline; the double
// instantiation exists for the finite-difference check mode.
template <class T>
struct Tens {
  std::vector<size_t> shape;
  std::vector<T> data;

  Tens() = default;
  explicit Tens(std::vector<size_t> s) : shape(std::move(s)) {
    data.assign(count(shape), T(0));
  }

  static size_t count(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t e : s) n *= e;
    return n;
  }

  static Tens zeros(std::initializer_list<size_t> s) { return Tens(std::vector<size_t>(s)); }

  size_t size() const { return data.size(); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& operator()(size_t r, size_t c) { return data[r * shape[1] + c]; }
  const T& operator()(size_t r, size_t c) const { return data[r * shape[1] + c]; }

  void fill(T v) { data.assign(data.size(), v); }

  template <class U>
  Tens<U> cast() const {
    Tens<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool same_shape(const Tens& other) const { return shape == other.shape; }
};

using Tensor = Tens<float>;

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) raise(ErrorKind::ShapeMismatch, what);
}

// Trainable tensor with its gradient and Adam moments.
template <class T>
struct Param {
  Tens<T> value;
  Tens<T> grad;
  Tens<T> adam_m;
  Tens<T> adam_v;

  Param() = default;
  explicit Param(std::vector<size_t> shape)
      : value(shape), grad(shape), adam_m(shape), adam_v(std::move(shape)) {}

  void zero_grad() { grad.fill(T(0)); }

  void glorot_init(Rng& rng, size_t fan_in, size_t fan_out) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : value.data) v = static_cast<T>((rng.uniform() * 2.0 - 1.0) * limit);
  }
};

using Parameter = Param<float>;

// c[n×m] += or = a[n×k] · b[k×m]
template <class T>
void matmul(const Tens<T>& a, const Tens<T>& b, Tens<T>& c, bool accumulate = false) {
  const size_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
  require_shape(b.shape[0] == k, "matmul inner extent");
  if (!accumulate) {
    c.shape = {n, m};
    c.data.assign(n * m, T(0));
  }
  const T* pa = a.data.data();
  const T* pb = b.data.data();
  T* pc = c.data.data();
  parallel_for(n, 64, [&](size_t r0, size_t r1) {
    for (size_t i = r0; i < r1; ++i) {
      T* crow = pc + i * m;
      const T* arow = pa + i * k;
      for (size_t p = 0; p < k; ++p) {
        const T av = arow[p];
        if (av == T(0)) continue;
        const T* brow = pb + p * m;
        for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

// c[k×m] += aᵀ[k×n] · b[n×m]  (a given as [n×k])
template <class T>
void matmul_at(const Tens<T>& a, const Tens<T>& b, Tens<T>& c, bool accumulate = true) {
  const size_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
  require_shape(b.shape[0] == n, "matmul_at inner extent");
  if (!accumulate) {
    c.shape = {k, m};
    c.data.assign(k * m, T(0));
  }
  const T* pa = a.data.data();
  const T* pb = b.data.data();
  T* pc = c.data.data();
  for (size_t i = 0; i < n; ++i) {
    const T* arow = pa + i * k;
    const T* brow = pb + i * m;
    for (size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      T* crow = pc + p * m;
      for (size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[n×k] += a[n×m] · bᵀ[m×k]  (b given as [k×m])
template <class T>
void matmul_bt(const Tens<T>& a, const Tens<T>& b, Tens<T>& c, bool accumulate = false) {
  const size_t n = a.shape[0], m = a.shape[1], k = b.shape[0];
  require_shape(b.shape[1] == m, "matmul_bt inner extent");
  if (!accumulate) {
    c.shape = {n, k};
    c.data.assign(n * k, T(0));
  }
  const T* pa = a.data.data();
  const T* pb = b.data.data();
  T* pc = c.data.data();
  parallel_for(n, 64, [&](size_t r0, size_t r1) {
    for (size_t i = r0; i < r1; ++i) {
      const T* arow = pa + i * m;
      T* crow = pc + i * k;
      for (size_t p = 0; p < k; ++p) {
        const T* brow = pb + p * m;
        T acc = T(0);
        for (size_t j = 0; j < m; ++j) acc += arow[j] * brow[j];
        crow[p] += acc;
      }
    }
  });
}

}  // namespace dlva
