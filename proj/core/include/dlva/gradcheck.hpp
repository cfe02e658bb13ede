#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dlva/rng.hpp"
#include "dlva/tensor.hpp"

namespace dlva {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares analytic gradients against central finite differences in double
// precision. loss_fn must be a pure function of the parameter values that
// accumulates gradients into .grad as a side effect; gradients are zeroed
// before the analytic pass. Large tensors are spot-checked at
// samples_per_tensor deterministic positions.
inline GradCheckResult grad_check(const std::vector<std::pair<std::string, Param<double>*>>& params,
                                  const std::function<double()>& loss_fn, double eps = 1e-4,
                                  size_t samples_per_tensor = 24, uint64_t seed = 7) {
  for (auto& [name, p] : params) p->zero_grad();
  loss_fn();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& [name, p] : params) analytic.push_back(p->grad.data);

  GradCheckResult result;
  Rng rng(seed);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param<double>& p = *params[pi].second;
    const size_t n = p.value.size();
    std::vector<size_t> idx;
    if (n <= samples_per_tensor) {
      for (size_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      idx.push_back(0);
      idx.push_back(n - 1);
      while (idx.size() < samples_per_tensor) idx.push_back(rng.range(n));
    }
    for (size_t i : idx) {
      const double saved = p.value.data[i];
      p.value.data[i] = saved + eps;
      const double up = loss_fn();
      p.value.data[i] = saved - eps;
      const double down = loss_fn();
      p.value.data[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[pi][i];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
      const double rel = std::abs(fd - an) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = params[pi].first;
        result.worst_index = i;
        result.analytic = an;
        result.numeric = fd;
      }
    }
  }
  return result;
}

}  // namespace dlva
