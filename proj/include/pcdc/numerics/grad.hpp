// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/numerics/param_set.hpp>

#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <vector>

namespace pcdc {

struct ValueAndGrad {
  double value = 0.0;
  ParamSet grad;
};

/// A loss with a hand-written backward pass: maps parameters to the loss
/// value and its gradient with respect to every parameter.
template <typename F>
concept DifferentiableLoss = requires(const F &f, const ParamSet &p) {
  { f(p) } -> std::convertible_to<ValueAndGrad>;
};

/// Evaluates `loss` and returns d loss / d p for every parameter p. Raises
/// NumericError naming the first parameter whose gradient is not finite, or
/// "loss" when the value itself is not finite.
template <DifferentiableLoss F>
ParamSet grad(const F &loss, const ParamSet &params) {
  ValueAndGrad vg = loss(params);
  if (!std::isfinite(vg.value))
    throw NumericError("non-finite loss value");
  params.require_compatible(vg.grad);
  for (const auto &[name, g] : vg.grad)
    if (!g.all_finite())
      throw NumericError("non-finite gradient for parameter " + name);
  return std::move(vg.grad);
}

using ScalarLoss = std::function<double(const ParamSet &)>;

/// Central finite differences, one coordinate at a time. Test oracle for
/// the analytic gradients; cost is 2 * numel(params) loss evaluations.
inline ParamSet finite_difference_grad(const ScalarLoss &loss,
                                       const ParamSet &params,
                                       double h = 1e-5) {
  ParamSet out = params.zeros_like();
  ParamSet probe = params;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    auto &p = probe.entry(i).second;
    auto &g = out.entry(i).second;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double orig = p[k];
      p[k] = orig + h;
      const double up = loss(probe);
      p[k] = orig - h;
      const double down = loss(probe);
      p[k] = orig;
      g[k] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

struct GroupCheck {
  std::string name;
  double analytic_norm = 0.0;
  double rel_error = 0.0;
};

/// Per-group agreement ||a - n|| / (||a|| + 1e-8).
inline std::vector<GroupCheck> compare_gradients(const ParamSet &analytic,
                                                 const ParamSet &numeric) {
  analytic.require_compatible(numeric);
  std::vector<GroupCheck> out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const auto &[name, a] = analytic.entry(i);
    const auto &n = numeric.entry(i).second;
    double diff = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
      diff += (a[k] - n[k]) * (a[k] - n[k]);
    const double an = l2_norm(a.span());
    out.push_back({name, an, std::sqrt(diff) / (an + 1e-8)});
  }
  return out;
}

} // namespace pcdc
