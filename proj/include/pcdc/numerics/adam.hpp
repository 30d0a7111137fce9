// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/numerics/param_set.hpp>

#include <cmath>
#include <cstdint>

namespace pcdc {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers mirroring a ParamSet, plus the step count.
struct AdamState {
  AdamHyper hyper;
  ParamSet m;
  ParamSet v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(const ParamSet &params, AdamHyper h)
      : hyper(h), m(params.zeros_like()), v(params.zeros_like()) {}
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(ParamSet &params, const ParamSet &grads,
                      AdamState &state) {
  params.require_compatible(grads);
  params.require_compatible(state.m);
  params.require_compatible(state.v);

  ++state.t;
  const auto &h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto &p = params.entry(i).second;
    const auto &g = grads.entry(i).second;
    auto &m = state.m.entry(i).second;
    auto &v = state.v.entry(i).second;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
  }
}

} // namespace pcdc
