// SPDX-License-Identifier: Apache-2.0
#pragma once

// Prediction loss plus domain-informed constraints on the transport readout
// tr[t][v][c], t = 0..T:
//   spatial   (1/T) sum_{t=1..T} mean_c | sum_v tr[t][v][c] |
//   temporal  (1/T) sum_{t=1..T} mean_c | sum_v (tr[t][v][c] - tr[t-1][v][c]) |
//   smooth    (1/T) sum_{t=1..T} || tr[t] - tr[t-1] ||_2     (optional)
// Each function can also return its gradient with respect to its inputs.
// The subgradient of |x| at 0 is taken as 0.

#include <pcdc/error.hpp>
#include <pcdc/numerics/tensor.hpp>

#include <cmath>

namespace pcdc::loss {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Mean absolute error over every element.
inline double l1_loss(const Tensor &pred, const Tensor &truth, Tensor *g_pred = nullptr) {
  pred.require_same_shape(truth, "l1_loss");
  if (pred.empty())
    throw DimensionError("l1_loss on empty tensors");
  const double n = static_cast<double>(pred.size());
  double s = 0.0;
  if (g_pred)
    *g_pred = Tensor(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += std::abs(d);
    if (g_pred)
      (*g_pred)[i] = sign(d) / n;
  }
  return s / n;
}

struct DicTerms {
  double spatial = 0.0;
  double temporal = 0.0;
};

namespace detail {
inline void require_transport(const Tensor &tr) {
  if (tr.rank() != 3)
    throw DimensionError("transport must be [(T+1) x V x C]");
  if (tr.dim(0) < 2)
    throw ValidationError("transport needs at least two time slices");
}
} // namespace detail

/// Spatial and temporal mass-balance terms. `g_spatial`/`g_temporal`, when
/// given, receive the gradients of each term with respect to `tr`.
inline DicTerms dic_loss(const Tensor &tr, Tensor *g_spatial = nullptr,
                         Tensor *g_temporal = nullptr) {
  detail::require_transport(tr);
  const std::size_t T = tr.dim(0) - 1, V = tr.dim(1), C = tr.dim(2);
  const double norm = 1.0 / (static_cast<double>(T) * static_cast<double>(C));
  if (g_spatial)
    *g_spatial = Tensor(tr.shape());
  if (g_temporal)
    *g_temporal = Tensor(tr.shape());

  std::vector<double> prev(C, 0.0), cur(C, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t v = 0; v < V; ++v)
      prev[c] += tr(0, v, c);

  DicTerms out;
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      cur[c] = 0.0;
      for (std::size_t v = 0; v < V; ++v)
        cur[c] += tr(t, v, c);
    }
    for (std::size_t c = 0; c < C; ++c) {
      out.spatial += std::abs(cur[c]) * norm;
      const double dm = cur[c] - prev[c];
      out.temporal += std::abs(dm) * norm;
      if (g_spatial)
        for (std::size_t v = 0; v < V; ++v)
          (*g_spatial)(t, v, c) += sign(cur[c]) * norm;
      if (g_temporal)
        for (std::size_t v = 0; v < V; ++v) {
          (*g_temporal)(t, v, c) += sign(dm) * norm;
          (*g_temporal)(t - 1, v, c) -= sign(dm) * norm;
        }
    }
    prev = cur;
  }
  return out;
}

/// Mean Euclidean norm of consecutive transport differences.
inline double dic_smooth(const Tensor &tr, Tensor *g = nullptr) {
  detail::require_transport(tr);
  const std::size_t T = tr.dim(0) - 1, n = tr.dim(1) * tr.dim(2);
  if (g)
    *g = Tensor(tr.shape());
  double total = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = tr[t * n + i] - tr[(t - 1) * n + i];
      ss += d * d;
    }
    const double norm = std::sqrt(ss);
    total += norm;
    if (g && norm > 0.0)
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (tr[t * n + i] - tr[(t - 1) * n + i]) / (norm * static_cast<double>(T));
        (*g)[t * n + i] += d;
        (*g)[(t - 1) * n + i] -= d;
      }
  }
  return total / static_cast<double>(T);
}

struct LossBreakdown {
  double l1 = 0.0;
  double dic_spatial = 0.0;
  double dic_temporal = 0.0;
  double dic_smooth = 0.0;
  double total = 0.0;
  double lambda = 0.0;

  [[nodiscard]] double dic() const noexcept {
    return dic_spatial + dic_temporal + dic_smooth;
  }

  LossBreakdown &operator+=(const LossBreakdown &o) {
    l1 += o.l1;
    dic_spatial += o.dic_spatial;
    dic_temporal += o.dic_temporal;
    dic_smooth += o.dic_smooth;
    total += o.total;
    return *this;
  }
  LossBreakdown &operator*=(double s) {
    l1 *= s;
    dic_spatial *= s;
    dic_temporal *= s;
    dic_smooth *= s;
    total *= s;
    return *this;
  }
};

struct LossOptions {
  double lambda = 1.0;
  bool smooth = false; ///< include the consecutive-difference norm term
};

struct LossGrads {
  Tensor pred;      ///< dL/dpred
  Tensor transport; ///< dL/dtransport
};

/// total = l1 + lambda * (spatial + temporal [+ smooth]).
inline LossBreakdown total_loss(const Tensor &pred, const Tensor &truth,
                                const Tensor &transport, const LossOptions &opt,
                                LossGrads *grads = nullptr) {
  if (!(opt.lambda >= 0.0))
    throw ValidationError("lambda must be nonnegative");
  LossBreakdown b;
  b.lambda = opt.lambda;
  Tensor gs, gt, gsm;
  b.l1 = l1_loss(pred, truth, grads ? &grads->pred : nullptr);
  const DicTerms d = dic_loss(transport, grads ? &gs : nullptr, grads ? &gt : nullptr);
  b.dic_spatial = d.spatial;
  b.dic_temporal = d.temporal;
  if (opt.smooth)
    b.dic_smooth = dic_smooth(transport, grads ? &gsm : nullptr);
  b.total = b.l1 + opt.lambda * b.dic();
  if (grads) {
    grads->transport = gs;
    grads->transport += gt;
    if (opt.smooth)
      grads->transport += gsm;
    grads->transport *= opt.lambda;
  }
  return b;
}

} // namespace pcdc::loss
