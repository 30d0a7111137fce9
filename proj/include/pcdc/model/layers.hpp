// SPDX-License-Identifier: Apache-2.0
#pragma once

// Row-batched layer primitives with explicit backward passes. Every
// `*_backward` accumulates (+=) into the gradient tensors it is handed.

#include <pcdc/numerics/tensor.hpp>

#include <cmath>

namespace pcdc::model {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// --- linear: y = x W + b, W is [in x out] ---------------------------------

inline Tensor linear(const Tensor &x, const Tensor &w, const Tensor &b) {
  if (x.dim(1) != w.dim(0) || b.size() != w.dim(1))
    throw DimensionError("linear: input " + shape_str(x.shape()) + ", weight " +
                         shape_str(w.shape()) + ", bias " + shape_str(b.shape()));
  const std::size_t n = x.dim(0), out = w.dim(1);
  Tensor y({n, out});
  for (std::size_t i = 0; i < n; ++i)
    std::copy(b.data(), b.data() + out, y.data() + i * out);
  kernels::gemm_acc(x.data(), w.data(), y.data(), n, w.dim(0), out);
  return y;
}

/// gw += x^T gy, gb += colsum(gy); returns gy W^T when `want_gx`.
inline Tensor linear_backward(const Tensor &x, const Tensor &w, const Tensor &gy,
                              Tensor &gw, Tensor &gb, bool want_gx = true) {
  const std::size_t n = x.dim(0), in = w.dim(0), out = w.dim(1);
  kernels::gemm_tn_acc(x.data(), gy.data(), gw.data(), n, in, out);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < out; ++j)
      gb[j] += gy(i, j);
  if (!want_gx)
    return {};
  Tensor gx({n, in});
  kernels::gemm_nt_acc(gy.data(), w.data(), gx.data(), n, out, in);
  return gx;
}

// --- RMSNorm: y = x / sqrt(mean(x^2) + eps) * gain (per row) --------------

struct RmsCache {
  std::vector<double> inv_rms; ///< per row
};

inline Tensor rmsnorm(const Tensor &x, const Tensor &gain, double eps,
                      RmsCache *cache = nullptr) {
  require_matrix(x, "rmsnorm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (gain.size() != d)
    throw DimensionError("rmsnorm gain length does not match feature width");
  Tensor y({n, d});
  if (cache)
    cache->inv_rms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ms = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      ms += x(i, j) * x(i, j);
    ms /= static_cast<double>(d);
    const double r = 1.0 / std::sqrt(ms + eps);
    if (cache)
      cache->inv_rms[i] = r;
    for (std::size_t j = 0; j < d; ++j)
      y(i, j) = x(i, j) * r * gain[j];
  }
  return y;
}

inline Tensor rmsnorm_backward(const Tensor &x, const Tensor &gain,
                               const RmsCache &cache, const Tensor &gy,
                               Tensor &ggain) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  Tensor gx({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const double r = cache.inv_rms[i];
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += gy(i, j) * gain[j] * x(i, j);
      ggain[j] += gy(i, j) * x(i, j) * r;
    }
    const double k = r * r * r * dot / static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j)
      gx(i, j) = r * gain[j] * gy(i, j) - k * x(i, j);
  }
  return gx;
}

// --- GRU cell (gate order r, z, n in the 3h axis) --------------------------
//   r = sig(x Wir + bir + h Whr + bhr)
//   z = sig(x Wiz + biz + h Whz + bhz)
//   n = tanh(x Win + bin + r * (h Whn + bhn))
//   h' = (1 - z) * n + z * h

struct GruWeights {
  const Tensor &w_ih; ///< [in x 3h]
  const Tensor &w_hh; ///< [h x 3h]
  const Tensor &b_ih; ///< [3h]
  const Tensor &b_hh; ///< [3h]
};

struct GruGrads {
  Tensor &w_ih;
  Tensor &w_hh;
  Tensor &b_ih;
  Tensor &b_hh;
};

struct GruCache {
  Tensor r, z, n; ///< [rows x h]
  Tensor hn;      ///< h Whn + bhn, [rows x h]
};

inline Tensor gru_cell(const Tensor &x, const Tensor &h, const GruWeights &w,
                       GruCache *cache = nullptr) {
  const std::size_t rows = x.dim(0), hid = h.dim(1);
  if (h.dim(0) != rows || w.w_ih.dim(0) != x.dim(1) || w.w_hh.dim(0) != hid ||
      w.w_ih.dim(1) != 3 * hid || w.w_hh.dim(1) != 3 * hid)
    throw DimensionError("gru_cell: inconsistent shapes");
  const Tensor gi = linear(x, w.w_ih, w.b_ih);
  const Tensor gh = linear(h, w.w_hh, w.b_hh);
  Tensor out({rows, hid});
  GruCache c{Tensor({rows, hid}), Tensor({rows, hid}), Tensor({rows, hid}),
             Tensor({rows, hid})};
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < hid; ++j) {
      const double r = sigmoid(gi(i, j) + gh(i, j));
      const double z = sigmoid(gi(i, hid + j) + gh(i, hid + j));
      const double hn = gh(i, 2 * hid + j);
      const double n = std::tanh(gi(i, 2 * hid + j) + r * hn);
      out(i, j) = (1.0 - z) * n + z * h(i, j);
      c.r(i, j) = r;
      c.z(i, j) = z;
      c.n(i, j) = n;
      c.hn(i, j) = hn;
    }
  if (cache)
    *cache = std::move(c);
  return out;
}

/// Returns {gx, gh}.
inline std::pair<Tensor, Tensor> gru_cell_backward(const Tensor &x, const Tensor &h,
                                                   const GruWeights &w,
                                                   const GruCache &c,
                                                   const Tensor &gout, GruGrads g) {
  const std::size_t rows = x.dim(0), hid = h.dim(1);
  Tensor dgi({rows, 3 * hid}), dgh({rows, 3 * hid});
  Tensor gh({rows, hid});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < hid; ++j) {
      const double go = gout(i, j);
      const double r = c.r(i, j), z = c.z(i, j), n = c.n(i, j);
      gh(i, j) = go * z;
      const double dn = go * (1.0 - z) * (1.0 - n * n);
      const double dz = go * (h(i, j) - n) * z * (1.0 - z);
      const double dr = dn * c.hn(i, j) * r * (1.0 - r);
      dgi(i, j) = dr;
      dgi(i, hid + j) = dz;
      dgi(i, 2 * hid + j) = dn;
      dgh(i, j) = dr;
      dgh(i, hid + j) = dz;
      dgh(i, 2 * hid + j) = dn * r;
    }
  Tensor gx = linear_backward(x, w.w_ih, dgi, g.w_ih, g.b_ih);
  gh += linear_backward(h, w.w_hh, dgh, g.w_hh, g.b_hh);
  return {std::move(gx), std::move(gh)};
}

} // namespace pcdc::model
