// SPDX-License-Identifier: Apache-2.0
#pragma once

// Recurrent graph forecaster. Each step embeds [X^{t-1}, P^t, Q^t] per
// station and refines the embedding with three residual branches:
//   local interaction  E = MLP(RMSNorm(H))      H += E
//   spatial transport  M = Linear(L H)          H += M
//   temporal memory    Z = GRUcell(H, Z_prev)   H += Z
// then reads out an increment dX = Linear(H) and a transport readout
// Linear(M). Ground truth is fed during the history phase, the model's own
// estimate afterwards.

#include <pcdc/data/series.hpp>
#include <pcdc/data/windows.hpp>
#include <pcdc/graph/spatial_graph.hpp>
#include <pcdc/model/layers.hpp>
#include <pcdc/numerics/param_set.hpp>

#include <random>
#include <string>
#include <vector>

namespace pcdc::model {

struct ModelConfig {
  std::size_t hidden = 32;
  std::size_t mlp_depth = 2;
  double dropout = 0.1;
  double rmsnorm_eps = 1e-6;
  bool use_lid = true;
  bool use_std = true;
  bool use_tad = true;
  bool use_emissions = true;

  void validate() const {
    if (hidden < 1)
      throw ValidationError("model hidden size must be >= 1");
    if (mlp_depth < 1)
      throw ValidationError("mlp depth must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0))
      throw ValidationError("dropout rate must be in [0, 1)");
    if (!(rmsnorm_eps >= 0.0))
      throw ValidationError("rmsnorm eps must be nonnegative");
  }

  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

enum class Mode { Train, Infer };

inline std::string fc_name(std::size_t l, const char *what) {
  return "lid.fc" + std::to_string(l) + "." + what;
}

/// Fresh parameters: linear weights and biases ~ U(-1/sqrt(fan_in), +),
/// RMSNorm gain 1, GRU weights ~ U(-1/sqrt(hidden), +), GRU biases 0.
inline ParamSet init_params(const ModelConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const std::size_t h = cfg.hidden;
  ParamSet p;
  auto uniform = [&](Shape s, std::size_t fan_in) {
    Tensor t(std::move(s));
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-a, a);
    for (double &v : t.values())
      v = u(rng);
    return t;
  };
  auto add_linear = [&](const std::string &name, std::size_t in, std::size_t out) {
    p.add(name + ".weight", uniform({in, out}, in));
    p.add(name + ".bias", uniform({out}, in));
  };
  add_linear("embed", data::kNumInputs, h);
  p.add("lid.norm.gain", Tensor({h}, 1.0));
  for (std::size_t l = 0; l < cfg.mlp_depth; ++l) {
    p.add(fc_name(l, "weight"), uniform({h, h}, h));
    p.add(fc_name(l, "bias"), uniform({h}, h));
  }
  add_linear("std", h, h);
  p.add("gru.w_ih", uniform({h, 3 * h}, h));
  p.add("gru.w_hh", uniform({h, 3 * h}, h));
  p.add("gru.b_ih", Tensor({3 * h}));
  p.add("gru.b_hh", Tensor({3 * h}));
  add_linear("readout", h, data::kNumPollutants);
  add_linear("transport", h, data::kNumPollutants);
  return p;
}

/// Parameter tensors resolved by name once per call.
struct Weights {
  const Tensor &embed_w, &embed_b, &gain;
  std::vector<const Tensor *> fc_w, fc_b;
  const Tensor &std_w, &std_b;
  GruWeights gru;
  const Tensor &read_w, &read_b, &trans_w, &trans_b;

  Weights(const ParamSet &p, const ModelConfig &cfg)
      : embed_w(p.at("embed.weight")), embed_b(p.at("embed.bias")),
        gain(p.at("lid.norm.gain")), std_w(p.at("std.weight")),
        std_b(p.at("std.bias")),
        gru{p.at("gru.w_ih"), p.at("gru.w_hh"), p.at("gru.b_ih"), p.at("gru.b_hh")},
        read_w(p.at("readout.weight")), read_b(p.at("readout.bias")),
        trans_w(p.at("transport.weight")), trans_b(p.at("transport.bias")) {
    for (std::size_t l = 0; l < cfg.mlp_depth; ++l) {
      fc_w.push_back(&p.at(fc_name(l, "weight")));
      fc_b.push_back(&p.at(fc_name(l, "bias")));
    }
    if (embed_w.dim(1) != cfg.hidden)
      throw DimensionError("parameters were built for hidden size " +
                           std::to_string(embed_w.dim(1)) + ", config says " +
                           std::to_string(cfg.hidden));
  }
};

/// Mutable views into a gradient ParamSet, same layout as Weights.
struct WeightGrads {
  Tensor &embed_w, &embed_b, &gain;
  std::vector<Tensor *> fc_w, fc_b;
  Tensor &std_w, &std_b;
  GruGrads gru;
  Tensor &read_w, &read_b, &trans_w, &trans_b;

  WeightGrads(ParamSet &g, const ModelConfig &cfg)
      : embed_w(g.at("embed.weight")), embed_b(g.at("embed.bias")),
        gain(g.at("lid.norm.gain")), std_w(g.at("std.weight")),
        std_b(g.at("std.bias")),
        gru{g.at("gru.w_ih"), g.at("gru.w_hh"), g.at("gru.b_ih"), g.at("gru.b_hh")},
        read_w(g.at("readout.weight")), read_b(g.at("readout.bias")),
        trans_w(g.at("transport.weight")), trans_b(g.at("transport.bias")) {
    for (std::size_t l = 0; l < cfg.mlp_depth; ++l) {
      fc_w.push_back(&g.at(fc_name(l, "weight")));
      fc_b.push_back(&g.at(fc_name(l, "bias")));
    }
  }
};

// --- branch forward passes -------------------------------------------------

struct LidCache {
  RmsCache rms;
  std::vector<Tensor> acts; ///< input of each fc layer (acts[0] = normalized H)
  std::vector<Tensor> pre;  ///< output of each fc layer before the activation
  Tensor mask;              ///< dropout multipliers, empty when inactive
};

/// E = dropout(fc_{D-1}(silu(... silu(fc_0(RMSNorm(H)))))).
inline Tensor lid_forward(const Tensor &h, const Weights &w, double eps,
                          const Tensor *dropout_mask = nullptr,
                          LidCache *cache = nullptr) {
  LidCache c;
  Tensor a = rmsnorm(h, w.gain, eps, &c.rms);
  const std::size_t depth = w.fc_w.size();
  for (std::size_t l = 0; l < depth; ++l) {
    Tensor pre = linear(a, *w.fc_w[l], *w.fc_b[l]);
    c.acts.push_back(std::move(a));
    if (l + 1 < depth) {
      a = Tensor(pre.shape());
      for (std::size_t i = 0; i < pre.size(); ++i)
        a[i] = silu(pre[i]);
    } else {
      a = pre;
    }
    c.pre.push_back(std::move(pre));
  }
  if (dropout_mask && !dropout_mask->empty()) {
    for (std::size_t i = 0; i < a.size(); ++i)
      a[i] *= (*dropout_mask)[i];
    c.mask = *dropout_mask;
  }
  if (cache)
    *cache = std::move(c);
  return a;
}

inline Tensor lid_backward(const Tensor &h, const Weights &w, const LidCache &c,
                           Tensor ge, WeightGrads &g) {
  if (!c.mask.empty())
    for (std::size_t i = 0; i < ge.size(); ++i)
      ge[i] *= c.mask[i];
  const std::size_t depth = w.fc_w.size();
  for (std::size_t l = depth; l-- > 0;) {
    if (l + 1 < depth)
      for (std::size_t i = 0; i < ge.size(); ++i)
        ge[i] *= silu_grad(c.pre[l][i]);
    ge = linear_backward(c.acts[l], *w.fc_w[l], ge, *g.fc_w[l], *g.fc_b[l]);
  }
  return rmsnorm_backward(h, w.gain, c.rms, ge, g.gain);
}

/// M = Linear(L H).
inline Tensor std_forward(const Tensor &h, const graph::SpatialGraph &g,
                          const Weights &w, Tensor *lh_out = nullptr) {
  Tensor lh = graph::apply_laplacian(g, h);
  Tensor m = linear(lh, w.std_w, w.std_b);
  if (lh_out)
    *lh_out = std::move(lh);
  return m;
}

// --- rollout ----------------------------------------------------------------

struct StepTrace {
  int t = 0;
  Tensor input; ///< [V x 16] embedding input
  Tensor h_embed;
  LidCache lid;
  Tensor e, h_lid;
  Tensor lh, m, h_std;
  GruCache gru;
  Tensor z_prev, z, h_out;
  Tensor dx;        ///< increment readout
  Tensor xhat;      ///< estimate after this step
  Tensor transport; ///< transport readout, t >= 0 only
};

struct RolloutTrace {
  int first_t = 0; ///< -T' + 2
  std::size_t history = 0, horizon = 0;
  Tensor z_init;   ///< zero recurrent state at -T' + 1
  Tensor x_seed;   ///< X^{-T'+1}
  std::vector<StepTrace> steps;

  [[nodiscard]] const StepTrace &at(int t) const {
    return steps.at(static_cast<std::size_t>(t - first_t));
  }

  /// Estimates for t = 1..T as [T x V x 2].
  [[nodiscard]] Tensor predictions() const {
    const std::size_t V = x_seed.dim(0);
    Tensor out({horizon, V, data::kNumPollutants});
    for (std::size_t t = 1; t <= horizon; ++t) {
      const auto &x = at(static_cast<int>(t)).xhat;
      std::copy(x.data(), x.data() + x.size(), out.data() + (t - 1) * x.size());
    }
    return out;
  }

  /// Transport readouts for t = 0..T as [(T+1) x V x 2].
  [[nodiscard]] Tensor transport() const {
    const std::size_t V = x_seed.dim(0);
    Tensor out({horizon + 1, V, data::kNumPollutants});
    for (std::size_t t = 0; t <= horizon; ++t) {
      const auto &x = at(static_cast<int>(t)).transport;
      std::copy(x.data(), x.data() + x.size(), out.data() + t * x.size());
    }
    return out;
  }
};

namespace detail {

inline void copy_rows(const Tensor &src3, std::size_t step, Tensor &dst,
                      std::size_t col_offset, bool zero = false) {
  const std::size_t V = src3.dim(1), C = src3.dim(2);
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t c = 0; c < C; ++c)
      dst(v, col_offset + c) = zero ? 0.0 : src3(step, v, c);
}

inline Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate,
                           std::mt19937_64 &rng) {
  Tensor m({rows, cols});
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (double &v : m.values())
    v = keep(rng) ? scale : 0.0;
  return m;
}

inline void check_finite(const Tensor &t, int step, const char *what) {
  if (!t.all_finite())
    throw NumericError(std::string("non-finite ") + what + " at step t=" +
                       std::to_string(step));
}

} // namespace detail

/// Runs the recurrence over t = -T'+2 .. T. Estimates in the history phase
/// are the observations themselves (X-hat^t = X^t for t <= 0); from t = 1
/// on X-hat^t = X-hat^{t-1} + dX^t starting at the last observation X^0.
/// Dropout is active only in Train mode, with masks drawn from
/// `dropout_seed`.
inline RolloutTrace rollout(const data::WindowedSample &s, const graph::SpatialGraph &g,
                            const ParamSet &params, const ModelConfig &cfg, Mode mode,
                            std::uint64_t dropout_seed = 0) {
  const Weights w(params, cfg);
  const std::size_t Tp = s.history(), T = s.horizon(), V = s.num_stations();
  if (Tp < 2)
    throw ValidationError("rollout needs at least two history steps");
  if (V != g.num_nodes())
    throw DimensionError("sample has " + std::to_string(V) + " stations, graph has " +
                         std::to_string(g.num_nodes()));
  if (s.p_all.dim(0) != Tp + T || s.q_all.dim(0) != Tp + T)
    throw DimensionError("driver tensors must cover history + horizon");

  const bool dropout = mode == Mode::Train && cfg.dropout > 0.0 && cfg.use_lid;
  std::mt19937_64 rng(dropout_seed);

  RolloutTrace tr;
  tr.first_t = 2 - static_cast<int>(Tp);
  tr.history = Tp;
  tr.horizon = T;
  tr.z_init = Tensor({V, cfg.hidden});
  tr.x_seed = s.x_hist.slice(0);
  tr.steps.reserve(Tp + T - 1);

  const Tensor *z_prev = &tr.z_init;
  Tensor xhat_prev = s.x_hist.slice(0); // replaced before first use at t = 1

  for (int t = tr.first_t; t <= static_cast<int>(T); ++t) {
    StepTrace st;
    st.t = t;
    const auto drv = static_cast<std::size_t>(t + static_cast<int>(Tp) - 1);

    st.input = Tensor({V, data::kNumInputs});
    if (t < 1)
      detail::copy_rows(s.x_hist, drv - 1, st.input, 0);
    else
      for (std::size_t v = 0; v < V; ++v)
        for (std::size_t c = 0; c < data::kNumPollutants; ++c)
          st.input(v, c) = xhat_prev(v, c);
    detail::copy_rows(s.p_all, drv, st.input, data::kNumPollutants);
    detail::copy_rows(s.q_all, drv, st.input, data::kNumPollutants + data::kNumMeteo,
                      !cfg.use_emissions);

    st.h_embed = linear(st.input, w.embed_w, w.embed_b);

    if (cfg.use_lid) {
      Tensor mask;
      if (dropout)
        mask = detail::dropout_mask(V, cfg.hidden, cfg.dropout, rng);
      st.e = lid_forward(st.h_embed, w, cfg.rmsnorm_eps, &mask, &st.lid);
      st.h_lid = st.h_embed + st.e;
    } else {
      st.h_lid = st.h_embed;
    }

    if (cfg.use_std) {
      st.m = std_forward(st.h_lid, g, w, &st.lh);
      st.h_std = st.h_lid + st.m;
    } else {
      st.h_std = st.h_lid;
    }

    st.z_prev = *z_prev;
    if (cfg.use_tad) {
      st.z = gru_cell(st.h_std, st.z_prev, w.gru, &st.gru);
      st.h_out = st.h_std + st.z;
    } else {
      st.z = Tensor({V, cfg.hidden});
      st.h_out = st.h_std;
    }
    detail::check_finite(st.h_out, t, "hidden state");

    st.dx = linear(st.h_out, w.read_w, w.read_b);
    if (t < 1)
      st.xhat = s.x_hist.slice(drv);
    else
      st.xhat = xhat_prev + st.dx;
    detail::check_finite(st.xhat, t, "estimate");

    if (t >= 0) {
      st.transport = cfg.use_std ? linear(st.m, w.trans_w, w.trans_b)
                                 : Tensor({V, data::kNumPollutants});
    }
    xhat_prev = st.xhat;
    tr.steps.push_back(std::move(st));
    z_prev = &tr.steps.back().z;
  }
  return tr;
}

/// Backpropagates through a trace. `g_pred` is dL/dX-hat for t = 1..T
/// ([T x V x 2]); `g_transport` is dL/d(transport) for t = 0..T
/// ([(T+1) x V x 2], may be empty). Returns gradients for every parameter.
inline ParamSet backward(const RolloutTrace &tr, const graph::SpatialGraph &g,
                         const ParamSet &params, const ModelConfig &cfg,
                         const Tensor &g_pred, const Tensor &g_transport) {
  const Weights w(params, cfg);
  ParamSet grads = params.zeros_like();
  WeightGrads gw(grads, cfg);
  const std::size_t V = tr.x_seed.dim(0), H = cfg.hidden;
  constexpr std::size_t C = data::kNumPollutants;

  Tensor g_xhat({V, C}); // dL/dX-hat^t carried from later steps
  Tensor g_z({V, H});    // dL/dZ^t carried from later steps
  Tensor g_trans_t({V, C});

  for (std::size_t k = tr.steps.size(); k-- > 0;) {
    const StepTrace &st = tr.steps[k];
    const int t = st.t;

    Tensor g_h_out({V, H});
    if (t >= 1) {
      const auto row = static_cast<std::size_t>(t - 1) * V * C;
      for (std::size_t i = 0; i < V * C; ++i)
        g_xhat[i] += g_pred[row + i];
      // X-hat^t = X-hat^{t-1} + dx^t: the same gradient reaches dx and X-hat^{t-1}.
      g_h_out = linear_backward(st.h_out, w.read_w, g_xhat, gw.read_w, gw.read_b);
    }

    Tensor g_h_std = g_h_out;
    if (cfg.use_tad) {
      Tensor g_zt = g_h_out + g_z;
      auto [gx, gh] = gru_cell_backward(st.h_std, st.z_prev, w.gru, st.gru, g_zt, gw.gru);
      g_h_std += gx;
      g_z = std::move(gh);
    }

    Tensor g_h_lid = g_h_std;
    if (cfg.use_std) {
      Tensor g_m = g_h_std;
      if (t >= 0 && !g_transport.empty()) {
        const auto row = static_cast<std::size_t>(t) * V * C;
        for (std::size_t i = 0; i < V * C; ++i)
          g_trans_t[i] = g_transport[row + i];
        g_m += linear_backward(st.m, w.trans_w, g_trans_t, gw.trans_w, gw.trans_b);
      }
      const Tensor g_lh = linear_backward(st.lh, w.std_w, g_m, gw.std_w, gw.std_b);
      // L is symmetric, so d(LH)/dH backpropagates through L itself.
      g_h_lid += graph::apply_laplacian(g, g_lh);
    }

    Tensor g_h_embed = g_h_lid;
    if (cfg.use_lid)
      g_h_embed += lid_backward(st.h_embed, w, st.lid, g_h_lid, gw);

    const Tensor g_in = linear_backward(st.input, w.embed_w, g_h_embed, gw.embed_w,
                                        gw.embed_b, t >= 1);
    if (t >= 1) {
      for (std::size_t v = 0; v < V; ++v)
        for (std::size_t c = 0; c < C; ++c)
          g_xhat(v, c) += g_in(v, c);
    } else {
      g_xhat.fill(0.0);
    }
  }
  return grads;
}

} // namespace pcdc::model
