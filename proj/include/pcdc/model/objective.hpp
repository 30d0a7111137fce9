// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/loss/losses.hpp>
#include <pcdc/model/pcdcnet.hpp>
#include <pcdc/numerics/grad.hpp>

namespace pcdc::model {

struct SampleResult {
  loss::LossBreakdown loss;
  ParamSet grad; ///< empty unless requested
};

/// Forward + loss on one sample; with `want_grad` also the full parameter
/// gradient of `loss.total`.
inline SampleResult sample_loss(const data::WindowedSample &s,
                                const graph::SpatialGraph &g, const ParamSet &params,
                                const ModelConfig &cfg, const loss::LossOptions &opt,
                                Mode mode, std::uint64_t dropout_seed, bool want_grad) {
  const RolloutTrace tr = rollout(s, g, params, cfg, mode, dropout_seed);
  const Tensor pred = tr.predictions();
  const Tensor transport = tr.transport();
  SampleResult r;
  if (!want_grad) {
    r.loss = loss::total_loss(pred, s.x_future, transport, opt);
    return r;
  }
  loss::LossGrads lg;
  r.loss = loss::total_loss(pred, s.x_future, transport, opt, &lg);
  r.grad = backward(tr, g, params, cfg, lg.pred, lg.transport);
  return r;
}

/// Sample loss as a DifferentiableLoss over the parameters, with the
/// dropout masks pinned by `dropout_seed`.
struct SampleObjective {
  const data::WindowedSample &sample;
  const graph::SpatialGraph &graph;
  ModelConfig cfg;
  loss::LossOptions opt;
  Mode mode = Mode::Train;
  std::uint64_t dropout_seed = 0;

  ValueAndGrad operator()(const ParamSet &p) const {
    auto r = sample_loss(sample, graph, p, cfg, opt, mode, dropout_seed, true);
    return {r.loss.total, std::move(r.grad)};
  }

  [[nodiscard]] double value(const ParamSet &p) const {
    return sample_loss(sample, graph, p, cfg, opt, mode, dropout_seed, false).loss.total;
  }
};

} // namespace pcdc::model
