// SPDX-License-Identifier: Apache-2.0
#pragma once

// Mini-batch Adam training with plateau learning-rate decay, early stopping
// on denormalized validation MAE, and global-norm gradient clipping.

#include <pcdc/data/normalize.hpp>
#include <pcdc/data/windows.hpp>
#include <pcdc/io/csv.hpp>
#include <pcdc/model/objective.hpp>
#include <pcdc/numerics/adam.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <thread>
#include <vector>

namespace pcdc::train {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  double lambda = 1.0;
  bool dic_smooth = false;
  std::size_t early_stop_patience = 10;
  std::size_t plateau_patience = 5;
  double plateau_factor = 0.5;
  double min_lr = 1e-6;
  double clip_norm = 5.0; ///< <= 0 disables clipping
  std::uint64_t seed = 0;
  std::size_t threads = 1; ///< sample-level workers inside a batch

  void validate() const {
    if (!(lr > 0.0))
      throw ValidationError("train.lr must be positive");
    if (batch_size < 1)
      throw ValidationError("train.batch_size must be >= 1");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
      throw ValidationError("train.plateau_factor must be in (0, 1)");
    if (early_stop_patience < 1 || plateau_patience < 1)
      throw ValidationError("train patience values must be >= 1");
    if (!(min_lr > 0.0) || min_lr > lr)
      throw ValidationError("train.min_lr must be in (0, lr]");
    if (!(lambda >= 0.0))
      throw ValidationError("train.lambda must be nonnegative");
    if (threads < 1)
      throw ValidationError("train.threads must be >= 1");
  }

  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

struct EpochRecord {
  std::size_t epoch = 0; ///< 1-based
  loss::LossBreakdown train; ///< mean over the epoch's training samples
  loss::LossBreakdown val;   ///< mean over validation samples, inference mode
  double val_mae = 0.0;      ///< denormalized
  double lr = 0.0;           ///< rate used during this epoch
  double grad_norm = 0.0;    ///< mean pre-clip batch gradient norm
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0; ///< 0 when no epoch ran
  double best_val_mae = std::numeric_limits<double>::infinity();
  bool early_stopped = false;
  double wall_seconds = 0.0;

  [[nodiscard]] std::vector<double> lr_trajectory() const {
    std::vector<double> out;
    for (const auto &e : epochs)
      out.push_back(e.lr);
    return out;
  }
};

struct TrainResult {
  ParamSet params;
  TrainReport report;
};

/// Stateless 64-bit mixer used to derive per-sample dropout seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mean absolute error of predictions against truth after mapping both back
/// to raw units.
inline double denormalized_mae(const Tensor &pred, const Tensor &truth,
                               const data::NormStats &stats) {
  pred.require_same_shape(truth, "denormalized_mae");
  const std::size_t C = pred.dim(pred.rank() - 1);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    s += std::abs(pred[i] - truth[i]) * stats.x.std[i % C];
  return s / static_cast<double>(pred.size());
}

struct SplitEval {
  loss::LossBreakdown loss;
  double mae = 0.0;
};

/// Inference-mode loss and denormalized MAE averaged over `samples`.
inline SplitEval evaluate_split(const std::vector<data::WindowedSample> &samples,
                                const graph::SpatialGraph &g, const ParamSet &params,
                                const model::ModelConfig &mcfg,
                                const loss::LossOptions &opt,
                                const data::NormStats &stats) {
  SplitEval out;
  for (const auto &s : samples) {
    const auto tr = model::rollout(s, g, params, mcfg, model::Mode::Infer);
    const Tensor pred = tr.predictions();
    out.loss += loss::total_loss(pred, s.x_future, tr.transport(), opt);
    out.mae += denormalized_mae(pred, s.x_future, stats);
  }
  const double n = static_cast<double>(samples.size());
  out.loss *= 1.0 / n;
  out.loss.lambda = opt.lambda;
  out.mae /= n;
  return out;
}

namespace detail {

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)> &fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, n);
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers)
            fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace detail

/// Called after every epoch; returning false stops training.
using EpochCallback = std::function<bool(const EpochRecord &)>;

/// Trains from `init` and returns the parameters of the best validation
/// epoch. Batches average per-sample gradients in sample order, so results
/// do not depend on the worker count.
inline TrainResult train(const std::vector<data::WindowedSample> &train_set,
                         const std::vector<data::WindowedSample> &val_set,
                         const graph::SpatialGraph &g, const TrainConfig &cfg,
                         const model::ModelConfig &mcfg, const data::NormStats &stats,
                         ParamSet init, const EpochCallback &on_epoch = {}) {
  cfg.validate();
  mcfg.validate();
  if (train_set.empty())
    throw ValidationError("training split has no windows");
  if (val_set.empty())
    throw ValidationError("validation split has no windows");

  const auto t_start = std::chrono::steady_clock::now();
  const loss::LossOptions opt{cfg.lambda, cfg.dic_smooth};
  TrainResult res{std::move(init), {}};
  ParamSet best = res.params;
  AdamState adam(res.params, AdamHyper{cfg.lr});
  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0x5348));

  std::vector<std::size_t> order(train_set.size());
  std::size_t since_best = 0, since_decay = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i)
      order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng() % i;
      std::swap(order[i - 1], order[j]);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = adam.hyper.lr;
    std::size_t batches = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t bn = std::min(cfg.batch_size, order.size() - b0);
      std::vector<model::SampleResult> results(bn);
      try {
        detail::parallel_for(bn, cfg.threads, [&](std::size_t k) {
          const std::size_t pos = b0 + k;
          const std::uint64_t dseed =
              mix_seed(mix_seed(cfg.seed, epoch), static_cast<std::uint64_t>(pos));
          results[k] = model::sample_loss(train_set[order[pos]], g, res.params, mcfg, opt,
                                          model::Mode::Train, dseed, true);
        });
      } catch (const NumericError &e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches + 1) + ": " + e.what());
      }
      ParamSet grad = res.params.zeros_like();
      for (auto &r : results) {
        grad += r.grad;
        rec.train += r.loss;
      }
      grad *= 1.0 / static_cast<double>(bn);
      const double norm = grad.global_norm();
      if (!std::isfinite(norm))
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches + 1) + ": non-finite gradient");
      rec.grad_norm += norm;
      if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm)
        grad *= cfg.clip_norm / norm;
      adam_step(res.params, grad, adam);
      ++batches;
    }
    rec.train *= 1.0 / static_cast<double>(train_set.size());
    rec.train.lambda = cfg.lambda;
    rec.grad_norm /= static_cast<double>(batches);
    if (!std::isfinite(rec.train.total))
      throw NumericError("epoch " + std::to_string(epoch) + ": non-finite training loss");

    const SplitEval val = evaluate_split(val_set, g, res.params, mcfg, opt, stats);
    rec.val = val.loss;
    rec.val_mae = val.mae;
    res.report.epochs.push_back(rec);

    if (val.mae < res.report.best_val_mae) {
      res.report.best_val_mae = val.mae;
      res.report.best_epoch = epoch;
      best = res.params;
      since_best = 0;
      since_decay = 0;
    } else {
      ++since_best;
      ++since_decay;
    }
    if (on_epoch && !on_epoch(rec))
      break;
    if (since_best >= cfg.early_stop_patience) {
      res.report.early_stopped = true;
      break;
    }
    if (since_decay >= cfg.plateau_patience) {
      adam.hyper.lr = std::max(cfg.min_lr, adam.hyper.lr * cfg.plateau_factor);
      since_decay = 0;
    }
  }

  if (res.report.best_epoch > 0)
    res.params = std::move(best);
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

inline TrainResult train(const std::vector<data::WindowedSample> &train_set,
                         const std::vector<data::WindowedSample> &val_set,
                         const graph::SpatialGraph &g, const TrainConfig &cfg,
                         const model::ModelConfig &mcfg, const data::NormStats &stats) {
  return train(train_set, val_set, g, cfg, mcfg, stats, model::init_params(mcfg, cfg.seed));
}

/// Per-epoch rows `epoch,split,l1,dic_spatial,dic_temporal,total`.
inline std::string metrics_csv(const TrainReport &r) {
  std::string out = "epoch,split,l1,dic_spatial,dic_temporal,total\n";
  auto row = [&](std::size_t e, const char *split, const loss::LossBreakdown &b) {
    out += std::to_string(e) + ',' + split + ',' + io::format_double(b.l1) + ',' +
           io::format_double(b.dic_spatial) + ',' + io::format_double(b.dic_temporal) +
           ',' + io::format_double(b.total) + '\n';
  };
  for (const auto &e : r.epochs) {
    row(e.epoch, "train", e.train);
    row(e.epoch, "val", e.val);
  }
  return out;
}

} // namespace pcdc::train
