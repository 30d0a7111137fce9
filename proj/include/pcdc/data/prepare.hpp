// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/data/normalize.hpp>
#include <pcdc/data/windows.hpp>

#include <array>
#include <vector>

namespace pcdc::data {

struct DatasetConfig {
  std::size_t history = 24;
  std::size_t horizon = 72;
  std::size_t stride = 1;      ///< between training window origins
  std::size_t eval_stride = 1; ///< between validation/test window origins
  double train_frac = 0.6;
  double val_frac = 0.2;

  void validate() const {
    if (history < 2)
      throw ValidationError("dataset.history must be >= 2");
    if (horizon < 1)
      throw ValidationError("dataset.horizon must be >= 1");
    if (stride < 1 || eval_stride < 1)
      throw ValidationError("dataset strides must be >= 1");
    (void)split_ranges(100, train_frac, val_frac);
  }

  friend bool operator==(const DatasetConfig &, const DatasetConfig &) = default;
};

/// Normalized bundle and the chronological train/val/test windows cut from it.
struct PreparedData {
  SeriesBundle raw;
  NormStats stats;
  SeriesBundle normalized;
  std::array<StepRange, 3> ranges;
  std::vector<WindowedSample> train, val, test;
};

/// Fits normalization on the training range, or reuses `fixed` when given.
inline PreparedData prepare(SeriesBundle raw, const DatasetConfig &cfg,
                            const NormStats *fixed = nullptr) {
  cfg.validate();
  PreparedData d;
  d.ranges = split_ranges(raw.steps(), cfg.train_frac, cfg.val_frac);
  d.stats = fixed ? *fixed : fit_normalize(raw, d.ranges[0]);
  d.normalized = normalize(raw, d.stats);
  d.raw = std::move(raw);
  d.train = make_windows(d.normalized, cfg.history, cfg.horizon, cfg.stride, d.ranges[0]);
  d.val = make_windows(d.normalized, cfg.history, cfg.horizon, cfg.eval_stride, d.ranges[1]);
  d.test = make_windows(d.normalized, cfg.history, cfg.horizon, cfg.eval_stride, d.ranges[2]);
  return d;
}

} // namespace pcdc::data
