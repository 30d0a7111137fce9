// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/data/series.hpp>
#include <pcdc/error.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace pcdc::data {

/// Half-open step range [begin, end).
struct StepRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  [[nodiscard]] std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
  friend bool operator==(const StepRange &, const StepRange &) = default;
};

/// Per-channel z-score statistics.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
  friend bool operator==(const ChannelStats &, const ChannelStats &) = default;
};

struct NormStats {
  ChannelStats x, p, q;
  std::vector<std::string> warnings;

  friend bool operator==(const NormStats &a, const NormStats &b) {
    return a.x == b.x && a.p == b.p && a.q == b.q;
  }
};

namespace detail {

inline ChannelStats channel_stats(const Tensor &t, StepRange r, std::string_view kind,
                                  std::vector<std::string> &warnings) {
  const std::size_t V = t.dim(1), C = t.dim(2);
  ChannelStats s{std::vector<double>(C, 0.0), std::vector<double>(C, 0.0)};
  const double n = static_cast<double>(r.size() * V);
  for (std::size_t c = 0; c < C; ++c) {
    double sum = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i)
      for (std::size_t v = 0; v < V; ++v)
        sum += t(i, v, c);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i)
      for (std::size_t v = 0; v < V; ++v) {
        const double d = t(i, v, c) - mean;
        ss += d * d;
      }
    double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) {
      warnings.push_back(std::string(kind) + " channel " + std::to_string(c) +
                         " has zero variance on the training range; using std=1");
      sd = 1.0;
    }
    s.mean[c] = mean;
    s.std[c] = sd;
  }
  return s;
}

inline void apply(Tensor &t, const ChannelStats &s, bool inverse) {
  const std::size_t C = t.dim(t.rank() - 1);
  if (s.mean.size() != C)
    throw DimensionError("normalization stats have " + std::to_string(s.mean.size()) +
                         " channels, tensor has " + std::to_string(C));
  auto &v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t c = i % C;
    v[i] = inverse ? v[i] * s.std[c] + s.mean[c] : (v[i] - s.mean[c]) / s.std[c];
  }
}

} // namespace detail

/// Population mean/std per channel over `train` steps only.
inline NormStats fit_normalize(const SeriesBundle &b, StepRange train) {
  if (train.size() == 0 || train.end > b.steps())
    throw ValidationError("normalization range is empty or out of bounds");
  NormStats s;
  s.x = detail::channel_stats(b.X, train, "X", s.warnings);
  s.p = detail::channel_stats(b.P, train, "P", s.warnings);
  s.q = detail::channel_stats(b.Q, train, "Q", s.warnings);
  return s;
}

inline SeriesBundle normalize(SeriesBundle b, const NormStats &s) {
  detail::apply(b.X, s.x, false);
  detail::apply(b.P, s.p, false);
  detail::apply(b.Q, s.q, false);
  return b;
}

inline SeriesBundle denormalize(SeriesBundle b, const NormStats &s) {
  detail::apply(b.X, s.x, true);
  detail::apply(b.P, s.p, true);
  detail::apply(b.Q, s.q, true);
  return b;
}

/// Maps pollutant values (any rank, trailing axis = 2 channels) back to raw units.
inline Tensor denormalize_x(Tensor x, const NormStats &s) {
  detail::apply(x, s.x, true);
  return x;
}

inline Tensor normalize_x(Tensor x, const NormStats &s) {
  detail::apply(x, s.x, false);
  return x;
}

} // namespace pcdc::data
