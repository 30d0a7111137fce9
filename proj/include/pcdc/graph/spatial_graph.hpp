// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/error.hpp>
#include <pcdc/numerics/tensor.hpp>

#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace pcdc::graph {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDefaultThresholdKm = 200.0;

struct Station {
  std::string id;
  double lat = 0.0; ///< degrees, [-90, 90]
  double lon = 0.0; ///< degrees, [-180, 180]
};

inline void validate(const Station &s) {
  if (!(s.lat >= -90.0 && s.lat <= 90.0) || !(s.lon >= -180.0 && s.lon <= 180.0))
    throw ValidationError("station '" + s.id + "' has out-of-range coordinates (" +
                          std::to_string(s.lat) + ", " + std::to_string(s.lon) +
                          ")");
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Great-circle distance on a sphere of radius 6371 km.
inline double haversine_km(const Station &a, const Station &b) {
  validate(a);
  validate(b);
  const double p1 = deg2rad(a.lat), p2 = deg2rad(b.lat);
  const double dp = p2 - p1;
  const double dl = deg2rad(b.lon - a.lon);
  const double s = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

/// Unit (east, north) vector of the initial bearing from `a` towards `b`.
inline std::pair<double, double> bearing_unit(const Station &a, const Station &b) {
  const double p1 = deg2rad(a.lat), p2 = deg2rad(b.lat);
  const double dl = deg2rad(b.lon - a.lon);
  const double east = std::sin(dl) * std::cos(p2);
  const double north =
      std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  const double n = std::hypot(east, north);
  if (n == 0.0)
    return {0.0, 0.0};
  return {east / n, north / n};
}

/// Station graph with 0/1 adjacency and the symmetric normalized Laplacian
/// L = I - D^{-1/2} A D^{-1/2} (D^{-1/2} taken as 0 on isolated nodes, so
/// their rows are identity rows). Immutable after construction.
class SpatialGraph {
public:
  SpatialGraph() = default;

  SpatialGraph(std::vector<Station> stations, double threshold_km)
      : stations_(std::move(stations)), threshold_km_(threshold_km) {
    if (stations_.empty())
      throw ValidationError("graph needs at least one station");
    if (!(threshold_km > 0.0))
      throw ValidationError("distance threshold must be positive");
    std::set<std::string> seen;
    for (const auto &s : stations_) {
      validate(s);
      if (!seen.insert(s.id).second)
        throw ValidationError("duplicate station id: " + s.id);
    }

    const std::size_t n = stations_.size();
    adjacency_ = Tensor({n, n});
    degree_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = haversine_km(stations_[i], stations_[j]);
        if (d > 0.0 && d <= threshold_km) {
          adjacency_(i, j) = adjacency_(j, i) = 1.0;
          edges_.emplace_back(i, j);
        }
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        degree_[i] += adjacency_(i, j);

    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (degree_[i] > 0.0)
        inv_sqrt[i] = 1.0 / std::sqrt(degree_[i]);
    laplacian_ = Tensor::identity(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (adjacency_(i, j) != 0.0)
          laplacian_(i, j) -= inv_sqrt[i] * adjacency_(i, j) * inv_sqrt[j];
  }

  [[nodiscard]] std::size_t num_nodes() const noexcept { return stations_.size(); }
  [[nodiscard]] std::size_t num_edges() const noexcept { return edges_.size(); }
  [[nodiscard]] const std::vector<Station> &stations() const noexcept {
    return stations_;
  }
  [[nodiscard]] double threshold_km() const noexcept { return threshold_km_; }
  [[nodiscard]] const Tensor &adjacency() const noexcept { return adjacency_; }
  [[nodiscard]] const std::vector<double> &degree() const noexcept { return degree_; }
  [[nodiscard]] const Tensor &laplacian() const noexcept { return laplacian_; }
  /// Undirected edges as (i, j) with i < j.
  [[nodiscard]] const std::vector<std::pair<std::size_t, std::size_t>> &
  edges() const noexcept {
    return edges_;
  }
  [[nodiscard]] double max_degree() const noexcept {
    double m = 0.0;
    for (double d : degree_)
      m = std::max(m, d);
    return m;
  }

  [[nodiscard]] std::size_t index_of(const std::string &id) const {
    for (std::size_t i = 0; i < stations_.size(); ++i)
      if (stations_[i].id == id)
        return i;
    throw ValidationError("station id not in graph: " + id);
  }

private:
  std::vector<Station> stations_;
  double threshold_km_ = kDefaultThresholdKm;
  Tensor adjacency_;
  std::vector<double> degree_;
  Tensor laplacian_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

inline SpatialGraph build_graph(std::vector<Station> stations,
                                double threshold_km = kDefaultThresholdKm) {
  return SpatialGraph(std::move(stations), threshold_km);
}

/// out = L h for an n x d block. `out` must not alias `h`.
inline void apply_laplacian_into(const SpatialGraph &g, const double *h,
                                 double *out, std::size_t d) {
  const std::size_t n = g.num_nodes();
  std::fill(out, out + n * d, 0.0);
  kernels::gemm_acc(g.laplacian().data(), h, out, n, n, d);
}

inline Tensor apply_laplacian(const SpatialGraph &g, const Tensor &h) {
  require_matrix(h, "apply_laplacian");
  if (h.dim(0) != g.num_nodes())
    throw DimensionError("apply_laplacian: tensor has " + std::to_string(h.dim(0)) +
                         " rows, graph has " + std::to_string(g.num_nodes()) +
                         " nodes");
  Tensor out(h.shape());
  apply_laplacian_into(g, h.data(), out.data(), h.dim(1));
  return out;
}

} // namespace pcdc::graph
