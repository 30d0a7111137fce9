// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/data/windows.hpp>
#include <pcdc/graph/station_io.hpp>

#include <Eigen/Dense>

#include <random>

namespace pcdc::test {

/// Stations on the equator at 0, 1, 2, ... degrees of longitude.
inline std::vector<graph::Station> equator_line(std::size_t n) {
  std::vector<graph::Station> s;
  for (std::size_t i = 0; i < n; ++i)
    s.push_back({"s" + std::to_string(i), 0.0, static_cast<double>(i)});
  return s;
}

/// Three mutually adjacent stations (about 111 km apart).
inline std::vector<graph::Station> triangle() {
  return {{"a", 0.0, 0.0}, {"b", 0.0, 1.0}, {"c", 0.866, 0.5}};
}

/// `n` stations scattered in a ~3 x 3 degree box.
inline std::vector<graph::Station> scattered(std::size_t n, std::uint64_t seed) {
  return graph::random_stations(n, seed);
}

/// Eigenvalues of a symmetric matrix, ascending.
inline std::vector<double> symmetric_eigenvalues(const Tensor &a) {
  const auto n = static_cast<Eigen::Index>(a.dim(0));
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

inline Tensor random_tensor(Shape shape, std::mt19937_64 &rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, scale);
  for (double &v : t.values())
    v = n(rng);
  return t;
}

/// Normalized-space sample with Gaussian entries.
inline data::WindowedSample random_sample(std::size_t V, std::size_t history,
                                          std::size_t horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  data::WindowedSample s;
  s.x_hist = random_tensor({history, V, 2}, rng);
  s.p_all = random_tensor({history + horizon, V, 8}, rng);
  s.q_all = random_tensor({history + horizon, V, 6}, rng);
  s.x_future = random_tensor({horizon, V, 2}, rng);
  s.origin_index = history - 1;
  return s;
}

} // namespace pcdc::test
