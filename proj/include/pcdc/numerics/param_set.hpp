// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/numerics/tensor.hpp>

#include <string>
#include <utility>
#include <vector>

namespace pcdc {

/// Named tensors with insertion-order iteration. Names are unique and
/// shapes do not change once a name is added.
class ParamSet {
public:
  using Entry = std::pair<std::string, Tensor>;

  Tensor &add(std::string name, Tensor value) {
    if (find(name) != nullptr)
      throw ValidationError("duplicate parameter name: " + name);
    entries_.emplace_back(std::move(name), std::move(value));
    return entries_.back().second;
  }

  [[nodiscard]] Tensor *find(std::string_view name) noexcept {
    for (auto &[n, t] : entries_)
      if (n == name)
        return &t;
    return nullptr;
  }
  [[nodiscard]] const Tensor *find(std::string_view name) const noexcept {
    for (const auto &[n, t] : entries_)
      if (n == name)
        return &t;
    return nullptr;
  }

  [[nodiscard]] Tensor &at(std::string_view name) {
    if (auto *t = find(name))
      return *t;
    throw ValidationError("unknown parameter: " + std::string(name));
  }
  [[nodiscard]] const Tensor &at(std::string_view name) const {
    if (const auto *t = find(name))
      return *t;
    throw ValidationError("unknown parameter: " + std::string(name));
  }

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] Entry &entry(std::size_t i) { return entries_.at(i); }
  [[nodiscard]] const Entry &entry(std::size_t i) const { return entries_.at(i); }

  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  [[nodiscard]] std::size_t numel() const noexcept {
    std::size_t n = 0;
    for (const auto &e : entries_)
      n += e.second.size();
    return n;
  }

  /// Same names and shapes, all values zero.
  [[nodiscard]] ParamSet zeros_like() const {
    ParamSet z;
    for (const auto &[n, t] : entries_)
      z.entries_.emplace_back(n, Tensor(t.shape()));
    return z;
  }

  void set_zero() {
    for (auto &e : entries_)
      e.second.fill(0.0);
  }

  /// Throws DimensionError unless `o` has the same names and shapes in order.
  void require_compatible(const ParamSet &o) const {
    if (o.size() != size())
      throw DimensionError("parameter sets differ in length");
    for (std::size_t i = 0; i < size(); ++i) {
      if (entries_[i].first != o.entries_[i].first)
        throw DimensionError("parameter name mismatch: " + entries_[i].first +
                             " vs " + o.entries_[i].first);
      if (entries_[i].second.shape() != o.entries_[i].second.shape())
        throw DimensionError("shape mismatch for parameter " +
                             entries_[i].first);
    }
  }

  ParamSet &operator+=(const ParamSet &o) {
    require_compatible(o);
    for (std::size_t i = 0; i < size(); ++i)
      entries_[i].second += o.entries_[i].second;
    return *this;
  }

  ParamSet &operator*=(double s) {
    for (auto &e : entries_)
      e.second *= s;
    return *this;
  }

  [[nodiscard]] double global_norm() const {
    double s = 0.0;
    for (const auto &e : entries_)
      for (double v : e.second.span())
        s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const ParamSet &a, const ParamSet &b) {
    return a.entries_ == b.entries_;
  }

private:
  std::vector<Entry> entries_;
};

} // namespace pcdc
