// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/numerics/tensor.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pcdc::data {

// Channel roster. Order is the tensor channel order everywhere.
inline constexpr std::array<std::string_view, 2> kPollutantChannels{"pm25", "o3"};
inline constexpr std::array<std::string_view, 8> kMeteoChannels{
    "t2m", "d2m", "tp", "sp", "blh", "swr", "u100", "v100"};
inline constexpr std::array<std::string_view, 6> kEmissionChannels{
    "e_pm25", "e_pm10", "e_nox", "e_voc", "e_nh3", "e_so2"};

inline constexpr std::size_t kNumPollutants = kPollutantChannels.size();
inline constexpr std::size_t kNumMeteo = kMeteoChannels.size();
inline constexpr std::size_t kNumEmissions = kEmissionChannels.size();
inline constexpr std::size_t kNumInputs = kNumPollutants + kNumMeteo + kNumEmissions;

// Indices used by the simulator when it writes its forcing into P and Q.
inline constexpr std::size_t kMetSwr = 5;
inline constexpr std::size_t kMetU100 = 6;
inline constexpr std::size_t kMetV100 = 7;
inline constexpr std::size_t kEmisPm25 = 0;
inline constexpr std::size_t kEmisVoc = 3;

enum class Kind { X, P, Q };

inline std::string_view kind_name(Kind k) {
  switch (k) {
  case Kind::X: return "X";
  case Kind::P: return "P";
  case Kind::Q: return "Q";
  }
  return "?";
}

/// Aligned hourly series for every station. Tensors are [steps x stations x
/// channels]; `hours` are whole hours since 1970-01-01T00:00Z.
struct SeriesBundle {
  std::vector<std::int64_t> hours;
  std::vector<std::string> station_ids;
  Tensor X; ///< pollutants, ug/m3
  Tensor P; ///< meteorology
  Tensor Q; ///< emissions
  /// Step was reconstructed by forward fill.
  std::vector<std::uint8_t> filled;
  /// Step sits in a gap too long to fill; windows touching it are dropped.
  std::vector<std::uint8_t> excluded;

  [[nodiscard]] std::size_t steps() const noexcept { return hours.size(); }
  [[nodiscard]] std::size_t num_stations() const noexcept {
    return station_ids.size();
  }

  friend bool operator==(const SeriesBundle &, const SeriesBundle &) = default;
};

/// 2020-01-01T00:00Z in hours since the epoch.
inline constexpr std::int64_t kDefaultStartHour = 18262LL * 24;

} // namespace pcdc::data
