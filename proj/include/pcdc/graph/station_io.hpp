// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/graph/spatial_graph.hpp>
#include <pcdc/io/csv.hpp>

#include <json.hpp>

#include <filesystem>
#include <map>
#include <random>
#include <sstream>

namespace pcdc::graph {

inline constexpr std::string_view kStationHeader = "id,lat,lon";

struct StationBox {
  double lat_min = 38.0, lat_max = 41.0;
  double lon_min = 115.0, lon_max = 118.0;
};

/// `n` stations ("st0", "st1", ...) drawn uniformly in `box` from `seed`.
inline std::vector<Station> random_stations(std::size_t n, std::uint64_t seed,
                                            const StationBox &box = {}) {
  if (n < 1)
    throw ValidationError("station count must be >= 1");
  if (!(box.lat_min < box.lat_max) || !(box.lon_min < box.lon_max) ||
      box.lat_min < -90.0 || box.lat_max > 90.0)
    throw ValidationError("station box is empty or outside valid latitudes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(box.lat_min, box.lat_max),
      lon(box.lon_min, box.lon_max);
  std::vector<Station> s;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lat(rng);
    s.push_back({"st" + std::to_string(i), a, lon(rng)});
  }
  return s;
}

inline std::vector<Station> read_stations(const std::filesystem::path &p) {
  std::vector<Station> out;
  for (const auto &row : io::read_csv(p, kStationHeader)) {
    Station s{row[0], io::parse_double(row[1], "lat"),
              io::parse_double(row[2], "lon")};
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_stations(const std::filesystem::path &p,
                           const std::vector<Station> &stations) {
  std::ostringstream os;
  os << kStationHeader << '\n';
  for (const auto &s : stations)
    os << s.id << ',' << io::format_double(s.lat) << ','
       << io::format_double(s.lon) << '\n';
  io::write_file(p, os.str());
}

/// Node/edge counts and the degree histogram as JSON.
inline std::string graph_summary_json(const SpatialGraph &g) {
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  std::map<int, int> counts;
  for (double d : g.degree())
    ++counts[static_cast<int>(d)];
  for (auto [deg, count] : counts)
    hist[std::to_string(deg)] = count;
  nlohmann::ordered_json j{{"num_nodes", g.num_nodes()},
                           {"num_edges", g.num_edges()},
                           {"threshold_km", g.threshold_km()},
                           {"degree_histogram", hist}};
  return j.dump(2) + "\n";
}

/// Dense matrix as CSV with a header row of station ids.
inline void write_matrix_csv(const std::filesystem::path &p,
                             const SpatialGraph &g, const Tensor &m) {
  std::ostringstream os;
  os << "id";
  for (const auto &s : g.stations())
    os << ',' << s.id;
  os << '\n';
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    os << g.stations()[i].id;
    for (std::size_t j = 0; j < m.dim(1); ++j)
      os << ',' << io::format_double(m(i, j));
    os << '\n';
  }
  io::write_file(p, os.str());
}

} // namespace pcdc::graph
