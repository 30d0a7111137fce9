// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <pcdc/data/series.hpp>
#include <pcdc/graph/spatial_graph.hpp>
#include <pcdc/io/csv.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

namespace pcdc::data {

inline constexpr std::string_view kSeriesHeader =
    "timestamp,station_id,kind,channel,value";

/// Longest run of missing hours that is forward-filled; longer gaps mark
/// the affected steps as excluded.
inline constexpr std::size_t kMaxForwardFill = 3;

/// "YYYY-MM-DDTHH:00:00Z" -> hours since the epoch. Anything that is not a
/// whole UTC hour is rejected.
inline std::int64_t parse_iso_hour(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char tail = 0;
  const std::string str(s);
  const int n = std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d,
                            &h, &mi, &sec, &tail);
  if (n < 6 || (n == 7 && tail != 'Z') || str.size() > 20)
    throw ValidationError("malformed timestamp '" + str +
                          "' (expected YYYY-MM-DDTHH:MM:SSZ)");
  if (mi != 0 || sec != 0)
    throw ValidationError("timestamp '" + str + "' is not on an hourly boundary");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23)
    throw ValidationError("invalid calendar timestamp '" + str + "'");
  return static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * 24 + h;
}

inline std::string format_iso_hour(std::int64_t hours) {
  using namespace std::chrono;
  const auto days_since = static_cast<int>(
      hours >= 0 ? hours / 24 : -((-hours + 23) / 24));
  const int h = static_cast<int>(hours - static_cast<std::int64_t>(days_since) * 24);
  const year_month_day ymd{sys_days{days{days_since}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), h);
  return buf;
}

namespace detail {

template <std::size_t N>
std::size_t channel_index(const std::array<std::string_view, N> &names,
                          std::string_view ch) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == ch)
      return i;
  return N;
}

} // namespace detail

inline void write_series(const std::filesystem::path &p, const SeriesBundle &b) {
  const std::size_t V = b.num_stations();
  std::ostringstream os;
  os << kSeriesHeader << '\n';
  auto emit = [&](const std::string &ts, const std::string &id, Kind k,
                  std::string_view ch, double v) {
    os << ts << ',' << id << ',' << kind_name(k) << ',' << ch << ','
       << io::format_double(v) << '\n';
  };
  for (std::size_t t = 0; t < b.steps(); ++t) {
    const std::string ts = format_iso_hour(b.hours[t]);
    for (std::size_t v = 0; v < V; ++v) {
      const auto &id = b.station_ids[v];
      for (std::size_t c = 0; c < kNumPollutants; ++c)
        emit(ts, id, Kind::X, kPollutantChannels[c], b.X(t, v, c));
      for (std::size_t c = 0; c < kNumMeteo; ++c)
        emit(ts, id, Kind::P, kMeteoChannels[c], b.P(t, v, c));
      for (std::size_t c = 0; c < kNumEmissions; ++c)
        emit(ts, id, Kind::Q, kEmissionChannels[c], b.Q(t, v, c));
    }
  }
  io::write_file(p, os.str());
}

/// Reads a long-format series file into the station order of `g`. Missing
/// cells are forward-filled for runs of up to kMaxForwardFill hours (step
/// flagged in `filled`); longer runs, or gaps with no earlier value, flag
/// the step in `excluded`.
inline SeriesBundle load_bundle(const std::filesystem::path &series_path,
                                const graph::SpatialGraph &g) {
  const auto rows = io::read_csv(series_path, kSeriesHeader);
  if (rows.empty())
    throw ValidationError(series_path.string() + ": no data rows");

  std::map<std::string, std::size_t> station_index;
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    station_index[g.stations()[i].id] = i;

  struct Cell {
    std::int64_t hour;
    std::size_t station;
    Kind kind;
    std::size_t channel;
    double value;
  };
  std::vector<Cell> cells;
  cells.reserve(rows.size());
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  std::vector<std::uint8_t> station_seen(g.num_nodes(), 0);

  for (const auto &r : rows) {
    const std::int64_t h = parse_iso_hour(r[0]);
    auto it = station_index.find(r[1]);
    if (it == station_index.end())
      throw ValidationError("station '" + r[1] + "' in " + series_path.string() +
                            " is not in the graph");
    Kind k{};
    std::size_t ch = 0, nch = 0;
    if (r[2] == "X") {
      k = Kind::X;
      ch = detail::channel_index(kPollutantChannels, r[3]);
      nch = kNumPollutants;
    } else if (r[2] == "P") {
      k = Kind::P;
      ch = detail::channel_index(kMeteoChannels, r[3]);
      nch = kNumMeteo;
    } else if (r[2] == "Q") {
      k = Kind::Q;
      ch = detail::channel_index(kEmissionChannels, r[3]);
      nch = kNumEmissions;
    } else {
      throw ValidationError("unknown kind '" + r[2] + "' (expected X, P or Q)");
    }
    if (ch == nch)
      throw ValidationError("unknown " + r[2] + " channel '" + r[3] + "'");
    const double v = io::parse_double(r[4], "value");
    if (!std::isfinite(v))
      throw ValidationError("non-finite value at " + r[0] + " " + r[1]);
    station_seen[it->second] = 1;
    lo = std::min(lo, h);
    hi = std::max(hi, h);
    cells.push_back({h, it->second, k, ch, v});
  }
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    if (!station_seen[i])
      throw ValidationError("graph station '" + g.stations()[i].id +
                            "' has no rows in " + series_path.string());

  const auto steps = static_cast<std::size_t>(hi - lo + 1);
  const std::size_t V = g.num_nodes();
  SeriesBundle b;
  b.hours.resize(steps);
  for (std::size_t t = 0; t < steps; ++t)
    b.hours[t] = lo + static_cast<std::int64_t>(t);
  for (const auto &s : g.stations())
    b.station_ids.push_back(s.id);
  b.X = Tensor({steps, V, kNumPollutants});
  b.P = Tensor({steps, V, kNumMeteo});
  b.Q = Tensor({steps, V, kNumEmissions});
  b.filled.assign(steps, 0);
  b.excluded.assign(steps, 0);

  // Presence mask per (kind) tensor element.
  std::vector<std::uint8_t> hx(b.X.size(), 0), hp(b.P.size(), 0), hq(b.Q.size(), 0);
  for (const auto &c : cells) {
    const auto t = static_cast<std::size_t>(c.hour - lo);
    Tensor *dst = nullptr;
    std::vector<std::uint8_t> *mask = nullptr;
    switch (c.kind) {
    case Kind::X: dst = &b.X; mask = &hx; break;
    case Kind::P: dst = &b.P; mask = &hp; break;
    case Kind::Q: dst = &b.Q; mask = &hq; break;
    }
    const std::size_t idx = (t * V + c.station) * dst->dim(2) + c.channel;
    if ((*mask)[idx])
      throw ValidationError("duplicate value for " + format_iso_hour(c.hour) + " " +
                            b.station_ids[c.station] + " " +
                            std::string(kind_name(c.kind)));
    (*mask)[idx] = 1;
    (*dst)[idx] = c.value;
  }

  auto fill = [&](Tensor &x, const std::vector<std::uint8_t> &mask) {
    const std::size_t per_step = V * x.dim(2);
    for (std::size_t e = 0; e < per_step; ++e) {
      std::size_t run = 0;
      bool have_prev = false;
      double prev = 0.0;
      for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t idx = t * per_step + e;
        if (mask[idx]) {
          have_prev = true;
          prev = x[idx];
          run = 0;
          continue;
        }
        ++run;
        x[idx] = prev;
        if (have_prev && run <= kMaxForwardFill) {
          b.filled[t] = 1;
        } else {
          b.excluded[t] = 1;
          // The leading part of an over-long run was filled above; exclude it too.
          for (std::size_t back = 1; back < run && back <= t; ++back)
            b.excluded[t - back] = 1;
        }
      }
    }
  };
  fill(b.X, hx);
  fill(b.P, hp);
  fill(b.Q, hq);
  return b;
}

} // namespace pcdc::data
