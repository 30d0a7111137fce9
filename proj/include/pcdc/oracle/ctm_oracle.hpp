// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic ground truth: an explicit-Euler discretization of
//   dC/dt = -u . grad C + div(k grad C) + R + D + S
// on the station graph. Advection is an upwind flux along each edge driven
// by the wind projected onto the edge bearing; diffusion uses the
// combinatorial Laplacian D - A so that transport alone conserves mass.
// Chemistry, deposition and sources are toy stand-ins:
//   S: primary PM from the e_pm25 channel plus constant backgrounds
//   R: O3 produced from the e_voc precursor channel times radiation
//   D: first-order loss per species
// Actual sources carry an unobserved, slowly varying multiplicative factor,
// so the future cannot be read off the current frame alone.

#include <pcdc/data/series.hpp>
#include <pcdc/error.hpp>
#include <pcdc/graph/spatial_graph.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace pcdc::oracle {

struct OracleConfig {
  double dt = 1.0;              ///< hours
  double diffusion = 0.02;      ///< k, 1/h per edge
  double advection = 0.006;     ///< fraction of mass per hour per m/s along an edge
  double wind_mean_u = 2.0;     ///< m/s
  double wind_mean_v = 1.0;     ///< m/s
  double wind_amplitude = 3.0;  ///< synoptic oscillation amplitude, m/s
  double wind_period_h = 96.0;
  double wind_jitter = 0.5;     ///< per-station AR(1) std, m/s
  std::array<double, 2> deposition{0.03, 0.05}; ///< 1/h, per species
  double emission_scale = 1.0;  ///< multiplies every anthropogenic source
  double pm_per_emission = 2.0; ///< ug/m3/h per unit e_pm25
  std::array<double, 2> background{0.3, 1.0}; ///< constant ug/m3/h inflow
  double reaction_rate = 0.004; ///< O3 yield per (W/m2 * unit e_voc) per hour
  double radiation_peak = 800.0; ///< W/m2
  bool diurnal = true;          ///< diurnal cycles in radiation and emissions
  double diurnal_amplitude = 0.8;
  double source_noise_std = 0.35; ///< log-std of the hidden source factor
  double source_noise_corr_h = 36.0;
  double initial_pm = 30.0;
  double initial_o3 = 60.0;
  double initial_jitter = 0.2;  ///< relative
  std::uint64_t seed = 7;

  /// Upper bound on any station's wind speed, used by the stability check.
  [[nodiscard]] double max_wind_speed() const {
    return std::hypot(wind_mean_u, wind_mean_v) + wind_amplitude * std::sqrt(2.0) +
           4.0 * wind_jitter;
  }
};

/// Per-step drivers, generated once from the config seed.
struct Forcing {
  Tensor wind;      ///< [steps x V x 2] (u, v) m/s; AR jitter is clipped at 4 std
  Tensor radiation; ///< [steps x V] W/m2
  Tensor emissions; ///< [steps x V x 6] reported inventory (Q)
  Tensor hidden;    ///< [steps x V] unobserved source multiplier
  Tensor meteo;     ///< [steps x V x 8] reported meteorology (P)
};

/// Explicit-Euler growth bound: dt * (k*deg + adv*|u|*deg + deposition) < 1.
inline void check_stability(const OracleConfig &cfg, const graph::SpatialGraph &g) {
  if (!(cfg.dt > 0.0))
    throw ConfigError("oracle dt must be positive");
  for (double r : {cfg.diffusion, cfg.advection, cfg.deposition[0],
                   cfg.deposition[1], cfg.reaction_rate, cfg.emission_scale,
                   cfg.background[0], cfg.background[1], cfg.wind_jitter,
                   cfg.source_noise_std})
    if (!(r >= 0.0))
      throw ConfigError("oracle rates must be nonnegative");
  const double deg = g.max_degree();
  const double dep = std::max(cfg.deposition[0], cfg.deposition[1]);
  const double bound =
      cfg.dt * (cfg.diffusion * deg + cfg.advection * cfg.max_wind_speed() * deg + dep);
  if (!(bound < 1.0))
    throw ConfigError("oracle explicit step is unstable: dt*(k*deg + adv*|u|*deg + "
                      "deposition) = " +
                      std::to_string(bound) + " >= 1");
}

namespace detail {

inline double hour_of_day(std::int64_t hour) {
  return static_cast<double>(((hour % 24) + 24) % 24);
}

inline double bump(double h, double centre, double width) {
  double d = std::abs(h - centre);
  d = std::min(d, 24.0 - d);
  return std::exp(-d * d / (2.0 * width * width));
}

/// Traffic-like profile with morning and evening peaks, mean about 1.
inline double emission_profile(double h, double amplitude) {
  constexpr double kMeanBump = 2.0 * 2.0 * 2.5066282746310002 / 24.0; // 2 * sqrt(2pi)*w/24
  return 1.0 + amplitude * (bump(h, 8.0, 2.0) + bump(h, 18.0, 2.0) - kMeanBump);
}

struct Ar1 {
  double rho;
  double sigma;
  double x = 0.0;
  double next(std::mt19937_64 &rng, std::normal_distribution<double> &n) {
    x = rho * x + std::sqrt(1.0 - rho * rho) * sigma * n(rng);
    return x;
  }
};

} // namespace detail

inline Forcing make_forcing(const OracleConfig &cfg, const graph::SpatialGraph &g,
                            std::size_t steps,
                            std::int64_t start_hour = data::kDefaultStartHour) {
  using namespace detail;
  const std::size_t V = g.num_nodes();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Forcing f{Tensor({steps, V, 2}), Tensor({steps, V}), Tensor({steps, V, 6}),
            Tensor({steps, V}), Tensor({steps, V, 8})};

  // Static per-station attributes.
  std::vector<double> urban(V), wind_phase(V);
  std::vector<std::array<double, 6>> base(V);
  constexpr std::array<double, 6> kChannelScale{1.0, 1.4, 2.0, 1.5, 0.6, 0.8};
  for (std::size_t v = 0; v < V; ++v) {
    urban[v] = 0.5 + unif(rng);
    wind_phase[v] = 0.3 * (unif(rng) - 0.5);
    for (std::size_t c = 0; c < 6; ++c)
      base[v][c] = kChannelScale[c] * urban[v] * (0.8 + 0.4 * unif(rng));
  }

  const double rho_fast = std::exp(-1.0 / 6.0);
  const double rho_src = std::exp(-1.0 / std::max(cfg.source_noise_corr_h, 1e-9));
  const double rho_met = std::exp(-1.0 / 24.0);
  std::vector<Ar1> ju(V, {rho_fast, cfg.wind_jitter}), jv(V, {rho_fast, cfg.wind_jitter});
  std::vector<Ar1> src(V, {rho_src, cfg.source_noise_std});
  std::vector<Ar1> cloud(V, {rho_met, 0.15}), temp(V, {rho_met, 2.0}),
      rain(V, {std::exp(-1.0 / 4.0), 1.0}), pres(V, {rho_met, 300.0}),
      mix(V, {rho_met, 100.0});
  // Burn in the source factor so the series starts at stationarity.
  for (auto &s : src)
    s.x = cfg.source_noise_std * normal(rng);

  const double clip = 4.0 * cfg.wind_jitter;
  for (std::size_t t = 0; t < steps; ++t) {
    const double h = hour_of_day(start_hour + static_cast<std::int64_t>(t));
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) /
                         std::max(cfg.wind_period_h, 1e-9);
    const double sun = cfg.diurnal
                           ? std::max(0.0, std::sin(2.0 * std::numbers::pi * (h - 6.0) / 24.0))
                           : 0.5;
    for (std::size_t v = 0; v < V; ++v) {
      const double u = cfg.wind_mean_u +
                       cfg.wind_amplitude * std::cos(phase + wind_phase[v]) +
                       std::clamp(ju[v].next(rng, normal), -clip, clip);
      const double w = cfg.wind_mean_v +
                       cfg.wind_amplitude * std::sin(phase + wind_phase[v]) +
                       std::clamp(jv[v].next(rng, normal), -clip, clip);
      f.wind(t, v, 0) = u;
      f.wind(t, v, 1) = w;

      const double cl = std::clamp(1.0 - std::abs(cloud[v].next(rng, normal)), 0.3, 1.0);
      f.radiation[t * V + v] = cfg.radiation_peak * sun * cl;

      const double prof = cfg.diurnal ? emission_profile(h, cfg.diurnal_amplitude) : 1.0;
      for (std::size_t c = 0; c < 6; ++c)
        f.emissions(t, v, c) = base[v][c] * prof;
      f.hidden[t * V + v] = std::exp(src[v].next(rng, normal) -
                                     0.5 * cfg.source_noise_std * cfg.source_noise_std);

      const double diurnal_t =
          cfg.diurnal ? std::sin(2.0 * std::numbers::pi * (h - 9.0) / 24.0) : 0.0;
      const double t2m = 285.0 + 6.0 * diurnal_t + temp[v].next(rng, normal);
      f.meteo(t, v, 0) = t2m;
      f.meteo(t, v, 1) = t2m - 5.0 - std::abs(0.5 * temp[v].x);
      f.meteo(t, v, 2) = std::max(0.0, rain[v].next(rng, normal) - 1.2) * 1e-3;
      f.meteo(t, v, 3) = 101325.0 + pres[v].next(rng, normal);
      f.meteo(t, v, 4) = std::max(50.0, 300.0 + 900.0 * sun + mix[v].next(rng, normal));
      f.meteo(t, v, data::kMetSwr) = f.radiation[t * V + v];
      f.meteo(t, v, data::kMetU100) = u;
      f.meteo(t, v, data::kMetV100) = w;
    }
  }
  return f;
}

struct StepResult {
  Tensor state;             ///< [V x 2]
  double clamped_mass = 0.0; ///< mass added back by clamping negatives to zero
};

/// Advances the [V x 2] concentration field by one explicit-Euler step
/// using the drivers at step index `t`.
inline StepResult step(const Tensor &state, const OracleConfig &cfg,
                       const graph::SpatialGraph &g, const Forcing &forcing,
                       std::size_t t) {
  const std::size_t V = g.num_nodes();
  if (state.shape() != Shape{V, 2})
    throw DimensionError("oracle state must be [" + std::to_string(V) + " x 2]");
  if (!state.all_finite())
    throw NumericError("oracle state not finite at step " + std::to_string(t));

  Tensor d({V, 2});
  const auto &st = g.stations();
  for (auto [i, j] : g.edges()) {
    const auto [ex, ey] = graph::bearing_unit(st[i], st[j]);
    const double ui = 0.5 * (forcing.wind(t, i, 0) + forcing.wind(t, j, 0));
    const double vi = 0.5 * (forcing.wind(t, i, 1) + forcing.wind(t, j, 1));
    const double w = ui * ex + vi * ey; // > 0 means flow from i to j
    for (std::size_t s = 0; s < 2; ++s) {
      const double upwind = w > 0.0 ? state(i, s) : state(j, s);
      const double flux = cfg.advection * w * upwind;
      const double diff = cfg.diffusion * (state(i, s) - state(j, s));
      d(i, s) -= flux + diff;
      d(j, s) += flux + diff;
    }
  }
  for (std::size_t v = 0; v < V; ++v) {
    const double hidden = forcing.hidden[t * V + v];
    const double pm_src = cfg.emission_scale * cfg.pm_per_emission *
                          forcing.emissions(t, v, data::kEmisPm25) * hidden;
    const double o3_prod = cfg.emission_scale * cfg.reaction_rate *
                           forcing.radiation[t * V + v] *
                           forcing.emissions(t, v, data::kEmisVoc) * hidden;
    d(v, 0) += pm_src + cfg.background[0] - cfg.deposition[0] * state(v, 0);
    d(v, 1) += o3_prod + cfg.background[1] - cfg.deposition[1] * state(v, 1);
  }

  StepResult r{Tensor({V, 2}), 0.0};
  for (std::size_t k = 0; k < r.state.size(); ++k) {
    const double x = state[k] + cfg.dt * d[k];
    if (x < 0.0) {
      r.clamped_mass += -x;
      r.state[k] = 0.0;
    } else {
      r.state[k] = x;
    }
  }
  return r;
}

inline Tensor initial_state(const OracleConfig &cfg, std::size_t V) {
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Tensor s({V, 2});
  for (std::size_t v = 0; v < V; ++v) {
    s(v, 0) = cfg.initial_pm * (1.0 + cfg.initial_jitter * unif(rng));
    s(v, 1) = cfg.initial_o3 * (1.0 + cfg.initial_jitter * unif(rng));
  }
  return s;
}

struct Simulation {
  data::SeriesBundle bundle;
  std::vector<double> clamped_mass; ///< per step, index 0 unused
};

/// Rolls the simulator for `steps` frames (frame 0 is the initial state)
/// and packages pollutants, meteorology and emissions as a SeriesBundle.
inline Simulation simulate(const OracleConfig &cfg, const graph::SpatialGraph &g,
                           std::size_t steps,
                           std::int64_t start_hour = data::kDefaultStartHour) {
  if (steps < 1)
    throw ValidationError("oracle needs at least one step");
  check_stability(cfg, g);
  const std::size_t V = g.num_nodes();
  const Forcing f = make_forcing(cfg, g, steps, start_hour);

  Simulation sim;
  auto &b = sim.bundle;
  b.hours.resize(steps);
  for (std::size_t t = 0; t < steps; ++t)
    b.hours[t] = start_hour + static_cast<std::int64_t>(t);
  for (const auto &s : g.stations())
    b.station_ids.push_back(s.id);
  b.X = Tensor({steps, V, 2});
  b.P = f.meteo;
  b.Q = f.emissions;
  b.filled.assign(steps, 0);
  b.excluded.assign(steps, 0);
  sim.clamped_mass.assign(steps, 0.0);

  Tensor c = initial_state(cfg, V);
  std::copy(c.values().begin(), c.values().end(), b.X.values().begin());
  for (std::size_t t = 1; t < steps; ++t) {
    StepResult r = step(c, cfg, g, f, t);
    sim.clamped_mass[t] = r.clamped_mass;
    c = std::move(r.state);
    std::copy(c.values().begin(), c.values().end(),
              b.X.values().begin() + static_cast<std::ptrdiff_t>(t * V * 2));
  }
  return sim;
}

inline data::SeriesBundle generate(const OracleConfig &cfg,
                                   const graph::SpatialGraph &g, std::size_t steps) {
  return simulate(cfg, g, steps).bundle;
}

} // namespace pcdc::oracle
