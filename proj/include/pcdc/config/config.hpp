// SPDX-License-Identifier: Apache-2.0
#pragma once

// Sectioned key-value run configuration. One table of fields drives file
// parsing, dotted `section.key=value` overrides, unknown-key rejection and
// the resolved snapshot, so the three can never disagree.

#include <pcdc/data/prepare.hpp>
#include <pcdc/error.hpp>
#include <pcdc/graph/station_io.hpp>
#include <pcdc/io/csv.hpp>
#include <pcdc/model/pcdcnet.hpp>
#include <pcdc/oracle/ctm_oracle.hpp>
#include <pcdc/train/trainer.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pcdc::config {

struct GraphSettings {
  std::size_t num_stations = 10;
  std::uint64_t station_seed = 2024;
  graph::StationBox box;
  double threshold_km = 200.0;
  std::string stations_file; ///< optional; replaces the generated layout

  friend bool operator==(const GraphSettings &a, const GraphSettings &b) {
    return a.num_stations == b.num_stations && a.station_seed == b.station_seed &&
           a.box.lat_min == b.box.lat_min && a.box.lat_max == b.box.lat_max &&
           a.box.lon_min == b.box.lon_min && a.box.lon_max == b.box.lon_max &&
           a.threshold_km == b.threshold_km && a.stations_file == b.stations_file;
  }
};

struct DatasetSettings {
  data::DatasetConfig windows;
  std::size_t steps = 2000;  ///< hours generated by gen-data
  std::string series_file;   ///< optional; otherwise <out>/series.csv

  friend bool operator==(const DatasetSettings &, const DatasetSettings &) = default;
};

struct SweepSettings {
  std::vector<std::string> cells{"full", "no_lid", "no_std", "no_tad", "emissions_off",
                                 "persistence"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t jobs = 1;

  friend bool operator==(const SweepSettings &, const SweepSettings &) = default;
};

struct Config {
  GraphSettings graph;
  oracle::OracleConfig oracle;
  DatasetSettings dataset;
  model::ModelConfig model;
  train::TrainConfig train;
  SweepSettings sweep;

  void validate() const;
};

namespace detail {

inline std::string trimmed(std::string_view s) { return std::string(io::trim(s)); }

template <class T> T parse_unsigned(const std::string &text, const std::string &key) {
  const std::string s = trimmed(text);
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("'" + key + "': expected a nonnegative integer, got '" + text + "'");
  return v;
}

inline double parse_real(const std::string &text, const std::string &key) {
  try {
    return io::parse_double(trimmed(text), key);
  } catch (const Error &) {
    throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
  }
}

inline bool parse_bool(const std::string &text, const std::string &key) {
  const std::string s = trimmed(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on")
    return true;
  if (s == "false" || s == "0" || s == "no" || s == "off")
    return false;
  throw ConfigError("'" + key + "': expected true/false, got '" + text + "'");
}

inline std::vector<std::string> parse_list(const std::string &text) {
  std::vector<std::string> out;
  const std::string line = trimmed(text);
  for (auto &f : io::split_fields(line))
    if (auto t = trimmed(f); !t.empty())
      out.push_back(t);
  return out;
}

template <class T> std::string join(const std::vector<T> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      out += ',';
    if constexpr (std::is_same_v<T, std::string>)
      out += v[i];
    else
      out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  std::string key; ///< section.name
  std::function<void(Config &, const std::string &)> set;
  std::function<std::string(const Config &)> get;
};

template <class Get> Field real(std::string key, Get ref) {
  return {key,
          [ref, key](Config &c, const std::string &v) { ref(c) = parse_real(v, key); },
          [ref](const Config &c) { return io::format_double(ref(const_cast<Config &>(c))); }};
}

template <class Get> Field count(std::string key, Get ref) {
  using T = std::remove_reference_t<decltype(ref(std::declval<Config &>()))>;
  return {key,
          [ref, key](Config &c, const std::string &v) { ref(c) = parse_unsigned<T>(v, key); },
          [ref](const Config &c) { return std::to_string(ref(const_cast<Config &>(c))); }};
}

template <class Get> Field flag(std::string key, Get ref) {
  return {key,
          [ref, key](Config &c, const std::string &v) { ref(c) = parse_bool(v, key); },
          [ref](const Config &c) {
            return std::string(ref(const_cast<Config &>(c)) ? "true" : "false");
          }};
}

template <class Get> Field text(std::string key, Get ref) {
  return {key, [ref](Config &c, const std::string &v) { ref(c) = trimmed(v); },
          [ref](const Config &c) { return ref(const_cast<Config &>(c)); }};
}

#define PCDC_REF(expr) [](Config & c) -> auto & { return c.expr; }

inline const std::vector<Field> &fields() {
  static const std::vector<Field> f{
      count("graph.num_stations", PCDC_REF(graph.num_stations)),
      count("graph.station_seed", PCDC_REF(graph.station_seed)),
      real("graph.lat_min", PCDC_REF(graph.box.lat_min)),
      real("graph.lat_max", PCDC_REF(graph.box.lat_max)),
      real("graph.lon_min", PCDC_REF(graph.box.lon_min)),
      real("graph.lon_max", PCDC_REF(graph.box.lon_max)),
      real("graph.threshold_km", PCDC_REF(graph.threshold_km)),
      text("graph.stations_file", PCDC_REF(graph.stations_file)),

      real("oracle.dt", PCDC_REF(oracle.dt)),
      real("oracle.diffusion", PCDC_REF(oracle.diffusion)),
      real("oracle.advection", PCDC_REF(oracle.advection)),
      real("oracle.wind_mean_u", PCDC_REF(oracle.wind_mean_u)),
      real("oracle.wind_mean_v", PCDC_REF(oracle.wind_mean_v)),
      real("oracle.wind_amplitude", PCDC_REF(oracle.wind_amplitude)),
      real("oracle.wind_period_h", PCDC_REF(oracle.wind_period_h)),
      real("oracle.wind_jitter", PCDC_REF(oracle.wind_jitter)),
      real("oracle.deposition_pm", PCDC_REF(oracle.deposition[0])),
      real("oracle.deposition_o3", PCDC_REF(oracle.deposition[1])),
      real("oracle.emission_scale", PCDC_REF(oracle.emission_scale)),
      real("oracle.pm_per_emission", PCDC_REF(oracle.pm_per_emission)),
      real("oracle.background_pm", PCDC_REF(oracle.background[0])),
      real("oracle.background_o3", PCDC_REF(oracle.background[1])),
      real("oracle.reaction_rate", PCDC_REF(oracle.reaction_rate)),
      real("oracle.radiation_peak", PCDC_REF(oracle.radiation_peak)),
      flag("oracle.diurnal", PCDC_REF(oracle.diurnal)),
      real("oracle.diurnal_amplitude", PCDC_REF(oracle.diurnal_amplitude)),
      real("oracle.source_noise_std", PCDC_REF(oracle.source_noise_std)),
      real("oracle.source_noise_corr_h", PCDC_REF(oracle.source_noise_corr_h)),
      real("oracle.initial_pm", PCDC_REF(oracle.initial_pm)),
      real("oracle.initial_o3", PCDC_REF(oracle.initial_o3)),
      real("oracle.initial_jitter", PCDC_REF(oracle.initial_jitter)),
      count("oracle.seed", PCDC_REF(oracle.seed)),

      count("dataset.steps", PCDC_REF(dataset.steps)),
      text("dataset.series_file", PCDC_REF(dataset.series_file)),
      count("dataset.history", PCDC_REF(dataset.windows.history)),
      count("dataset.horizon", PCDC_REF(dataset.windows.horizon)),
      count("dataset.stride", PCDC_REF(dataset.windows.stride)),
      count("dataset.eval_stride", PCDC_REF(dataset.windows.eval_stride)),
      real("dataset.train_frac", PCDC_REF(dataset.windows.train_frac)),
      real("dataset.val_frac", PCDC_REF(dataset.windows.val_frac)),

      count("model.hidden", PCDC_REF(model.hidden)),
      count("model.mlp_depth", PCDC_REF(model.mlp_depth)),
      real("model.dropout", PCDC_REF(model.dropout)),
      real("model.rmsnorm_eps", PCDC_REF(model.rmsnorm_eps)),
      flag("model.use_lid", PCDC_REF(model.use_lid)),
      flag("model.use_std", PCDC_REF(model.use_std)),
      flag("model.use_tad", PCDC_REF(model.use_tad)),
      flag("model.use_emissions", PCDC_REF(model.use_emissions)),

      real("train.lr", PCDC_REF(train.lr)),
      count("train.batch_size", PCDC_REF(train.batch_size)),
      count("train.max_epochs", PCDC_REF(train.max_epochs)),
      real("train.lambda", PCDC_REF(train.lambda)),
      flag("train.dic_smooth", PCDC_REF(train.dic_smooth)),
      count("train.early_stop_patience", PCDC_REF(train.early_stop_patience)),
      count("train.plateau_patience", PCDC_REF(train.plateau_patience)),
      real("train.plateau_factor", PCDC_REF(train.plateau_factor)),
      real("train.min_lr", PCDC_REF(train.min_lr)),
      real("train.clip_norm", PCDC_REF(train.clip_norm)),
      count("train.seed", PCDC_REF(train.seed)),
      count("train.threads", PCDC_REF(train.threads)),

      Field{"sweep.cells",
            [](Config &c, const std::string &v) { c.sweep.cells = parse_list(v); },
            [](const Config &c) { return join(c.sweep.cells); }},
      Field{"sweep.seeds",
            [](Config &c, const std::string &v) {
              c.sweep.seeds.clear();
              for (const auto &s : parse_list(v))
                c.sweep.seeds.push_back(parse_unsigned<std::uint64_t>(s, "sweep.seeds"));
            },
            [](const Config &c) { return join(c.sweep.seeds); }},
      count("sweep.jobs", PCDC_REF(sweep.jobs)),
  };
  return f;
}

#undef PCDC_REF

inline const Field &field(const std::string &key) {
  for (const auto &f : fields())
    if (f.key == key)
      return f;
  throw ConfigError("unknown config key '" + key + "'");
}

} // namespace detail

inline void Config::validate() const {
  if (graph.stations_file.empty()) {
    if (graph.num_stations < 1)
      throw ConfigError("graph.num_stations must be >= 1");
    if (!(graph.box.lat_min < graph.box.lat_max) || !(graph.box.lon_min < graph.box.lon_max))
      throw ConfigError("graph station box is empty");
  }
  if (!(graph.threshold_km > 0.0))
    throw ConfigError("graph.threshold_km must be positive");
  if (dataset.steps < 1)
    throw ConfigError("dataset.steps must be >= 1");
  try {
    dataset.windows.validate();
    model.validate();
    train.validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const ValidationError &e) {
    throw ConfigError(e.what());
  }
  if (sweep.seeds.empty())
    throw ConfigError("sweep.seeds must list at least one seed");
  if (sweep.jobs < 1)
    throw ConfigError("sweep.jobs must be >= 1");
}

/// Applies one `section.key=value` assignment.
inline void apply_override(Config &c, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  const std::string key = detail::trimmed(assignment.substr(0, eq));
  detail::field(key).set(c, assignment.substr(eq + 1));
}

/// Parses INI text over the defaults. Keys outside the known table are
/// rejected, including keys outside any section.
inline Config parse_config(const std::string &ini, const std::string &origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(ini);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(origin + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  Config c;
  for (const auto &[section, body] : tree) {
    if (body.empty())
      throw ConfigError(origin + ": key '" + section + "' must be inside a section");
    for (const auto &[name, value] : body) {
      const std::string key = section + "." + name;
      try {
        detail::field(key).set(c, value.data());
      } catch (const ConfigError &e) {
        throw ConfigError(origin + ": " + e.what());
      }
    }
  }
  return c;
}

inline Config load_config(const std::filesystem::path &p) {
  return parse_config(io::read_file(p), p.string());
}

/// Every key with its resolved value, grouped by section, in table order.
inline std::string config_snapshot(const Config &c) {
  std::string out, section;
  for (const auto &f : detail::fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      out += (section.empty() ? "" : "\n") + ("[" + s + "]\n");
      section = s;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(c) + "\n";
  }
  return out;
}

/// Stations from the configured file, or the seeded generated layout.
inline std::vector<graph::Station> stations_for(const Config &c) {
  if (!c.graph.stations_file.empty())
    return graph::read_stations(c.graph.stations_file);
  return graph::random_stations(c.graph.num_stations, c.graph.station_seed, c.graph.box);
}

} // namespace pcdc::config
