// SPDX-License-Identifier: Apache-2.0
#pragma once

// Versioned JSON checkpoint: model config, normalization statistics, window
// lengths, station order and every parameter tensor. Doubles are written in
// shortest round-trip form, so save/load is bit-exact.

#include <pcdc/data/normalize.hpp>
#include <pcdc/io/csv.hpp>
#include <pcdc/model/pcdcnet.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pcdc::train {

inline constexpr const char *kCheckpointFormat = "pcdc-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  model::ModelConfig model;
  data::NormStats stats;
  ParamSet params;
  std::size_t history = 24;
  std::size_t horizon = 72;
  std::vector<std::string> station_ids;

  friend bool operator==(const Checkpoint &a, const Checkpoint &b) {
    return a.model == b.model && a.stats == b.stats && a.params == b.params &&
           a.history == b.history && a.horizon == b.horizon &&
           a.station_ids == b.station_ids;
  }
};

namespace detail {

using Json = nlohmann::ordered_json;

inline Json stats_json(const data::ChannelStats &s) {
  return Json{{"mean", s.mean}, {"std", s.std}};
}

inline data::ChannelStats stats_from(const Json &j, std::size_t channels) {
  data::ChannelStats s{j.at("mean").get<std::vector<double>>(),
                       j.at("std").get<std::vector<double>>()};
  if (s.mean.size() != channels || s.std.size() != channels)
    throw ParseError("checkpoint normalization block has the wrong channel count");
  return s;
}

} // namespace detail

inline std::string checkpoint_json(const Checkpoint &c) {
  using detail::Json;
  Json params = Json::array();
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    const auto &[name, t] = c.params.entry(i);
    params.push_back(Json{{"name", name}, {"shape", t.shape()}, {"values", t.values()}});
  }
  const auto &m = c.model;
  Json j{{"format", kCheckpointFormat},
         {"version", kCheckpointVersion},
         {"model",
          {{"hidden", m.hidden},
           {"mlp_depth", m.mlp_depth},
           {"dropout", m.dropout},
           {"rmsnorm_eps", m.rmsnorm_eps},
           {"use_lid", m.use_lid},
           {"use_std", m.use_std},
           {"use_tad", m.use_tad},
           {"use_emissions", m.use_emissions}}},
         {"history", c.history},
         {"horizon", c.horizon},
         {"stations", c.station_ids},
         {"normalization",
          {{"x", detail::stats_json(c.stats.x)},
           {"p", detail::stats_json(c.stats.p)},
           {"q", detail::stats_json(c.stats.q)}}},
         {"params", params}};
  return j.dump(1) + "\n";
}

inline Checkpoint parse_checkpoint(const std::string &text, const std::string &origin) {
  using detail::Json;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw ParseError(origin + ": not a valid checkpoint (" + e.what() + ")");
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw ParseError(origin + ": not a checkpoint file");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ValidationError(origin + ": checkpoint version " + std::to_string(version) +
                            " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    Checkpoint c;
    const auto &m = j.at("model");
    c.model.hidden = m.at("hidden").get<std::size_t>();
    c.model.mlp_depth = m.at("mlp_depth").get<std::size_t>();
    c.model.dropout = m.at("dropout").get<double>();
    c.model.rmsnorm_eps = m.at("rmsnorm_eps").get<double>();
    c.model.use_lid = m.at("use_lid").get<bool>();
    c.model.use_std = m.at("use_std").get<bool>();
    c.model.use_tad = m.at("use_tad").get<bool>();
    c.model.use_emissions = m.at("use_emissions").get<bool>();
    c.model.validate();
    c.history = j.at("history").get<std::size_t>();
    c.horizon = j.at("horizon").get<std::size_t>();
    c.station_ids = j.at("stations").get<std::vector<std::string>>();
    const auto &n = j.at("normalization");
    c.stats.x = detail::stats_from(n.at("x"), data::kNumPollutants);
    c.stats.p = detail::stats_from(n.at("p"), data::kNumMeteo);
    c.stats.q = detail::stats_from(n.at("q"), data::kNumEmissions);
    for (const auto &p : j.at("params")) {
      Shape shape = p.at("shape").get<Shape>();
      c.params.add(p.at("name").get<std::string>(),
                   Tensor(std::move(shape), p.at("values").get<std::vector<double>>()));
    }
    // Catches missing or misshapen tensors early.
    c.params.require_compatible(model::init_params(c.model, 0));
    return c;
  } catch (const Json::exception &e) {
    throw ParseError(origin + ": malformed checkpoint (" + e.what() + ")");
  }
}

inline void save_checkpoint(const std::filesystem::path &p, const Checkpoint &c) {
  io::write_file(p, checkpoint_json(c));
}

inline Checkpoint load_checkpoint(const std::filesystem::path &p) {
  return parse_checkpoint(io::read_file(p), p.string());
}

} // namespace pcdc::train
