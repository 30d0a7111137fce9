// SPDX-License-Identifier: Apache-2.0
#pragma once

// `pcdc` command-line front end. Every subcommand resolves the config file
// plus overrides, writes the resolved snapshot into the output directory,
// and maps library errors to exit codes (1 validation, 2 numeric, 3 I/O).

#include <pcdc/config/config.hpp>
#include <pcdc/data/series_io.hpp>
#include <pcdc/eval/evaluator.hpp>
#include <pcdc/graph/station_io.hpp>
#include <pcdc/numerics/grad.hpp>
#include <pcdc/train/checkpoint.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace pcdc::cli {

namespace fs = std::filesystem;

inline constexpr const char *kSnapshotName = "config.resolved.ini";

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

struct Inputs {
  graph::SpatialGraph g;
  data::SeriesBundle raw;
};

namespace detail {

inline void make_dir(const fs::path &p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec)
    throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

inline config::Config resolve(const Common &c) {
  config::Config cfg = c.config.empty() ? config::Config{} : config::load_config(c.config);
  for (const auto &o : c.overrides)
    config::apply_override(cfg, o);
  if (c.seed)
    cfg.train.seed = *c.seed;
  cfg.validate();
  make_dir(c.out);
  io::write_file(fs::path(c.out) / kSnapshotName, config::config_snapshot(cfg));
  return cfg;
}

inline Inputs load_inputs(const config::Config &cfg, const fs::path &data_dir) {
  const fs::path stations = cfg.graph.stations_file.empty()
                                ? data_dir / "stations.csv"
                                : fs::path(cfg.graph.stations_file);
  const fs::path series = cfg.dataset.series_file.empty()
                              ? data_dir / "series.csv"
                              : fs::path(cfg.dataset.series_file);
  graph::SpatialGraph g(graph::read_stations(stations), cfg.graph.threshold_km);
  auto raw = data::load_bundle(series, g);
  return {std::move(g), std::move(raw)};
}

inline nlohmann::ordered_json train_report_json(const train::TrainReport &r) {
  nlohmann::ordered_json j;
  j["best_epoch"] = r.best_epoch;
  j["best_val_mae"] = r.best_val_mae;
  j["early_stopped"] = r.early_stopped;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto &e : r.epochs)
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"lr", e.lr},
                           {"grad_norm", e.grad_norm},
                           {"train_l1", e.train.l1},
                           {"train_dic_spatial", e.train.dic_spatial},
                           {"train_dic_temporal", e.train.dic_temporal},
                           {"train_total", e.train.total},
                           {"val_total", e.val.total},
                           {"val_mae", e.val_mae}});
  return j;
}

/// Normalized-scale sample with Gaussian entries for gradient checks.
inline data::WindowedSample synthetic_sample(std::size_t V, std::size_t history,
                                             std::size_t horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto fill = [&](Shape s) {
    Tensor t(std::move(s));
    for (double &v : t.values())
      v = n(rng);
    return t;
  };
  data::WindowedSample s;
  s.x_hist = fill({history, V, data::kNumPollutants});
  s.p_all = fill({history + horizon, V, data::kNumMeteo});
  s.q_all = fill({history + horizon, V, data::kNumEmissions});
  s.x_future = fill({horizon, V, data::kNumPollutants});
  s.origin_index = history - 1;
  return s;
}

} // namespace detail

// --- subcommands -------------------------------------------------------------

inline int gen_data(const Common &c, std::ostream &out) {
  const auto cfg = detail::resolve(c);
  const auto stations = config::stations_for(cfg);
  graph::SpatialGraph g(stations, cfg.graph.threshold_km);
  const auto sim = oracle::simulate(cfg.oracle, g, cfg.dataset.steps);
  double clamped = 0.0;
  for (double m : sim.clamped_mass)
    clamped += m;
  graph::write_stations(fs::path(c.out) / "stations.csv", stations);
  data::write_series(fs::path(c.out) / "series.csv", sim.bundle);
  out << "gen-data: " << g.num_nodes() << " stations, " << g.num_edges() << " edges, "
      << sim.bundle.steps() << " hours, clamped mass " << io::format_double(clamped)
      << "\n";
  return 0;
}

inline int build_graph(const Common &c, const std::string &stations_path,
                       std::ostream &out) {
  const auto cfg = detail::resolve(c);
  const auto stations = stations_path.empty() ? config::stations_for(cfg)
                                              : graph::read_stations(stations_path);
  graph::SpatialGraph g(stations, cfg.graph.threshold_km);
  io::write_file(fs::path(c.out) / "graph.json", graph::graph_summary_json(g));
  graph::write_matrix_csv(fs::path(c.out) / "laplacian.csv", g, g.laplacian());
  out << "build-graph: " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
  return 0;
}

inline int train_cmd(const Common &c, const std::string &data_dir, std::ostream &out) {
  const auto cfg = detail::resolve(c);
  auto in = detail::load_inputs(cfg, data_dir.empty() ? c.out : data_dir);
  const auto d = data::prepare(std::move(in.raw), cfg.dataset.windows);
  out << "train: " << d.train.size() << " train / " << d.val.size() << " val windows\n";
  const auto res = train::train(
      d.train, d.val, in.g, cfg.train, cfg.model, d.stats,
      model::init_params(cfg.model, cfg.train.seed), [&](const train::EpochRecord &e) {
        out << "  epoch " << e.epoch << " lr " << e.lr << " train " << e.train.total
            << " val_mae " << e.val_mae << "\n";
        return true;
      });
  const train::Checkpoint ck{cfg.model,
                             d.stats,
                             res.params,
                             cfg.dataset.windows.history,
                             cfg.dataset.windows.horizon,
                             d.raw.station_ids};
  train::save_checkpoint(fs::path(c.out) / "checkpoint.json", ck);
  io::write_file(fs::path(c.out) / "metrics.csv", train::metrics_csv(res.report));
  io::write_file(fs::path(c.out) / "train_report.json",
                 detail::train_report_json(res.report).dump(2) + "\n");
  out << "train: best epoch " << res.report.best_epoch << ", val MAE "
      << res.report.best_val_mae << ", " << std::fixed << std::setprecision(1)
      << res.report.wall_seconds << " s\n"
      << std::defaultfloat << std::setprecision(6);
  return 0;
}

inline train::Checkpoint load_matching_checkpoint(const std::string &path,
                                                  const Inputs &in) {
  auto ck = train::load_checkpoint(path);
  if (ck.station_ids != in.raw.station_ids)
    throw ValidationError("checkpoint " + path +
                          " was trained on a different station set or order");
  return ck;
}

inline int evaluate_cmd(const Common &c, const std::string &data_dir,
                        const std::string &ckpt_path, std::ostream &out) {
  const auto cfg = detail::resolve(c);
  auto in = detail::load_inputs(cfg, data_dir.empty() ? c.out : data_dir);
  const std::string path =
      ckpt_path.empty() ? (fs::path(c.out) / "checkpoint.json").string() : ckpt_path;
  const auto ck = load_matching_checkpoint(path, in);
  auto windows = cfg.dataset.windows;
  windows.history = ck.history;
  windows.horizon = ck.horizon;
  const auto d = data::prepare(std::move(in.raw), windows, &ck.stats);
  const std::vector<eval::EvalReport> reports{
      eval::evaluate(d.test, eval::model_forecaster(in.g, ck.params, ck.model), d.stats,
                     "pcdcnet"),
      eval::evaluate_persistence(d.test, d.stats)};
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto &r : reports)
    j.push_back(eval::report_json(r));
  io::write_file(fs::path(c.out) / "eval_report.json", j.dump(2) + "\n");
  io::write_file(fs::path(c.out) / "eval_report.csv", eval::summary_csv(reports));
  io::write_file(fs::path(c.out) / "leadtime_curve.csv", eval::leadtime_csv(reports));
  for (const auto &r : reports)
    out << "evaluate: " << r.tag << " mean MAE " << r.overall_mae() << ", lead "
        << r.horizon() << " MAE " << r.lead_mae(r.horizon()) << " over " << r.samples
        << " windows\n";
  return 0;
}

/// Forecasts the latest window of the series: history ends T steps before
/// the last row, and forcing for the horizon comes from the file.
inline int forecast_cmd(const Common &c, const std::string &data_dir,
                        const std::string &ckpt_path, std::ostream &out) {
  const auto cfg = detail::resolve(c);
  auto in = detail::load_inputs(cfg, data_dir.empty() ? c.out : data_dir);
  const std::string path =
      ckpt_path.empty() ? (fs::path(c.out) / "checkpoint.json").string() : ckpt_path;
  const auto ck = load_matching_checkpoint(path, in);
  const std::size_t n = in.raw.steps(), Th = ck.history, T = ck.horizon;
  if (n < Th + T)
    throw ValidationError("series has " + std::to_string(n) + " hours; forecasting needs " +
                          std::to_string(Th + T));
  const auto norm = data::normalize(in.raw, ck.stats);
  const auto w = data::make_windows(norm, Th, T, 1, data::StepRange{n - Th - T, n});
  if (w.empty())
    throw ValidationError("the latest window touches a gap in the series");
  const Tensor pred = data::denormalize_x(
      model::rollout(w.front(), in.g, ck.params, ck.model, model::Mode::Infer)
          .predictions(),
      ck.stats);
  std::string csv = "timestamp,station_id";
  for (auto ch : data::kPollutantChannels)
    csv += "," + std::string(ch);
  csv += "\n";
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t v = 0; v < in.g.num_nodes(); ++v) {
      csv += data::format_iso_hour(in.raw.hours[n - T + t]) + "," + in.raw.station_ids[v];
      for (std::size_t ch = 0; ch < data::kNumPollutants; ++ch)
        csv += "," + io::format_double(pred(t, v, ch));
      csv += "\n";
    }
  io::write_file(fs::path(c.out) / "forecast.csv", csv);
  out << "forecast: " << T * in.g.num_nodes() << " rows from "
      << data::format_iso_hour(in.raw.hours[n - T]) << "\n";
  return 0;
}

inline int sweep_cmd(const Common &c, const std::string &data_dir,
                     std::optional<std::size_t> jobs, std::ostream &out) {
  const auto cfg = detail::resolve(c);
  auto in = detail::load_inputs(cfg, data_dir.empty() ? c.out : data_dir);
  const auto d = data::prepare(std::move(in.raw), cfg.dataset.windows);
  std::vector<eval::ExperimentCell> cells;
  for (const auto &name : cfg.sweep.cells)
    cells.push_back(eval::make_cell(name, cfg.model, cfg.train.lambda));
  const auto results = eval::run_experiment_suite(d, in.g, cells, cfg.sweep.seeds,
                                                  cfg.train, jobs.value_or(cfg.sweep.jobs));
  eval::write_suite_reports(c.out, results);
  int code = 0;
  for (const auto &r : results) {
    if (r.error.empty()) {
      out << "sweep: " << r.cell << " seed " << r.seed << " mean MAE "
          << r.report.overall_mae() << "\n";
    } else {
      out << "sweep: " << r.cell << " seed " << r.seed << " FAILED: " << r.error << "\n";
      if (code == 0)
        code = r.error_code;
    }
  }
  return code;
}

inline int gradcheck_cmd(const Common &c, std::size_t stations, std::size_t history,
                         std::size_t horizon, double tol, std::ostream &out) {
  const auto cfg = detail::resolve(c);
  auto st = config::stations_for(cfg);
  if (stations < 1 || stations > st.size())
    throw ValidationError("gradcheck --stations must be in [1, " +
                          std::to_string(st.size()) + "]");
  st.resize(stations);
  graph::SpatialGraph g(st, cfg.graph.threshold_km);
  const auto s = detail::synthetic_sample(stations, history, horizon, cfg.train.seed);
  const ParamSet p = model::init_params(cfg.model, cfg.train.seed);
  const model::SampleObjective obj{s,
                                   g,
                                   cfg.model,
                                   {cfg.train.lambda, cfg.train.dic_smooth},
                                   model::Mode::Train,
                                   cfg.train.seed};
  const ParamSet analytic = grad(obj, p);
  const ParamSet numeric =
      finite_difference_grad([&](const ParamSet &q) { return obj.value(q); }, p);
  bool ok = true;
  for (const auto &gc : compare_gradients(analytic, numeric)) {
    const bool pass = gc.rel_error < tol;
    ok = ok && pass;
    out << (pass ? "ok   " : "FAIL ") << gc.name << " rel " << gc.rel_error << "\n";
  }
  out << "gradcheck: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

// --- entry point ---------------------------------------------------------------

inline void add_common(CLI::App *sub, Common &c) {
  sub->add_option("-c,--config", c.config, "Config file (INI)")->check(CLI::ExistingFile);
  sub->add_option("-s,--set", c.overrides, "Override, section.key=value (repeatable)");
  sub->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Training seed (overrides train.seed)");
}

inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"PCDC air-quality surrogate: data generation, training and evaluation"};
  app.require_subcommand(1);
  Common c;
  std::string data_dir, ckpt, stations;
  std::optional<std::size_t> jobs;
  std::size_t gc_stations = 4, gc_history = 3, gc_horizon = 3;
  double gc_tol = 1e-4;

  auto *gen = app.add_subcommand("gen-data", "Generate stations and oracle series");
  add_common(gen, c);
  auto *bg = app.add_subcommand("build-graph", "Write graph summary and Laplacian");
  add_common(bg, c);
  bg->add_option("--stations", stations, "Station CSV (default: configured layout)");
  auto *tr = app.add_subcommand("train", "Train and write a checkpoint");
  add_common(tr, c);
  auto *ev = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
  add_common(ev, c);
  auto *fc = app.add_subcommand("forecast", "Forecast the latest window of a series");
  add_common(fc, c);
  auto *sw = app.add_subcommand("sweep", "Run the ablation / sensitivity suite");
  add_common(sw, c);
  sw->add_option("-j,--jobs", jobs, "Concurrent cells (overrides sweep.jobs)");
  for (auto *sub : {tr, ev, fc, sw})
    sub->add_option("-d,--data", data_dir, "Directory with stations.csv and series.csv "
                                           "(default: output directory)");
  for (auto *sub : {ev, fc})
    sub->add_option("--checkpoint", ckpt, "Checkpoint (default: <out>/checkpoint.json)");
  auto *gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  add_common(gc, c);
  gc->add_option("--stations", gc_stations, "Number of stations")->capture_default_str();
  gc->add_option("--history", gc_history, "History length")->capture_default_str();
  gc->add_option("--horizon", gc_horizon, "Horizon length")->capture_default_str();
  gc->add_option("--tol", gc_tol, "Relative error tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed())
      return gen_data(c, out);
    if (bg->parsed())
      return build_graph(c, stations, out);
    if (tr->parsed())
      return train_cmd(c, data_dir, out);
    if (ev->parsed())
      return evaluate_cmd(c, data_dir, ckpt, out);
    if (fc->parsed())
      return forecast_cmd(c, data_dir, ckpt, out);
    if (sw->parsed())
      return sweep_cmd(c, data_dir, jobs, out);
    if (gc->parsed()) {
      if (gc_history < 2 || gc_horizon < 1)
        throw ValidationError("gradcheck needs --history >= 2 and --horizon >= 1");
      return gradcheck_cmd(c, gc_stations, gc_history, gc_horizon, gc_tol, out);
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::bad_alloc &) {
    err << "error: out of memory\n";
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

} // namespace pcdc::cli
