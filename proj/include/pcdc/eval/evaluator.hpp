// SPDX-License-Identifier: Apache-2.0
#pragma once

// Forecast scoring (per pollutant and lead time, in raw units), the
// persistence baseline, and the ablation / sensitivity experiment suite.

#include <pcdc/data/prepare.hpp>
#include <pcdc/eval/metrics.hpp>
#include <pcdc/io/csv.hpp>
#include <pcdc/train/trainer.hpp>

#include <json.hpp>

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace pcdc::eval {

constexpr std::size_t kC = data::kNumPollutants;

/// Repeats the last observation X^0 for every lead time.
inline Tensor persistence_forecast(const data::WindowedSample &s) {
  const std::size_t T = s.horizon(), V = s.num_stations();
  const Tensor last = s.x_hist.slice(s.history() - 1);
  Tensor out({T, V, kC});
  for (std::size_t t = 0; t < T; ++t)
    std::copy(last.data(), last.data() + last.size(), out.data() + t * last.size());
  return out;
}

struct EvalReport {
  std::string tag;
  std::size_t samples = 0;
  std::vector<std::array<double, kC>> mae;  ///< [lead-1][pollutant]
  std::vector<std::array<double, kC>> rmse; ///< [lead-1][pollutant]
  std::array<double, kC> mean_mae{};        ///< over all leads
  std::array<double, kC> mean_rmse{};       ///< over all leads

  [[nodiscard]] std::size_t horizon() const { return mae.size(); }
  /// Mean over pollutants at a 1-based lead.
  [[nodiscard]] double lead_mae(std::size_t lead) const {
    double s = 0.0;
    for (double v : mae.at(lead - 1))
      s += v;
    return s / static_cast<double>(kC);
  }
  [[nodiscard]] double overall_mae() const {
    double s = 0.0;
    for (double v : mean_mae)
      s += v;
    return s / static_cast<double>(kC);
  }
};

using Forecaster = std::function<Tensor(const data::WindowedSample &)>;

/// Scores normalized-space forecasts after mapping predictions and truth
/// back to raw units.
inline EvalReport evaluate(const std::vector<data::WindowedSample> &samples,
                           const Forecaster &forecast, const data::NormStats &stats,
                           std::string tag) {
  if (samples.empty())
    throw ValidationError("evaluation split has no windows");
  const std::size_t T = samples.front().horizon();
  std::vector<std::array<double, kC>> abs_sum(T), sq_sum(T);
  std::size_t count = 0;
  for (const auto &s : samples) {
    const Tensor pred = data::denormalize_x(forecast(s), stats);
    const Tensor truth = data::denormalize_x(s.x_future, stats);
    pred.require_same_shape(truth, "evaluate");
    const std::size_t V = truth.dim(1);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t v = 0; v < V; ++v)
        for (std::size_t c = 0; c < kC; ++c) {
          const double d = pred(t, v, c) - truth(t, v, c);
          abs_sum[t][c] += std::abs(d);
          sq_sum[t][c] += d * d;
        }
    count += V;
  }
  EvalReport r;
  r.tag = std::move(tag);
  r.samples = samples.size();
  r.mae.resize(T);
  r.rmse.resize(T);
  const double n = static_cast<double>(count);
  for (std::size_t c = 0; c < kC; ++c) {
    double a = 0.0, q = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      r.mae[t][c] = abs_sum[t][c] / n;
      r.rmse[t][c] = std::sqrt(sq_sum[t][c] / n);
      a += abs_sum[t][c];
      q += sq_sum[t][c];
    }
    r.mean_mae[c] = a / (n * static_cast<double>(T));
    r.mean_rmse[c] = std::sqrt(q / (n * static_cast<double>(T)));
  }
  return r;
}

inline Forecaster model_forecaster(const graph::SpatialGraph &g, const ParamSet &params,
                                   const model::ModelConfig &cfg) {
  return [&g, &params, cfg](const data::WindowedSample &s) {
    return model::rollout(s, g, params, cfg, model::Mode::Infer).predictions();
  };
}

inline EvalReport evaluate_persistence(const std::vector<data::WindowedSample> &samples,
                                       const data::NormStats &stats) {
  return evaluate(samples, persistence_forecast, stats, "persistence");
}

// --- report serialization ----------------------------------------------------

inline nlohmann::ordered_json report_json(const EvalReport &r) {
  nlohmann::ordered_json j;
  j["model"] = r.tag;
  j["samples"] = r.samples;
  j["horizon"] = r.horizon();
  for (std::size_t c = 0; c < kC; ++c) {
    const std::string name(data::kPollutantChannels[c]);
    std::vector<double> m, q;
    for (std::size_t t = 0; t < r.horizon(); ++t) {
      m.push_back(r.mae[t][c]);
      q.push_back(r.rmse[t][c]);
    }
    j["pollutants"][name] = {{"mean_mae", r.mean_mae[c]},
                             {"mean_rmse", r.mean_rmse[c]},
                             {"mae_by_lead", m},
                             {"rmse_by_lead", q}};
  }
  return j;
}

/// `lead_hour,model,pollutant,mae,rmse` rows for every report.
inline std::string leadtime_csv(const std::vector<EvalReport> &reports) {
  std::string out = "lead_hour,model,pollutant,mae,rmse\n";
  for (const auto &r : reports)
    for (std::size_t t = 0; t < r.horizon(); ++t)
      for (std::size_t c = 0; c < kC; ++c)
        out += std::to_string(t + 1) + ',' + r.tag + ',' +
               std::string(data::kPollutantChannels[c]) + ',' +
               io::format_double(r.mae[t][c]) + ',' + io::format_double(r.rmse[t][c]) +
               '\n';
  return out;
}

/// `model,pollutant,mean_mae,mean_rmse` summary rows.
inline std::string summary_csv(const std::vector<EvalReport> &reports) {
  std::string out = "model,pollutant,mean_mae,mean_rmse\n";
  for (const auto &r : reports)
    for (std::size_t c = 0; c < kC; ++c)
      out += r.tag + ',' + std::string(data::kPollutantChannels[c]) + ',' +
             io::format_double(r.mean_mae[c]) + ',' + io::format_double(r.mean_rmse[c]) +
             '\n';
  return out;
}

// --- experiment suite --------------------------------------------------------

struct ExperimentCell {
  std::string name;
  bool persistence = false;
  model::ModelConfig model;
  double lambda = 1.0;
};

inline const std::vector<std::string> &standard_cell_names() {
  static const std::vector<std::string> names{
      "full",     "no_lid",    "no_std",    "no_tad",    "lambda_0",
      "lambda_1", "lambda_10", "hidden_16", "hidden_32", "hidden_64",
      "emissions_off", "persistence"};
  return names;
}

/// Resolves a named cell relative to the base model and lambda.
inline ExperimentCell make_cell(const std::string &name, const model::ModelConfig &base,
                                double base_lambda) {
  ExperimentCell c{name, false, base, base_lambda};
  if (name == "full") {
  } else if (name == "no_lid") {
    c.model.use_lid = false;
  } else if (name == "no_std") {
    c.model.use_std = false;
  } else if (name == "no_tad") {
    c.model.use_tad = false;
  } else if (name == "emissions_off") {
    c.model.use_emissions = false;
  } else if (name == "persistence") {
    c.persistence = true;
  } else if (name.rfind("lambda_", 0) == 0) {
    c.lambda = io::parse_double(name.substr(7), "lambda cell");
    if (!(c.lambda >= 0.0))
      throw ValidationError("cell '" + name + "': lambda must be nonnegative");
  } else if (name.rfind("hidden_", 0) == 0) {
    const double h = io::parse_double(name.substr(7), "hidden cell");
    if (!(h >= 1.0) || h != std::floor(h))
      throw ValidationError("cell '" + name + "': hidden size must be a positive integer");
    c.model.hidden = static_cast<std::size_t>(h);
  } else {
    throw ValidationError("unknown experiment cell '" + name + "'");
  }
  return c;
}

struct CellResult {
  std::string cell;
  std::uint64_t seed = 0;
  EvalReport report;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_val_mae = 0.0;
  double final_train_dic = 0.0;
  std::string error;  ///< empty on success
  int error_code = 0; ///< process exit code matching `error`
};

/// Trains (or, for persistence, directly scores) every cell for every seed on
/// the shared dataset. A cell that fails records its error and the suite
/// continues. Cells whose effective settings coincide are trained once.
/// Results are ordered by seed, then cell, independent of `jobs`.
inline std::vector<CellResult> run_experiment_suite(const data::PreparedData &d,
                                                    const graph::SpatialGraph &g,
                                                    const std::vector<ExperimentCell> &cells,
                                                    const std::vector<std::uint64_t> &seeds,
                                                    const train::TrainConfig &base,
                                                    std::size_t jobs = 1) {
  struct Job {
    std::size_t cell;
    std::uint64_t seed;
    std::size_t same_as; ///< index of an earlier identical job, or itself
  };
  std::vector<Job> work;
  for (auto seed : seeds)
    for (std::size_t c = 0; c < cells.size(); ++c) {
      Job j{c, seed, work.size()};
      for (std::size_t k = 0; k < work.size(); ++k) {
        const auto &o = cells[work[k].cell];
        if (work[k].seed == seed && o.persistence == cells[c].persistence &&
            (cells[c].persistence ||
             (o.model == cells[c].model && o.lambda == cells[c].lambda))) {
          j.same_as = k;
          break;
        }
      }
      work.push_back(j);
    }

  std::vector<CellResult> out(work.size());
  std::vector<std::size_t> unique;
  for (std::size_t i = 0; i < work.size(); ++i)
    if (work[i].same_as == i)
      unique.push_back(i);

  train::detail::parallel_for(unique.size(), jobs, [&](std::size_t u) {
    const std::size_t i = unique[u];
    const auto &cell = cells[work[i].cell];
    CellResult &r = out[i];
    r.cell = cell.name;
    r.seed = work[i].seed;
    try {
      if (cell.persistence) {
        r.report = evaluate_persistence(d.test, d.stats);
      } else {
        train::TrainConfig tc = base;
        tc.seed = work[i].seed;
        tc.lambda = cell.lambda;
        tc.threads = 1;
        const auto res = train::train(d.train, d.val, g, tc, cell.model, d.stats);
        r.best_epoch = res.report.best_epoch;
        r.epochs_run = res.report.epochs.size();
        r.best_val_mae = res.report.best_val_mae;
        if (!res.report.epochs.empty())
          r.final_train_dic = res.report.epochs.back().train.dic();
        r.report = evaluate(d.test, model_forecaster(g, res.params, cell.model), d.stats,
                            cell.name);
      }
      r.report.tag = cell.name;
    } catch (const Error &e) {
      r.error = e.what();
      r.error_code = e.exit_code();
    } catch (const std::exception &e) {
      r.error = e.what();
      r.error_code = 1;
    }
  });
  for (std::size_t i = 0; i < work.size(); ++i)
    if (work[i].same_as != i) {
      out[i] = out[work[i].same_as];
      out[i].cell = cells[work[i].cell].name;
      out[i].report.tag = out[i].cell;
    }
  return out;
}

/// Reports averaged over seeds, one per cell name, in first-seen order.
inline std::vector<EvalReport> mean_over_seeds(const std::vector<CellResult> &results) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EvalReport *>> by_cell;
  for (const auto &r : results) {
    if (!r.error.empty())
      continue;
    if (!by_cell.count(r.cell))
      order.push_back(r.cell);
    by_cell[r.cell].push_back(&r.report);
  }
  std::vector<EvalReport> out;
  for (const auto &name : order) {
    const auto &rs = by_cell[name];
    EvalReport m = *rs.front();
    const double k = static_cast<double>(rs.size());
    for (std::size_t t = 0; t < m.horizon(); ++t)
      for (std::size_t c = 0; c < kC; ++c) {
        double a = 0.0, q = 0.0;
        for (const auto *r : rs) {
          a += r->mae[t][c];
          q += r->rmse[t][c];
        }
        m.mae[t][c] = a / k;
        m.rmse[t][c] = q / k;
      }
    for (std::size_t c = 0; c < kC; ++c) {
      double a = 0.0, q = 0.0;
      for (const auto *r : rs) {
        a += r->mean_mae[c];
        q += r->mean_rmse[c];
      }
      m.mean_mae[c] = a / k;
      m.mean_rmse[c] = q / k;
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// Writes suite.csv, suite.json and leadtime_curve.csv into `dir`.
inline void write_suite_reports(const std::filesystem::path &dir,
                                const std::vector<CellResult> &results) {
  std::string csv = "cell,seed,pollutant,mean_mae,mean_rmse,last_lead_mae,best_epoch,"
                    "epochs,best_val_mae,error\n";
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto &r : results) {
    nlohmann::ordered_json e{{"cell", r.cell}, {"seed", r.seed}};
    if (r.error.empty()) {
      for (std::size_t c = 0; c < kC; ++c)
        csv += r.cell + ',' + std::to_string(r.seed) + ',' +
               std::string(data::kPollutantChannels[c]) + ',' +
               io::format_double(r.report.mean_mae[c]) + ',' +
               io::format_double(r.report.mean_rmse[c]) + ',' +
               io::format_double(r.report.mae.back()[c]) + ',' +
               std::to_string(r.best_epoch) + ',' + std::to_string(r.epochs_run) + ',' +
               io::format_double(r.best_val_mae) + ",\n";
      e["best_epoch"] = r.best_epoch;
      e["epochs"] = r.epochs_run;
      e["best_val_mae"] = r.best_val_mae;
      e["final_train_dic"] = r.final_train_dic;
      e["report"] = report_json(r.report);
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      csv += r.cell + ',' + std::to_string(r.seed) + ",,,,,,,," + msg + '\n';
      e["error"] = r.error;
    }
    j.push_back(e);
  }
  io::write_file(dir / "suite.csv", csv);
  io::write_file(dir / "suite.json", j.dump(2) + "\n");
  io::write_file(dir / "leadtime_curve.csv", leadtime_csv(mean_over_seeds(results)));
}

} // namespace pcdc::eval
