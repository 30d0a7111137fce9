// SPDX-License-Identifier: Apache-2.0
// Acceptance gates. Prints one PASS/FAIL line per gate and exits nonzero if
// any gate fails. `--gates 1,3` runs a subset.

#include <pcdc/cli/app.hpp>
#include <pcdc/eval/evaluator.hpp>
#include <pcdc/numerics/grad.hpp>
#include <pcdc/oracle/ctm_oracle.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "fixtures.hpp"

using namespace pcdc;
namespace fs = std::filesystem;

namespace {

struct GateResult {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- 1: gradients ------------------------------------------------------------

GateResult gradient_gate() {
  const auto t0 = Clock::now();
  model::ModelConfig m;
  m.hidden = 8;
  double worst = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto g = graph::build_graph(test::scattered(4, seed), 250.0);
    const auto s = test::random_sample(4, 3, 3, seed);
    const ParamSet p = model::init_params(m, seed);
    const model::SampleObjective obj{s, g, m, {1.0, false}, model::Mode::Train, seed};
    const ParamSet fd =
        finite_difference_grad([&](const ParamSet &q) { return obj.value(q); }, p);
    for (const auto &gc : compare_gradients(grad(obj, p), fd))
      if (gc.rel_error > worst) {
        worst = gc.rel_error;
        worst_name = gc.name;
      }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          "max group rel err " + fmt("%.2e", worst) + " (" + worst_name +
              ") over 5 seeds, " + fmt("%.1f", secs) + " s"};
}

// --- 2: conservation ---------------------------------------------------------

GateResult conservation_gate() {
  const auto t0 = Clock::now();
  const auto g = graph::build_graph(test::scattered(10, 2024), 200.0);
  oracle::OracleConfig cfg;
  cfg.deposition = {0.0, 0.0};
  cfg.background = {0.0, 0.0};
  cfg.emission_scale = 0.0;
  cfg.reaction_rate = 0.0;
  oracle::check_stability(cfg, g);
  const auto f = oracle::make_forcing(cfg, g, 1001);
  Tensor s = oracle::initial_state(cfg, g.num_nodes());
  auto mass = [&](std::size_t c) {
    double m = 0.0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
      m += s(v, c);
    return m;
  };
  const double m0 = mass(0), m1 = mass(1);
  double clamped = 0.0;
  for (std::size_t t = 1; t <= 1000; ++t) {
    auto r = oracle::step(s, cfg, g, f, t);
    clamped += r.clamped_mass;
    s = std::move(r.state);
  }
  const double drift = std::max(std::abs(mass(0) - m0) / m0, std::abs(mass(1) - m1) / m1);
  const double secs = seconds_since(t0);
  return {drift < 1e-9 && clamped == 0.0 && secs < 5.0,
          "relative drift " + fmt("%.2e", drift) + " after 1000 steps (advection + " +
              "diffusion), " + fmt("%.2f", secs) + " s"};
}

// --- 3: degeneracy -----------------------------------------------------------

GateResult degeneracy_gate() {
  std::size_t checked = 0, mismatched = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (auto flags : {0, 1, 2, 3}) {
      model::ModelConfig m;
      m.hidden = 4 + 4 * seed;
      m.use_tad = flags != 1;
      m.use_emissions = flags != 2;
      m.use_std = flags != 3;
      const std::size_t V = 2 + seed;
      const auto g = graph::build_graph(test::scattered(V, seed), 200.0);
      const auto s = test::random_sample(V, 2 + seed, 1 + 2 * seed, seed);
      const ParamSet zero = model::init_params(m, seed).zeros_like();
      const Tensor a = model::rollout(s, g, zero, m, model::Mode::Infer).predictions();
      const Tensor b = eval::persistence_forecast(s);
      ++checked;
      if (!(a == b))
        ++mismatched;
    }
  }
  return {mismatched == 0, std::to_string(checked - mismatched) + "/" +
                               std::to_string(checked) +
                               " zero-parameter rollouts bitwise equal to persistence"};
}

// --- 4: Laplacian ------------------------------------------------------------

GateResult laplacian_gate() {
  const auto path = graph::build_graph(test::equator_line(3), 120.0);
  const double h = 1.0 / std::sqrt(2.0);
  const Tensor expect = Tensor::matrix({{1.0, -h, 0.0}, {-h, 1.0, -h}, {0.0, -h, 1.0}});
  const bool path_ok = path.laplacian() == expect;
  double lo = 0.0, hi = 0.0;
  std::size_t graphs = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const std::size_t n = 1 + seed % 20;
    const double threshold = 60.0 + 10.0 * static_cast<double>(seed % 25);
    const auto g = graph::build_graph(test::scattered(n, seed), threshold);
    for (double ev : test::symmetric_eigenvalues(g.laplacian())) {
      lo = std::min(lo, ev);
      hi = std::max(hi, ev);
    }
    ++graphs;
  }
  const bool spec_ok = lo >= -1e-9 && hi <= 2.0 + 1e-9;
  return {path_ok && spec_ok, std::string("path-3 matrix ") +
                                  (path_ok ? "exact" : "MISMATCH") + "; eigenvalues in [" +
                                  fmt("%.3g", lo) + ", " + fmt("%.6f", hi) + "] over " +
                                  std::to_string(graphs) + " graphs of 1..20 nodes"};
}

// --- shared benchmark --------------------------------------------------------

struct Benchmark {
  graph::SpatialGraph g;
  data::PreparedData d;
  model::ModelConfig model;
  train::TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

/// Default 10-station oracle dataset, 2000 hours, T' = T = 24.
Benchmark make_benchmark() {
  const config::Config cfg = config::load_config(PCDC_SOURCE_DIR "/configs/default.ini");
  graph::SpatialGraph g(config::stations_for(cfg), cfg.graph.threshold_km);
  auto windows = cfg.dataset.windows;
  windows.horizon = 24;
  auto d = data::prepare(oracle::generate(cfg.oracle, g, cfg.dataset.steps), windows);
  return {std::move(g), std::move(d), cfg.model, cfg.train};
}

std::vector<eval::CellResult> run_cells(const Benchmark &b,
                                        const std::vector<std::string> &names) {
  std::vector<eval::ExperimentCell> cells;
  for (const auto &n : names)
    cells.push_back(eval::make_cell(n, b.model, b.train.lambda));
  return eval::run_experiment_suite(b.d, b.g, cells, b.seeds, b.train, 1);
}

const eval::CellResult &find(const std::vector<eval::CellResult> &rs, const std::string &cell,
                             std::uint64_t seed) {
  for (const auto &r : rs)
    if (r.cell == cell && r.seed == seed)
      return r;
  throw std::runtime_error("missing cell " + cell);
}

// --- 5: learning -------------------------------------------------------------

GateResult learning_gate(const Benchmark &b, std::vector<eval::CellResult> &full) {
  const auto t0 = Clock::now();
  full = run_cells(b, {"full", "persistence"});
  const double secs = seconds_since(t0);
  int wins = 0;
  std::string detail = "lead-24 MAE model/persistence:";
  for (auto seed : b.seeds) {
    const auto &m = find(full, "full", seed);
    const auto &p = find(full, "persistence", seed);
    if (!m.error.empty())
      return {false, "seed " + std::to_string(seed) + " failed: " + m.error};
    const double ratio = m.report.lead_mae(24) / p.report.lead_mae(24);
    wins += ratio <= 0.8;
    detail += " " + fmt("%.2f", m.report.lead_mae(24)) + "/" +
              fmt("%.2f", p.report.lead_mae(24)) + " (" + fmt("%.2f", ratio) + ")";
  }
  return {wins >= 2 && secs < 600.0, detail + "; " + std::to_string(wins) +
                                         "/3 seeds >= 20% better; " + fmt("%.0f", secs) +
                                         " s for 3 runs"};
}

// --- 6: DIC ------------------------------------------------------------------

GateResult dic_gate(const Benchmark &b) {
  std::vector<double> curve[2];
  const double lambdas[2] = {0.0, 10.0};
  for (int k = 0; k < 2; ++k) {
    train::TrainConfig tc = b.train;
    tc.lambda = lambdas[k];
    tc.seed = b.seeds.front();
    train::train(b.d.train, b.d.val, b.g, tc, b.model, b.d.stats,
                 model::init_params(b.model, tc.seed), [&](const train::EpochRecord &e) {
                   curve[k].push_back(e.train.dic_spatial + e.train.dic_temporal);
                   return true;
                 });
  }
  const double first0 = curve[0].front();
  const double min0 = *std::min_element(curve[0].begin(), curve[0].end());
  const double final0 = curve[0].back(), final10 = curve[1].back();
  const bool decreases = min0 < first0;
  const bool lower = final10 < final0;
  return {decreases && lower, "lambda=0 DIC epoch1 " + fmt("%.4g", first0) + " -> min " +
                                  fmt("%.4g", min0) + ", final " + fmt("%.4g", final0) +
                                  "; lambda=10 final " + fmt("%.4g", final10)};
}

// --- 7: ablations ------------------------------------------------------------

GateResult ablation_gate(const Benchmark &b, const std::vector<eval::CellResult> &full) {
  const auto abl = run_cells(b, {"no_lid", "no_std", "no_tad", "emissions_off"});
  int tad_worst = 0, emis_worse = 0;
  std::string detail = "mean test MAE full/no_lid/no_std/no_tad/emissions_off:";
  for (auto seed : b.seeds) {
    auto mae = [&](const std::vector<eval::CellResult> &rs, const std::string &c) {
      const auto &r = find(rs, c, seed);
      if (!r.error.empty())
        throw std::runtime_error(c + " seed " + std::to_string(seed) + ": " + r.error);
      return r.report.overall_mae();
    };
    const double f = mae(full, "full"), lid = mae(abl, "no_lid"), std_ = mae(abl, "no_std"),
                 tad = mae(abl, "no_tad"), emis = mae(abl, "emissions_off");
    tad_worst += tad > lid && tad > std_;
    emis_worse += emis > f;
    detail += " [" + fmt("%.2f", f) + "/" + fmt("%.2f", lid) + "/" + fmt("%.2f", std_) + "/" +
              fmt("%.2f", tad) + "/" + fmt("%.2f", emis) + "]";
  }
  return {tad_worst >= 2 && emis_worse >= 2,
          detail + "; no_tad worst in " + std::to_string(tad_worst) +
              "/3, emissions_off worse in " + std::to_string(emis_worse) + "/3"};
}

// --- 8: determinism ----------------------------------------------------------

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "pcdc");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0)
    std::cerr << err.str();
  return code;
}

GateResult determinism_gate() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "pcdc_acceptance_determinism";
  fs::remove_all(root);
  const fs::path dirs[2] = {root / "a", root / "b"};
  for (const auto &dir : dirs)
    for (const char *sub : {"gen-data", "train", "evaluate", "forecast"})
      if (invoke({sub, "-c", PCDC_SOURCE_DIR "/configs/default.ini", "-o", dir.string(), "-s",
                  "train.max_epochs=3"}) != 0)
        return {false, std::string(sub) + " failed"};
  std::size_t same = 0, total = 0;
  std::string differing;
  for (const auto &entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename();
    ++total;
    if (fs::exists(dirs[1] / name) &&
        io::read_file(entry.path()) == io::read_file(dirs[1] / name))
      ++same;
    else
      differing += " " + name.string();
  }
  fs::remove_all(root);
  return {same == total && total >= 8,
          std::to_string(same) + "/" + std::to_string(total) +
              " artifacts byte-identical across two pipeline runs" +
              (differing.empty() ? "" : " (differ:" + differing + ")") + ", " +
              fmt("%.0f", seconds_since(t0)) + " s"};
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Acceptance gates"};
  std::vector<int> only;
  app.add_option("--gates", only, "Run only these gate numbers")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const std::set<int> want(only.begin(), only.end());
  auto enabled = [&](int k) { return want.empty() || want.count(k) > 0; };

  int failures = 0;
  auto report = [&](int k, const char *name, const std::function<GateResult()> &fn) {
    if (!enabled(k))
      return;
    const auto t0 = Clock::now();
    GateResult r;
    try {
      r = fn();
    } catch (const std::exception &e) {
      r = {false, std::string("error: ") + e.what()};
    }
    failures += !r.pass;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << k << " " << name << ": " << r.detail
              << " [" << fmt("%.1f", seconds_since(t0)) << " s]" << std::endl;
  };

  report(1, "gradient gate", gradient_gate);
  report(2, "conservation gate", conservation_gate);
  report(3, "degeneracy gate", degeneracy_gate);
  report(4, "laplacian gate", laplacian_gate);

  std::optional<Benchmark> bench;
  std::vector<eval::CellResult> full;
  if (enabled(5) || enabled(6) || enabled(7))
    bench = make_benchmark();
  report(5, "learning gate", [&] { return learning_gate(*bench, full); });
  report(6, "DIC gate", [&] { return dic_gate(*bench); });
  report(7, "ablation gate", [&] {
    if (full.empty())
      full = run_cells(*bench, {"full"});
    return ablation_gate(*bench, full);
  });
  report(8, "determinism gate", determinism_gate);

  std::cout << (failures == 0 ? "all acceptance gates passed"
                              : std::to_string(failures) + " acceptance gate(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
