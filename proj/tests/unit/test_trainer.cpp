// SPDX-License-Identifier: Apache-2.0
#include <pcdc/data/prepare.hpp>
#include <pcdc/oracle/ctm_oracle.hpp>
#include <pcdc/train/checkpoint.hpp>
#include <pcdc/train/trainer.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "fixtures.hpp"

using namespace pcdc;
using train::TrainConfig;
using train::EpochRecord;
using train::Checkpoint;

namespace {

struct Small {
  graph::SpatialGraph g;
  data::PreparedData d;
};

Small small_problem(std::uint64_t seed = 3) {
  graph::SpatialGraph g(test::scattered(5, 11), 150.0);
  oracle::OracleConfig oc;
  oc.seed = seed;
  data::DatasetConfig dc;
  dc.history = 6;
  dc.horizon = 4;
  dc.stride = 6;
  dc.eval_stride = 8;
  return {g, data::prepare(oracle::generate(oc, g, 400), dc)};
}

model::ModelConfig small_model() {
  model::ModelConfig m;
  m.hidden = 8;
  return m;
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.lr = 3e-3;
  c.batch_size = 8;
  c.max_epochs = epochs;
  c.seed = 5;
  return c;
}

std::filesystem::path temp_file(const std::string &name) {
  return std::filesystem::temp_directory_path() / ("pcdc_test_" + name);
}

} // namespace

TEST(Trainer, ZeroEpochsReturnsInitialParameters) {
  const auto p = small_problem();
  const auto mcfg = small_model();
  const ParamSet init = model::init_params(mcfg, 9);
  const auto r = train::train(p.d.train, p.d.val, p.g, quick(0), mcfg, p.d.stats, init);
  EXPECT_TRUE(r.params == init);
  EXPECT_TRUE(r.report.epochs.empty());
  EXPECT_EQ(r.report.best_epoch, 0u);
}

TEST(Trainer, OverfitsSingleSample) {
  const auto p = small_problem();
  const std::vector<data::WindowedSample> one{p.d.train.front()};
  auto mcfg = small_model();
  mcfg.dropout = 0.0;
  TrainConfig c = quick(200);
  c.lambda = 0.0;
  c.lr = 1e-2;
  c.batch_size = 1;
  c.early_stop_patience = 1000;
  c.plateau_patience = 1000;
  const auto r = train::train(one, one, p.g, c, mcfg, p.d.stats);
  ASSERT_EQ(r.report.epochs.size(), 200u);
  const double first = r.report.epochs.front().train.l1;
  const double last = r.report.epochs.back().train.l1;
  EXPECT_LE(last, 0.1 * first) << "first " << first << " last " << last;
}

TEST(Trainer, SameSeedIsBitIdentical) {
  const auto p = small_problem();
  const auto a = train::train(p.d.train, p.d.val, p.g, quick(3), small_model(), p.d.stats);
  const auto b = train::train(p.d.train, p.d.val, p.g, quick(3), small_model(), p.d.stats);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(train::metrics_csv(a.report), train::metrics_csv(b.report));
  const Checkpoint ca{small_model(), p.d.stats, a.params, 6, 4, {}};
  const Checkpoint cb{small_model(), p.d.stats, b.params, 6, 4, {}};
  EXPECT_EQ(train::checkpoint_json(ca), train::checkpoint_json(cb));
}

TEST(Trainer, DifferentSeedsDiffer) {
  const auto p = small_problem();
  TrainConfig c2 = quick(2);
  c2.seed = 6;
  const auto a = train::train(p.d.train, p.d.val, p.g, quick(2), small_model(), p.d.stats);
  const auto b = train::train(p.d.train, p.d.val, p.g, c2, small_model(), p.d.stats);
  EXPECT_FALSE(a.params == b.params);
}

TEST(Trainer, ThreadCountDoesNotChangeResults) {
  const auto p = small_problem();
  TrainConfig c4 = quick(2);
  c4.threads = 4;
  const auto a = train::train(p.d.train, p.d.val, p.g, quick(2), small_model(), p.d.stats);
  const auto b = train::train(p.d.train, p.d.val, p.g, c4, small_model(), p.d.stats);
  EXPECT_TRUE(a.params == b.params);
}

TEST(Trainer, LearningRateTrajectoryIsNonIncreasingAndBounded) {
  const auto p = small_problem();
  TrainConfig c = quick(12);
  c.lr = 5e-2; // large enough to stall validation and trigger decays
  c.min_lr = 1e-2;
  c.plateau_patience = 1;
  c.early_stop_patience = 100;
  const auto r = train::train(p.d.train, p.d.val, p.g, c, small_model(), p.d.stats);
  const auto lr = r.report.lr_trajectory();
  ASSERT_FALSE(lr.empty());
  EXPECT_EQ(lr.front(), c.lr);
  for (std::size_t i = 1; i < lr.size(); ++i)
    EXPECT_LE(lr[i], lr[i - 1]);
  for (double v : lr)
    EXPECT_GE(v, c.min_lr);
}

TEST(Trainer, EarlyStoppingRestoresBestParameters) {
  const auto p = small_problem();
  TrainConfig c = quick(15);
  c.lr = 5e-2;
  c.early_stop_patience = 2;
  const auto r = train::train(p.d.train, p.d.val, p.g, c, small_model(), p.d.stats);
  ASSERT_GT(r.report.best_epoch, 0u);
  const auto &best = r.report.epochs.at(r.report.best_epoch - 1);
  EXPECT_EQ(best.val_mae, r.report.best_val_mae);
  for (const auto &e : r.report.epochs)
    EXPECT_GE(e.val_mae, r.report.best_val_mae);
  const auto again = train::evaluate_split(p.d.val, p.g, r.params, small_model(),
                                    {c.lambda, c.dic_smooth}, p.d.stats);
  EXPECT_NEAR(again.mae, r.report.best_val_mae, 1e-10);
  if (r.report.early_stopped)
    EXPECT_EQ(r.report.epochs.size(), r.report.best_epoch + c.early_stop_patience);
}

TEST(Trainer, EmptySplitsAreRejected) {
  const auto p = small_problem();
  const std::vector<data::WindowedSample> none;
  EXPECT_THROW(train::train(none, p.d.val, p.g, quick(1), small_model(), p.d.stats),
               ValidationError);
  EXPECT_THROW(train::train(p.d.train, none, p.g, quick(1), small_model(), p.d.stats),
               ValidationError);
}

TEST(Trainer, NonFiniteLossAbortsWithEpochAndBatch) {
  const auto p = small_problem();
  auto bad = p.d.train;
  bad[3].p_all(2, 0, 1) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig c = quick(1);
  c.batch_size = 100;
  try {
    train::train(bad, p.d.val, p.g, c, small_model(), p.d.stats);
    FAIL() << "expected a numeric error";
  } catch (const NumericError &e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch 1"), std::string::npos) << e.what();
  }
}

TEST(Trainer, InvalidConfigIsRejected) {
  TrainConfig c;
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = TrainConfig{};
  c.plateau_factor = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = TrainConfig{};
  c.min_lr = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Trainer, CallbackCanStopTraining) {
  const auto p = small_problem();
  std::size_t calls = 0;
  const auto r = train::train(p.d.train, p.d.val, p.g, quick(10), small_model(), p.d.stats,
                       model::init_params(small_model(), 5), [&](const EpochRecord &) {
                         return ++calls < 2;
                       });
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(r.report.epochs.size(), 2u);
}

TEST(Trainer, MetricsCsvHasTwoRowsPerEpoch) {
  const auto p = small_problem();
  const auto r = train::train(p.d.train, p.d.val, p.g, quick(2), small_model(), p.d.stats);
  const std::string csv = train::metrics_csv(r.report);
  EXPECT_EQ(csv.rfind("epoch,split,l1,dic_spatial,dic_temporal,total\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Trainer, MixSeedSeparatesStreams) {
  EXPECT_NE(train::mix_seed(1, 2), train::mix_seed(2, 1));
  EXPECT_NE(train::mix_seed(0, 0), train::mix_seed(0, 1));
  EXPECT_EQ(train::mix_seed(7, 8), train::mix_seed(7, 8));
}

TEST(Trainer, DenormalizedMaeScalesByChannelStd) {
  data::NormStats s;
  s.x = {{0.0, 0.0}, {2.0, 10.0}};
  const Tensor pred({1, 1, 2}, {1.0, 1.0});
  const Tensor truth({1, 1, 2}, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(train::denormalized_mae(pred, truth, s), 6.0);
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto p = small_problem();
  const auto r = train::train(p.d.train, p.d.val, p.g, quick(1), small_model(), p.d.stats);
  Checkpoint c{small_model(), p.d.stats, r.params, 6, 4, p.d.raw.station_ids};
  const auto path = temp_file("ckpt.json");
  train::save_checkpoint(path, c);
  const Checkpoint back = train::load_checkpoint(path);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(train::checkpoint_json(back), train::checkpoint_json(c));
  std::filesystem::remove(path);
}

TEST(Checkpoint, LoadedParametersReproduceForecasts) {
  const auto p = small_problem();
  const auto r = train::train(p.d.train, p.d.val, p.g, quick(1), small_model(), p.d.stats);
  const Checkpoint c{small_model(), p.d.stats, r.params, 6, 4, {}};
  const Checkpoint back = train::parse_checkpoint(train::checkpoint_json(c), "mem");
  const auto &s = p.d.test.front();
  const Tensor a =
      model::rollout(s, p.g, r.params, small_model(), model::Mode::Infer).predictions();
  const Tensor b =
      model::rollout(s, p.g, back.params, back.model, model::Mode::Infer).predictions();
  EXPECT_EQ(a.values(), b.values());
}

TEST(Checkpoint, TruncatedFileIsAParseError) {
  const Checkpoint c{small_model(), {}, model::init_params(small_model(), 1), 6, 4, {}};
  std::string text = train::checkpoint_json(c);
  text.resize(text.size() / 2);
  EXPECT_THROW(train::parse_checkpoint(text, "half"), ParseError);
}

TEST(Checkpoint, VersionMismatchIsRejected) {
  Checkpoint c{small_model(), {}, model::init_params(small_model(), 1), 6, 4, {}};
  c.stats.x = {{0, 0}, {1, 1}};
  c.stats.p = {std::vector<double>(8, 0.0), std::vector<double>(8, 1.0)};
  c.stats.q = {std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)};
  std::string text = train::checkpoint_json(c);
  const auto pos = text.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 12, "\"version\": 99");
  try {
    train::parse_checkpoint(text, "old");
    FAIL() << "expected a version error";
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("version 99"), std::string::npos);
  }
}

TEST(Checkpoint, MissingTensorIsRejected) {
  const Checkpoint c{small_model(), {}, model::init_params(small_model(), 1), 6, 4, {}};
  auto j = nlohmann::ordered_json::parse(train::checkpoint_json(c));
  j["params"].erase(0);
  EXPECT_THROW(train::parse_checkpoint(j.dump(), "short"), Error);
}

TEST(Checkpoint, MissingFileIsAnIoError) {
  EXPECT_THROW(train::load_checkpoint("/nonexistent/ckpt.json"), IoError);
}
