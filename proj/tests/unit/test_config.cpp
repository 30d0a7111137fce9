// SPDX-License-Identifier: Apache-2.0
#include <pcdc/config/config.hpp>

#include <gtest/gtest.h>

using namespace pcdc;
using namespace pcdc::config;

TEST(Config, EmptyTextGivesDefaults) {
  const Config c = parse_config("", "empty");
  EXPECT_EQ(c.graph.num_stations, 10u);
  EXPECT_EQ(c.dataset.windows.history, 24u);
  EXPECT_EQ(c.dataset.windows.horizon, 72u);
  EXPECT_EQ(c.model.hidden, 32u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, SectionsAreParsed) {
  const Config c = parse_config("[graph]\nnum_stations = 7\nthreshold_km=150.5\n"
                                "[oracle]\ndiurnal = false\ndeposition_o3 = 0.07\n"
                                "[train]\nlr = 0.001\nseed = 42\n"
                                "[sweep]\ncells = full, no_tad\nseeds = 4,5\n",
                                "t");
  EXPECT_EQ(c.graph.num_stations, 7u);
  EXPECT_EQ(c.graph.threshold_km, 150.5);
  EXPECT_FALSE(c.oracle.diurnal);
  EXPECT_EQ(c.oracle.deposition[1], 0.07);
  EXPECT_EQ(c.train.lr, 0.001);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.sweep.cells, (std::vector<std::string>{"full", "no_tad"}));
  EXPECT_EQ(c.sweep.seeds, (std::vector<std::uint64_t>{4, 5}));
}

TEST(Config, UnknownKeyIsRejectedWithItsName) {
  try {
    parse_config("[model]\nhiden = 16\n", "cfg.ini");
    FAIL() << "expected a config error";
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("model.hiden"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("cfg.ini"), std::string::npos);
  }
  EXPECT_THROW(parse_config("[nosuch]\nx = 1\n", "t"), ConfigError);
  EXPECT_THROW(parse_config("x = 1\n", "t"), ConfigError);
}

TEST(Config, BadValuesAreRejected) {
  EXPECT_THROW(parse_config("[model]\nhidden = -3\n", "t"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nhidden = 3.5\n", "t"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nlr = fast\n", "t"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nuse_tad = maybe\n", "t"), ConfigError);
  EXPECT_THROW(parse_config("[train\nlr = 1\n", "t"), ConfigError);
}

TEST(Config, ValidateCatchesInconsistentValues) {
  Config c;
  c.train.lr = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = Config{};
  c.dataset.windows.train_frac = 0.9;
  c.dataset.windows.val_frac = 0.2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = Config{};
  c.model.dropout = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = Config{};
  c.sweep.seeds.clear();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, OverridesApplyAndRejectUnknownKeys) {
  Config c;
  apply_override(c, "model.hidden=64");
  apply_override(c, " train.lambda = 10 ");
  EXPECT_EQ(c.model.hidden, 64u);
  EXPECT_EQ(c.train.lambda, 10.0);
  EXPECT_THROW(apply_override(c, "model.hidden"), ConfigError);
  EXPECT_THROW(apply_override(c, "model.depth=3"), ConfigError);
}

TEST(Config, SnapshotRoundTrips) {
  Config c;
  apply_override(c, "oracle.seed=99");
  apply_override(c, "train.lr=0.00123");
  apply_override(c, "sweep.cells=full,hidden_16");
  apply_override(c, "graph.stations_file=/tmp/s.csv");
  const std::string snap = config_snapshot(c);
  const Config back = parse_config(snap, "snapshot");
  EXPECT_EQ(config_snapshot(back), snap);
  EXPECT_EQ(back.oracle.seed, 99u);
  EXPECT_EQ(back.train, c.train);
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.sweep, c.sweep);
  EXPECT_EQ(back.graph, c.graph);
  EXPECT_EQ(back.dataset, c.dataset);
}

TEST(Config, SnapshotListsEverySection) {
  const std::string snap = config_snapshot(Config{});
  for (const char *s : {"[graph]", "[oracle]", "[dataset]", "[model]", "[train]", "[sweep]"})
    EXPECT_NE(snap.find(s), std::string::npos) << s;
}

TEST(Config, GeneratedStationsAreSeeded) {
  Config c;
  const auto a = stations_for(c);
  const auto b = stations_for(c);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].lat, b[i].lat);
    EXPECT_GE(a[i].lat, c.graph.box.lat_min);
    EXPECT_LE(a[i].lon, c.graph.box.lon_max);
  }
  c.graph.station_seed = 1;
  EXPECT_NE(stations_for(c)[0].lat, a[0].lat);
}

TEST(Config, ShippedDefaultConfigIsValid) {
  const Config c = load_config(PCDC_SOURCE_DIR "/configs/default.ini");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.graph.num_stations, 10u);
  EXPECT_EQ(c.dataset.steps, 2000u);
}
