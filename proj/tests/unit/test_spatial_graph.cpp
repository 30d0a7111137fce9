// SPDX-License-Identifier: Apache-2.0
#include <pcdc/graph/spatial_graph.hpp>
#include <pcdc/graph/station_io.hpp>

#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"

using namespace pcdc;
using namespace pcdc::graph;

TEST(Haversine, CoincidentIsZero) {
  EXPECT_EQ(haversine_km({"a", 0, 0}, {"b", 0, 0}), 0.0);
}

TEST(Haversine, OneDegreeOnEquator) {
  EXPECT_NEAR(haversine_km({"a", 0, 0}, {"b", 0, 1}), 111.19, 0.01);
}

TEST(Haversine, TwoDegreesExceedsDefaultThreshold) {
  const double d = haversine_km({"a", 0, 0}, {"b", 0, 2});
  EXPECT_NEAR(d, 222.39, 0.01);
  EXPECT_GT(d, kDefaultThresholdKm);
}

TEST(Haversine, Symmetric) {
  const Station a{"a", 39.9, 116.4}, b{"b", 31.2, 121.5};
  EXPECT_EQ(haversine_km(a, b), haversine_km(b, a));
}

TEST(Haversine, OutOfRangeCoordinatesRejected) {
  EXPECT_THROW(haversine_km({"a", 91, 0}, {"b", 0, 0}), ValidationError);
  EXPECT_THROW(haversine_km({"a", 0, 0}, {"b", 0, -181}), ValidationError);
}

TEST(BuildGraph, SingleStationIsIsolated) {
  const auto g = build_graph({{"a", 10, 10}});
  EXPECT_EQ(g.adjacency(), Tensor::matrix({{0}}));
  EXPECT_EQ(g.laplacian(), Tensor::matrix({{1}}));
}

TEST(BuildGraph, PathOfThree) {
  const auto g = build_graph(test::equator_line(3), 200.0);
  const double r = 1.0 / std::sqrt(2.0);
  const Tensor expect = Tensor::matrix({{1, -r, 0}, {-r, 1, -r}, {0, -r, 1}});
  EXPECT_LT(max_abs_diff(g.laplacian(), expect), 1e-15);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.degree(), (std::vector<double>{1, 2, 1}));
}

TEST(BuildGraph, TinyThresholdGivesEdgelessGraph) {
  const auto g = build_graph(test::equator_line(4), 0.001);
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_EQ(g.laplacian(), Tensor::identity(4));
}

TEST(BuildGraph, CoincidentStationsAreNotConnected) {
  const auto g = build_graph({{"a", 0, 0}, {"b", 0, 0}});
  EXPECT_EQ(g.num_edges(), 0u);
}

TEST(BuildGraph, DuplicateIdRejected) {
  EXPECT_THROW(build_graph({{"a", 0, 0}, {"a", 0, 1}}), ValidationError);
}

TEST(BuildGraph, NonPositiveThresholdRejected) {
  EXPECT_THROW(build_graph(test::equator_line(2), 0.0), ValidationError);
  EXPECT_THROW(build_graph(test::equator_line(2), -5.0), ValidationError);
}

TEST(BuildGraph, EmptyStationListRejected) {
  EXPECT_THROW(build_graph({}), ValidationError);
}

TEST(ApplyLaplacian, EdgelessGraphIsIdentity) {
  const auto g = build_graph(test::equator_line(3), 0.001);
  std::mt19937_64 rng(1);
  const Tensor h = test::random_tensor({3, 4}, rng);
  EXPECT_EQ(apply_laplacian(g, h), h);
}

TEST(ApplyLaplacian, ConstantOnRegularGraphVanishes) {
  const auto g = build_graph(test::triangle(), 200.0);
  ASSERT_EQ(g.num_edges(), 3u);
  const Tensor out = apply_laplacian(g, Tensor({3, 1}, 1.0));
  for (double v : out.span())
    EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(ApplyLaplacian, PathOfThreeUnitVector) {
  const auto g = build_graph(test::equator_line(3), 200.0);
  const Tensor out = apply_laplacian(g, Tensor::matrix({{1}, {0}, {0}}));
  EXPECT_NEAR(out[0], 1.0, 1e-15);
  EXPECT_NEAR(out[1], -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(out[2], 0.0, 1e-15);
}

TEST(ApplyLaplacian, RowMismatchRejected) {
  const auto g = build_graph(test::equator_line(3), 200.0);
  EXPECT_THROW(apply_laplacian(g, Tensor({2, 4})), DimensionError);
}

TEST(GraphInvariants, AdjacencySymmetricZeroDiagonalAndSpectrumBounded) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = build_graph(test::scattered(12 + seed % 8, seed), 150.0);
    const Tensor &a = g.adjacency();
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      EXPECT_EQ(a(i, i), 0.0);
      for (std::size_t j = 0; j < g.num_nodes(); ++j) {
        EXPECT_EQ(a(i, j), a(j, i));
        EXPECT_EQ(g.laplacian()(i, j), g.laplacian()(j, i));
      }
    }
    for (double ev : test::symmetric_eigenvalues(g.laplacian())) {
      EXPECT_GE(ev, -1e-9);
      EXPECT_LE(ev, 2.0 + 1e-9);
    }
  }
}

TEST(GraphInvariants, PermuteAndPermuteBackGivesSameLaplacian) {
  const auto st = test::scattered(9, 3);
  const auto g = build_graph(st, 200.0);
  const std::vector<std::size_t> perm{4, 7, 0, 2, 8, 1, 6, 3, 5};
  std::vector<Station> ps;
  for (auto i : perm)
    ps.push_back(st[i]);
  const auto pg = build_graph(ps, 200.0);
  Tensor back({9, 9});
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j)
      back(perm[i], perm[j]) = pg.laplacian()(i, j);
  EXPECT_EQ(back, g.laplacian());
}

TEST(StationIo, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pcdc_station_io";
  std::filesystem::create_directories(dir);
  const auto st = test::scattered(5, 2);
  write_stations(dir / "s.csv", st);
  const auto back = read_stations(dir / "s.csv");
  ASSERT_EQ(back.size(), st.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    EXPECT_EQ(back[i].id, st[i].id);
    EXPECT_EQ(back[i].lat, st[i].lat);
    EXPECT_EQ(back[i].lon, st[i].lon);
  }
}

TEST(StationIo, BadHeaderAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "pcdc_station_io";
  std::filesystem::create_directories(dir);
  io::write_file(dir / "bad.csv", "name,lat,lon\na,0,0\n");
  EXPECT_THROW(read_stations(dir / "bad.csv"), ValidationError);
  EXPECT_THROW(read_stations(dir / "does_not_exist.csv"), IoError);
}

TEST(StationIo, SummaryCountsEdges) {
  const auto g = build_graph(test::equator_line(3), 200.0);
  const std::string js = graph_summary_json(g);
  EXPECT_NE(js.find("\"num_edges\": 2"), std::string::npos) << js;
  EXPECT_NE(js.find("\"num_nodes\": 3"), std::string::npos) << js;
}
