#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "sclifd/dataio.hpp"
#include "oracles.hpp"

using namespace sclifd;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

}  // namespace

TEST_CASE("load_csv parses a small file") {
  const std::string path =
      write_temp("sclifd_basic.csv", "f0,f1,label\n0,1,0\n2,3,0\n4,5,1\n");
  const Dataset d = load_csv(path);
  CHECK(d.dim == 2);
  CHECK(d.samples.size() == 3);
  CHECK(d.classes == std::set<int>{0, 1});
  CHECK(d.samples[0].features == std::vector<double>{0.0, 1.0});
  CHECK(d.samples[2].features == std::vector<double>{4.0, 5.0});
  CHECK(d.samples[2].label == 1);
}

TEST_CASE("load_csv keeps column order around the label column") {
  const std::string path =
      write_temp("sclifd_order.csv", "a,label,b\n10,1,20\n");
  const Dataset d = load_csv(path);
  CHECK(d.dim == 2);
  CHECK(d.samples[0].features == std::vector<double>{10.0, 20.0});
}

TEST_CASE("load_csv error paths") {
  SUBCASE("header only") {
    const std::string path = write_temp("sclifd_empty.csv", "f0,label\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("no samples"), std::runtime_error);
  }
  SUBCASE("missing label column") {
    const std::string path = write_temp("sclifd_nolabel.csv", "f0,f1\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("missing 'label'"),
                         std::runtime_error);
  }
  SUBCASE("non-numeric cell names the row") {
    const std::string path = write_temp("sclifd_bad.csv", "f0,label\n1,0\nx,1\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 2"), std::runtime_error);
  }
  SUBCASE("NaN cell names the row") {
    const std::string path = write_temp("sclifd_nan.csv", "f0,label\n1,0\nNaN,1\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 2"), std::runtime_error);
  }
  SUBCASE("inconsistent row width names the row") {
    const std::string path = write_temp("sclifd_width.csv", "f0,f1,label\n1,2,0\n1,0\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 2"), std::runtime_error);
  }
  SUBCASE("missing file names the path") {
    CHECK_THROWS_WITH_AS(load_csv("/nonexistent/x.csv"), doctest::Contains("/nonexistent/x.csv"),
                         std::runtime_error);
  }
}

TEST_CASE("csv round-trip is lossless") {
  BlobConfig cfg;
  cfg.num_classes = 3;
  cfg.dim = 4;
  cfg.mean_separation = 2.0;
  cfg.samples_per_class = 10;
  cfg.seed = 11;
  const Dataset d = synth_blobs(cfg);
  const fs::path p = fs::temp_directory_path() / "sclifd_roundtrip.csv";
  write_csv(d, p.string());
  const Dataset back = load_csv(p.string());
  REQUIRE(back.samples.size() == d.samples.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    CHECK(back.samples[i].label == d.samples[i].label);
    CHECK(back.samples[i].features == d.samples[i].features);
  }
}

TEST_CASE("synth_blobs is deterministic per seed") {
  BlobConfig cfg;
  cfg.num_classes = 4;
  cfg.dim = 6;
  cfg.mean_separation = 3.0;
  cfg.samples_per_class = 20;
  cfg.seed = 42;
  const Dataset a = synth_blobs(cfg);
  const Dataset b = synth_blobs(cfg);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(a.samples[i].features == b.samples[i].features);
}

TEST_CASE("well-separated blobs are 1-NN perfect on held-out samples") {
  BlobConfig cfg;
  cfg.num_classes = 2;
  cfg.dim = 3;
  cfg.mean_separation = 100.0;
  cfg.within_std = 1.0;
  cfg.samples_per_class = 60;
  cfg.seed = 7;
  const Dataset d = synth_blobs(cfg);

  std::vector<std::vector<double>> train_x;
  std::vector<int> train_y;
  std::vector<std::size_t> held;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    // first 50 of each class train, last 10 held out
    if (i % 60 < 50) {
      train_x.push_back(d.samples[i].features);
      train_y.push_back(d.samples[i].label);
    } else {
      held.push_back(i);
    }
  }
  for (std::size_t i : held)
    CHECK(oracle::one_nn(train_x, train_y, d.samples[i].features) == d.samples[i].label);
}

TEST_CASE("blob class means respect the separation floor") {
  BlobConfig cfg;
  cfg.num_classes = 5;
  cfg.dim = 4;
  cfg.mean_separation = 5.0;
  cfg.within_std = 1.0;
  cfg.samples_per_class = 400;
  cfg.seed = 3;
  const Dataset d = synth_blobs(cfg);

  std::vector<std::vector<double>> means(5, std::vector<double>(cfg.dim, 0.0));
  for (const Sample& s : d.samples)
    for (std::size_t f = 0; f < cfg.dim; ++f)
      means[static_cast<std::size_t>(s.label)][f] += s.features[f] / 400.0;
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b) {
      const double dist = std::sqrt(squared_distance(means[static_cast<std::size_t>(a)].data(),
                                                     means[static_cast<std::size_t>(b)].data(),
                                                     cfg.dim));
      // empirical means wander by ~std/sqrt(n); allow 10% slack
      CHECK(dist >= 0.9 * cfg.mean_separation * cfg.within_std);
    }
}

TEST_CASE("synth_blobs reports infeasible mean placement") {
  // 200 classes pairwise >= 5 apart cannot fit on a line at the bounded
  // placement spread.
  BlobConfig cfg;
  cfg.num_classes = 200;
  cfg.dim = 1;
  cfg.mean_separation = 5.0;
  cfg.samples_per_class = 1;
  cfg.seed = 0;
  CHECK_THROWS_WITH_AS(synth_blobs(cfg), doctest::Contains("infeasible"), std::runtime_error);
}

TEST_CASE("make_schedule reproduces the ten-class two-shot layout") {
  BlobConfig cfg;
  cfg.num_classes = 10;
  cfg.dim = 2;
  cfg.mean_separation = 3.0;
  cfg.samples_per_class = 1300;
  cfg.seed = 1;
  const Dataset d = synth_blobs(cfg);

  std::vector<int> order{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const SessionSchedule s = make_schedule(d, order, 2, 500, 48, 800, 5);
  REQUIRE(s.sessions.size() == 5);
  for (const auto& session : s.sessions) CHECK(session.size() == 2);
  CHECK(s.train_indices.at(0).size() == 500);
  CHECK(s.train_indices.at(3).size() == 48);
  CHECK(s.test_indices.at(3).size() == 800);

  // train/test disjoint per class, all indices carry the right label
  for (int c : order) {
    std::set<std::size_t> train(s.train_indices.at(c).begin(), s.train_indices.at(c).end());
    for (std::size_t r : s.test_indices.at(c)) CHECK(!train.count(r));
    for (std::size_t r : s.train_indices.at(c)) CHECK(d.samples[r].label == c);
  }

  // sessions partition the class order
  std::set<int> all;
  for (const auto& session : s.sessions)
    for (int c : session) CHECK(all.insert(c).second);
  CHECK(all == std::set<int>(order.begin(), order.end()));
}

TEST_CASE("make_schedule one-shot and single-session modes") {
  // the five-class one-shot layout with its published training sizes
  BlobConfig cfg;
  cfg.num_classes = 5;
  cfg.dim = 2;
  cfg.mean_separation = 3.0;
  cfg.samples_per_class = 1300;
  cfg.seed = 2;
  const Dataset d = synth_blobs(cfg);
  std::vector<int> order{0, 1, 2, 3, 4};

  const SessionSchedule one = make_schedule(d, order, 1, 500, 30, 800, 9);
  CHECK(one.sessions.size() == 5);
  for (const auto& session : one.sessions) CHECK(session.size() == 1);
  CHECK(one.train_indices.at(0).size() == 500);
  CHECK(one.train_indices.at(4).size() == 30);
  CHECK(one.test_indices.at(2).size() == 800);

  const SessionSchedule joint = make_schedule(d, order, 5, 500, 30, 800, 9);
  CHECK(joint.sessions.size() == 1);
  CHECK(joint.sessions[0] == order);
}

TEST_CASE("make_schedule rejects impossible requests") {
  BlobConfig cfg;
  cfg.num_classes = 3;
  cfg.dim = 2;
  cfg.mean_separation = 3.0;
  cfg.samples_per_class = 30;
  cfg.seed = 2;
  const Dataset d = synth_blobs(cfg);

  CHECK_THROWS_WITH_AS(make_schedule(d, {0, 1, 2}, 1, 25, 25, 10, 0),
                       doctest::Contains("insufficient samples"), std::runtime_error);
  CHECK_THROWS_AS(make_schedule(d, {0, 1, 7}, 1, 5, 5, 5, 0), std::runtime_error);
  CHECK_THROWS_AS(make_schedule(d, {0, 1, 1}, 1, 5, 5, 5, 0), std::runtime_error);
}

TEST_CASE("make_schedule is deterministic per seed") {
  BlobConfig cfg;
  cfg.num_classes = 4;
  cfg.dim = 2;
  cfg.mean_separation = 3.0;
  cfg.samples_per_class = 50;
  cfg.seed = 2;
  const Dataset d = synth_blobs(cfg);
  const std::vector<int> order{0, 1, 2, 3};
  const SessionSchedule a = make_schedule(d, order, 2, 20, 10, 15, 77);
  const SessionSchedule b = make_schedule(d, order, 2, 20, 10, 15, 77);
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.test_indices == b.test_indices);
}

TEST_CASE("scaler standardizes fitted rows") {
  Dataset d;
  d.dim = 2;
  d.samples = {{{1.0, 10.0}, 0}, {{3.0, 30.0}, 0}, {{5.0, -7.0}, 1}};
  const FeatureScaler sc = fit_scaler(d, {0, 1});
  CHECK(sc.mean[0] == doctest::Approx(2.0));
  CHECK(sc.mean[1] == doctest::Approx(20.0));
  apply_scaler(d, sc);
  CHECK(d.samples[0].features[0] == doctest::Approx(-1.0));
  CHECK(d.samples[1].features[0] == doctest::Approx(1.0));
}
