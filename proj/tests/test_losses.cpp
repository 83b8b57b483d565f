#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "sclifd/losses.hpp"
#include "oracles.hpp"

using namespace sclifd;

namespace {

const double kLn3 = std::log(3.0);

ContrastiveBatch identical_batch(std::size_t n, std::size_t e) {
  ContrastiveBatch b;
  b.embeddings = Matrix(n, e, 0.0);
  for (std::size_t r = 0; r < n; ++r) b.embeddings(r, 0) = 1.0;
  b.labels.assign(n, 0);
  b.pairing.resize(n);
  for (std::size_t r = 0; r < n; ++r) b.pairing[r] = r ^ 1u;
  return b;
}

// The two-cluster fixture: (1,0),(1,0),(0,1),(0,1) with labels 0,0,1,1.
ContrastiveBatch axis_batch() {
  ContrastiveBatch b;
  b.embeddings = Matrix(4, 2, 0.0);
  b.embeddings(0, 0) = 1.0;
  b.embeddings(1, 0) = 1.0;
  b.embeddings(2, 1) = 1.0;
  b.embeddings(3, 1) = 1.0;
  b.labels = {0, 0, 1, 1};
  b.pairing = {1, 0, 3, 2};
  return b;
}

}  // namespace

TEST_CASE("scl fixed case: four identical embeddings give 4 ln 3") {
  const LossValue v = scl_loss(identical_batch(4, 3), 1.0);
  CHECK(v.value == doctest::Approx(4.0 * kLn3).epsilon(1e-12));
}

TEST_CASE("scl fixed case: axis-aligned clusters match the brute-force value") {
  const ContrastiveBatch b = axis_batch();
  const LossValue v = scl_loss(b, 1.0);
  const double expect = oracle::scl(b.embeddings, b.labels, 1.0);
  CHECK(std::abs(v.value - expect) <= 1e-12);
  // per-anchor term is ln(1 + 2/e)
  CHECK(v.value == doctest::Approx(4.0 * std::log(1.0 + 2.0 / std::exp(1.0))).epsilon(1e-12));
  CHECK(v.value == doctest::Approx(2.20575).epsilon(1e-4));
}

TEST_CASE("scl equals the nested-loop oracle on random batches") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pairs(1, 5), dim(1, 4);
  const double taus[] = {0.07, 0.5, 1.0};
  for (int trial = 0; trial < 60; ++trial) {
    const ContrastiveBatch b = oracle::random_batch(rng, pairs(rng), dim(rng));
    const double tau = taus[trial % 3];
    const LossValue v = scl_loss(b, tau);
    CHECK(std::abs(v.value - oracle::scl(b.embeddings, b.labels, tau)) <= 1e-9);
  }
}

TEST_CASE("scl gradient matches central finite differences") {
  std::mt19937_64 rng(23);
  const double h = 1e-5;
  for (const double tau : {0.07, 1.0}) {
    ContrastiveBatch b = oracle::random_batch(rng, 4, 3);
    const LossValue v = scl_loss(b, tau);
    double scale = 0.0;
    for (double g : v.grad.data) scale = std::max(scale, std::abs(g));
    const auto eval = [&] { return scl_loss(b, tau).value; };
    double max_err = 0.0;
    for (std::size_t r = 0; r < b.embeddings.n_rows; ++r)
      for (std::size_t c = 0; c < b.embeddings.n_cols; ++c) {
        const double num = oracle::fd_matrix_entry(eval, b.embeddings, r, c, h);
        max_err = std::max(max_err, oracle::rel_err(v.grad(r, c), num, scale));
      }
    CHECK(max_err <= 1e-6);
  }
}

TEST_CASE("scl decreases under gradient descent on a fixed batch") {
  std::mt19937_64 rng(29);
  ContrastiveBatch b = oracle::random_batch(rng, 4, 3, 2);
  double prev = scl_loss(b, 1.0).value;
  for (int step = 0; step < 10; ++step) {
    const LossValue v = scl_loss(b, 1.0);
    for (std::size_t i = 0; i < b.embeddings.data.size(); ++i)
      b.embeddings.data[i] -= 0.01 * v.grad.data[i];
    const double now = scl_loss(b, 1.0).value;
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("scl error paths") {
  SUBCASE("anchor without positives") {
    ContrastiveBatch b = identical_batch(4, 2);
    b.labels = {0, 1, 2, 3};
    CHECK_THROWS_WITH_AS(scl_loss(b, 1.0), doctest::Contains("no positives"),
                         std::runtime_error);
  }
  SUBCASE("clearly non-unit rows") {
    ContrastiveBatch b = identical_batch(4, 2);
    for (double& v : b.embeddings.data) v *= 2.0;
    CHECK_THROWS_WITH_AS(scl_loss(b, 1.0), doctest::Contains("non-unit"), std::runtime_error);
  }
  SUBCASE("single view") {
    ContrastiveBatch b = identical_batch(4, 2);
    b.embeddings = Matrix(1, 2, 1.0);
    b.labels = {0};
    b.pairing = {0};
    CHECK_THROWS_AS(scl_loss(b, 1.0), std::runtime_error);
  }
}

TEST_CASE("scl is invariant under consistent batch permutation") {
  std::mt19937_64 rng(31);
  const ContrastiveBatch b = oracle::random_batch(rng, 5, 3);
  std::vector<std::size_t> perm(b.labels.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  ContrastiveBatch shuffled;
  shuffled.embeddings = Matrix(b.embeddings.n_rows, b.embeddings.n_cols);
  shuffled.labels.resize(b.labels.size());
  shuffled.pairing.resize(b.pairing.size());
  std::vector<std::size_t> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy(b.embeddings.row(perm[i]), b.embeddings.row(perm[i]) + b.embeddings.n_cols,
              shuffled.embeddings.row(i));
    shuffled.labels[i] = b.labels[perm[i]];
    shuffled.pairing[i] = inverse[b.pairing[perm[i]]];
  }
  CHECK(scl_loss(shuffled, 0.5).value == doctest::Approx(scl_loss(b, 0.5).value).epsilon(1e-12));
  CHECK(kd_loss(shuffled.embeddings, shuffled.embeddings, 0.5).value ==
        doctest::Approx(kd_loss(b.embeddings, b.embeddings, 0.5).value).epsilon(1e-12));
}

TEST_CASE("kd_similarity basics") {
  SUBCASE("two views make single-entry rows of 1") {
    std::mt19937_64 rng(37);
    const ContrastiveBatch b = oracle::random_batch(rng, 1, 3);
    const Matrix p = kd_similarity(b.embeddings, 0.5);
    REQUIRE(p.n_rows == 2);
    REQUIRE(p.n_cols == 1);
    CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("identical embeddings make uniform rows") {
    const ContrastiveBatch b = identical_batch(6, 3);
    const Matrix p = kd_similarity(b.embeddings, 1.0);
    for (double v : p.data) CHECK(v == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
  }
  SUBCASE("rows sum to one") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const ContrastiveBatch b = oracle::random_batch(rng, 4, 3);
      const Matrix p = kd_similarity(b.embeddings, 0.07);
      for (std::size_t r = 0; r < p.n_rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < p.n_cols; ++c) sum += p(r, c);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("kd fixed cases") {
  std::mt19937_64 rng(43);
  SUBCASE("2N = 2 gives exactly zero loss") {
    const ContrastiveBatch t = oracle::random_batch(rng, 1, 3);
    const ContrastiveBatch s = oracle::random_batch(rng, 1, 3);
    CHECK(kd_loss(t.embeddings, s.embeddings, 1.0).value == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("uniform teacher equal to student at 2N = 4 gives ln 3") {
    const ContrastiveBatch b = identical_batch(4, 3);
    CHECK(kd_loss(b.embeddings, b.embeddings, 1.0).value ==
          doctest::Approx(kLn3).epsilon(1e-12));
  }
  SUBCASE("axis-cluster teacher against an identical-embedding student gives ln 3") {
    const ContrastiveBatch teacher = axis_batch();
    ContrastiveBatch student = identical_batch(4, 2);
    CHECK(kd_loss(teacher.embeddings, student.embeddings, 1.0).value ==
          doctest::Approx(kLn3).epsilon(1e-12));
  }
}

TEST_CASE("kd equals the nested-loop oracle on random batches") {
  std::mt19937_64 rng(47);
  std::uniform_int_distribution<std::size_t> pairs(1, 5), dim(1, 4);
  const double taus[] = {0.07, 0.5, 1.0};
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = pairs(rng), e = dim(rng);
    const ContrastiveBatch t = oracle::random_batch(rng, n, e);
    const ContrastiveBatch s = oracle::random_batch(rng, n, e);
    const double tau = taus[trial % 3];
    CHECK(std::abs(kd_loss(t.embeddings, s.embeddings, tau).value -
                   oracle::kd(t.embeddings, s.embeddings, tau)) <= 1e-9);
  }
}

TEST_CASE("kd obeys the Gibbs bound") {
  // kd(teacher, student) >= mean teacher-row entropy, equality when the
  // student reproduces the teacher's rows.
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const ContrastiveBatch t = oracle::random_batch(rng, 4, 3);
    const ContrastiveBatch s = oracle::random_batch(rng, 4, 3);
    const Matrix tp = kd_similarity(t.embeddings, 0.5);
    double entropy = 0.0;
    for (double v : tp.data) entropy -= v * std::log(v);
    entropy /= static_cast<double>(tp.n_rows);
    CHECK(kd_loss(t.embeddings, s.embeddings, 0.5).value >= entropy - 1e-9);
    CHECK(kd_loss(t.embeddings, t.embeddings, 0.5).value ==
          doctest::Approx(entropy).epsilon(1e-9));
  }
}

TEST_CASE("kd gradient matches central finite differences") {
  std::mt19937_64 rng(59);
  const double h = 1e-5;
  for (const double tau : {0.07, 1.0}) {
    const ContrastiveBatch t = oracle::random_batch(rng, 4, 3);
    ContrastiveBatch s = oracle::random_batch(rng, 4, 3);
    const LossValue v = kd_loss(t.embeddings, s.embeddings, tau);
    double scale = 0.0;
    for (double g : v.grad.data) scale = std::max(scale, std::abs(g));
    const auto eval = [&] { return kd_loss(t.embeddings, s.embeddings, tau).value; };
    double max_err = 0.0;
    for (std::size_t r = 0; r < s.embeddings.n_rows; ++r)
      for (std::size_t c = 0; c < s.embeddings.n_cols; ++c) {
        const double num = oracle::fd_matrix_entry(eval, s.embeddings, r, c, h);
        max_err = std::max(max_err, oracle::rel_err(v.grad(r, c), num, scale));
      }
    CHECK(max_err <= 1e-6);
  }
}

TEST_CASE("kd rejects mismatched teacher and student") {
  std::mt19937_64 rng(61);
  const ContrastiveBatch t = oracle::random_batch(rng, 3, 3);
  const ContrastiveBatch s = oracle::random_batch(rng, 2, 3);
  CHECK_THROWS_AS(kd_loss(t.embeddings, s.embeddings, 1.0), std::runtime_error);
}

TEST_CASE("total loss composition") {
  std::mt19937_64 rng(67);
  const ContrastiveBatch b = oracle::random_batch(rng, 4, 3);
  const ContrastiveBatch t = oracle::random_batch(rng, 4, 3);
  LossConfig cfg;
  cfg.tau = 1.0;

  SUBCASE("teacher absent reduces to scl exactly") {
    cfg.lambda = 0.5;
    const LossValue v = total_loss(b, nullptr, cfg);
    const LossValue s = scl_loss(b, cfg.tau);
    CHECK(v.value == s.value);
    CHECK(v.grad.data == s.grad.data);
  }
  SUBCASE("lambda zero ignores any teacher") {
    cfg.lambda = 0.0;
    const LossValue v = total_loss(b, &t.embeddings, cfg);
    CHECK(v.value == scl_loss(b, cfg.tau).value);
  }
  SUBCASE("weighted combination of the two fixed cases") {
    // teacher = axis clusters, student = identical embeddings:
    // scl(student) = 4 ln 3 and kd = ln 3, so total = 4 ln 3 + 0.5 ln 3.
    const ContrastiveBatch teacher = axis_batch();
    const ContrastiveBatch student = identical_batch(4, 2);
    cfg.lambda = 0.5;
    const LossValue v = total_loss(student, &teacher.embeddings, cfg);
    CHECK(v.value == doctest::Approx(4.0 * kLn3 + 0.5 * kLn3).epsilon(1e-12));
  }
  SUBCASE("derived pair: scl of axis batch plus half the uniform kd") {
    // scl(axis) ~ 2.20575 and kd(axis-teacher, identical-student) = ln 3;
    // with lambda = 0.5 the combination is ~2.75506. The terms come from
    // different student batches, so combine the component calls directly.
    const double combined =
        scl_loss(axis_batch(), 1.0).value +
        0.5 * kd_loss(axis_batch().embeddings, identical_batch(4, 2).embeddings, 1.0).value;
    CHECK(combined == doctest::Approx(2.75506).epsilon(1e-4));
  }
  SUBCASE("gradient of the combination is the weighted sum") {
    cfg.lambda = 0.5;
    const LossValue v = total_loss(b, &t.embeddings, cfg);
    const LossValue s = scl_loss(b, cfg.tau);
    const LossValue k = kd_loss(t.embeddings, b.embeddings, cfg.tau);
    CHECK(v.value == doctest::Approx(s.value + 0.5 * k.value).epsilon(1e-12));
    for (std::size_t i = 0; i < v.grad.data.size(); ++i)
      CHECK(v.grad.data[i] == doctest::Approx(s.grad.data[i] + 0.5 * k.grad.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("total loss gradient matches finite differences through both terms") {
  std::mt19937_64 rng(71);
  const double h = 1e-5;
  const ContrastiveBatch t = oracle::random_batch(rng, 4, 3);
  ContrastiveBatch b = oracle::random_batch(rng, 4, 3);
  LossConfig cfg;
  cfg.tau = 0.5;
  cfg.lambda = 0.5;
  const LossValue v = total_loss(b, &t.embeddings, cfg);
  double scale = 0.0;
  for (double g : v.grad.data) scale = std::max(scale, std::abs(g));
  const auto eval = [&] { return total_loss(b, &t.embeddings, cfg).value; };
  double max_err = 0.0;
  for (std::size_t r = 0; r < b.embeddings.n_rows; ++r)
    for (std::size_t c = 0; c < b.embeddings.n_cols; ++c) {
      const double num = oracle::fd_matrix_entry(eval, b.embeddings, r, c, h);
      max_err = std::max(max_err, oracle::rel_err(v.grad(r, c), num, scale));
    }
  CHECK(max_err <= 1e-6);
}
