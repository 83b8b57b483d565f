#include "sclifd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sclifd {

namespace {

// Embedding rows are expected to be unit vectors; allow generous drift so
// finite-difference probes and free-vector gradient descent stay legal.
constexpr double kUnitRowTolerance = 0.25;

Matrix pairwise_dots(const Matrix& emb) {
  const std::size_t n = emb.n_rows;
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = dot(emb.row(i), emb.row(i), emb.n_cols);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dot(emb.row(i), emb.row(j), emb.n_cols);
      s(i, j) = d;
      s(j, i) = d;
    }
  }
  return s;
}

void check_rows_unit(const Matrix& emb, const char* who) {
  for (std::size_t r = 0; r < emb.n_rows; ++r) {
    const double n = l2_norm(emb.row(r), emb.n_cols);
    if (std::abs(n - 1.0) > kUnitRowTolerance)
      throw std::runtime_error(std::string(who) + ": non-unit embedding row " + std::to_string(r) +
                               " (norm " + std::to_string(n) + ")");
  }
}

}  // namespace

LossValue scl_loss(const ContrastiveBatch& batch, double tau) {
  const Matrix& emb = batch.embeddings;
  const std::size_t n = emb.n_rows;
  if (n < 2) throw std::runtime_error("scl_loss: batch needs at least two views");
  if (batch.labels.size() != n) throw std::runtime_error("scl_loss: label count mismatch");
  if (tau <= 0) throw std::runtime_error("scl_loss: tau must be positive");
  check_rows_unit(emb, "scl_loss");

  const Matrix dots = pairwise_dots(emb);

  LossValue out;
  out.grad = Matrix(n, emb.n_cols, 0.0);
  std::vector<double> q(n);  // softmax of anchor i over a != i

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positives = 0;
    for (std::size_t a = 0; a < n; ++a)
      if (a != i && batch.labels[a] == batch.labels[i]) ++positives;
    if (positives == 0)
      throw std::runtime_error("scl_loss: anchor " + std::to_string(i) + " has no positives");

    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) max_logit = std::max(max_logit, dots(i, a) / tau);
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) denom += std::exp(dots(i, a) / tau - max_logit);
    const double lse = max_logit + std::log(denom);

    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      q[a] = std::exp(dots(i, a) / tau - lse);
      if (batch.labels[a] == batch.labels[i])
        out.value += (lse - dots(i, a) / tau) / static_cast<double>(positives);
    }

    // d loss_i / d s_ia = q_ia - [a positive]/|P(i)|, chained through
    // s_ia = z_i . z_a / tau into both rows.
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      double coeff = q[a];
      if (batch.labels[a] == batch.labels[i]) coeff -= 1.0 / static_cast<double>(positives);
      coeff /= tau;
      const double* zi = emb.row(i);
      const double* za = emb.row(a);
      double* gi = out.grad.row(i);
      double* ga = out.grad.row(a);
      for (std::size_t c = 0; c < emb.n_cols; ++c) {
        gi[c] += coeff * za[c];
        ga[c] += coeff * zi[c];
      }
    }
  }
  return out;
}

Matrix kd_similarity(const Matrix& embeddings, double tau) {
  const std::size_t n = embeddings.n_rows;
  if (n < 2) throw std::runtime_error("kd_similarity: batch needs at least two views");
  if (tau <= 0) throw std::runtime_error("kd_similarity: tau must be positive");

  const Matrix dots = pairwise_dots(embeddings);
  Matrix p(n, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) max_logit = std::max(max_logit, dots(i, a) / tau);
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) denom += std::exp(dots(i, a) / tau - max_logit);
    std::size_t col = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      p(i, col++) = std::exp(dots(i, a) / tau - max_logit) / denom;
    }
  }
  return p;
}

LossValue kd_loss(const Matrix& teacher_embeddings, const Matrix& student_embeddings, double tau) {
  if (teacher_embeddings.n_rows != student_embeddings.n_rows ||
      teacher_embeddings.n_cols != student_embeddings.n_cols)
    throw std::runtime_error("kd_loss: teacher/student shape mismatch");
  const std::size_t n = student_embeddings.n_rows;
  if (n < 2) throw std::runtime_error("kd_loss: batch needs at least two views");
  if (tau <= 0) throw std::runtime_error("kd_loss: tau must be positive");

  const Matrix t = kd_similarity(teacher_embeddings, tau);
  const Matrix dots = pairwise_dots(student_embeddings);

  LossValue out;
  out.grad = Matrix(n, student_embeddings.n_cols, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> log_q(n);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) max_logit = std::max(max_logit, dots(i, a) / tau);
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) denom += std::exp(dots(i, a) / tau - max_logit);
    const double lse = max_logit + std::log(denom);
    std::size_t col = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      log_q[a] = dots(i, a) / tau - lse;
      q[a] = std::exp(log_q[a]);
      out.value -= inv_n * t(i, col) * log_q[a];

      // d loss / d s_ia = (q_ia - t_ia) / 2N; teacher rows sum to one.
      const double coeff = inv_n * (q[a] - t(i, col)) / tau;
      const double* zi = student_embeddings.row(i);
      const double* za = student_embeddings.row(a);
      double* gi = out.grad.row(i);
      double* ga = out.grad.row(a);
      for (std::size_t c = 0; c < student_embeddings.n_cols; ++c) {
        gi[c] += coeff * za[c];
        ga[c] += coeff * zi[c];
      }
      ++col;
    }
  }
  return out;
}

LossValue total_loss(const ContrastiveBatch& batch, const Matrix* teacher_embeddings,
                     const LossConfig& cfg) {
  LossValue out = scl_loss(batch, cfg.tau);
  if (teacher_embeddings == nullptr || cfg.lambda == 0.0) return out;
  const LossValue dis = kd_loss(*teacher_embeddings, batch.embeddings, cfg.tau);
  out.value += cfg.lambda * dis.value;
  for (std::size_t i = 0; i < out.grad.data.size(); ++i)
    out.grad.data[i] += cfg.lambda * dis.grad.data[i];
  return out;
}

}  // namespace sclifd
