#pragma once

#include <cstddef>
#include <vector>

#include "sclifd/matrix.hpp"

namespace sclifd {

struct LossConfig {
  double tau = 0.07;    // shared temperature for SCL and KD
  double lambda = 0.5;  // distillation weight
};

/// A 2N-view batch: row i and row pairing[i] are the two views of one
/// source sample and carry the same label.
struct ContrastiveBatch {
  Matrix embeddings;  // 2N x e, approximately unit rows
  std::vector<int> labels;
  std::vector<std::size_t> pairing;
};

struct LossValue {
  double value = 0.0;
  Matrix grad;  // same shape as the (student) embeddings
};

/// Supervised contrastive loss over all anchors, positives = all same-label
/// batch members. Gradient treats embedding rows as free vectors; the
/// normalization Jacobian is applied downstream by encoder_backward.
LossValue scl_loss(const ContrastiveBatch& batch, double tau);

/// Row-stochastic pairwise similarity softmax; row i holds the softmax over
/// all a != i in ascending index order, so the output is 2N x (2N-1).
Matrix kd_similarity(const Matrix& embeddings, double tau);

/// Cross-entropy between teacher and student similarity rows, averaged over
/// anchors. Teacher is constant; the gradient flows through the student only.
LossValue kd_loss(const Matrix& teacher_embeddings, const Matrix& student_embeddings, double tau);

/// scl + lambda * kd. Pass teacher_embeddings = nullptr in the first
/// session; the distillation term is then skipped exactly.
LossValue total_loss(const ContrastiveBatch& batch, const Matrix* teacher_embeddings,
                     const LossConfig& cfg);

}  // namespace sclifd
