#include "sclifd/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sclifd {

Prototypes compute_prototypes(const MemoryBuffer& buffer, const EncoderParams& encoder) {
  if (buffer.per_class.empty()) throw std::runtime_error("compute_prototypes: empty buffer");
  Prototypes protos;
  for (const auto& [cls, list] : buffer.per_class) {
    if (list.empty())
      throw std::runtime_error("compute_prototypes: class " + std::to_string(cls) +
                               " has no exemplars");
    Matrix batch(list.size(), list[0].sample.features.size());
    for (std::size_t r = 0; r < list.size(); ++r)
      std::copy(list[r].sample.features.begin(), list[r].sample.features.end(), batch.row(r));
    const ForwardCache fwd = encoder_forward(encoder, batch);

    std::vector<double> mean(fwd.embeddings.n_cols, 0.0);
    for (std::size_t r = 0; r < fwd.embeddings.n_rows; ++r)
      for (std::size_t c = 0; c < fwd.embeddings.n_cols; ++c) mean[c] += fwd.embeddings(r, c);
    for (double& v : mean) v /= static_cast<double>(list.size());

    const double norm = l2_norm(mean.data(), mean.size());
    if (norm == 0.0)
      throw std::runtime_error("compute_prototypes: zero-norm mean for class " +
                               std::to_string(cls));
    std::vector<double> unit(mean.size());
    for (std::size_t c = 0; c < mean.size(); ++c) unit[c] = mean[c] / norm;
    protos.mean[cls] = std::move(mean);
    protos.normalized[cls] = std::move(unit);
  }
  return protos;
}

Classification classify_cosine(const Prototypes& protos, const std::vector<double>& embedding) {
  if (protos.normalized.empty()) throw std::runtime_error("classify_cosine: no prototypes");

  double max_sim = -std::numeric_limits<double>::infinity();
  for (const auto& [cls, mu] : protos.normalized) {
    if (mu.size() != embedding.size())
      throw std::runtime_error("classify_cosine: embedding size mismatch");
    max_sim = std::max(max_sim, dot(mu.data(), embedding.data(), embedding.size()));
  }

  Classification out;
  double denom = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  out.label = protos.normalized.begin()->first;
  for (const auto& [cls, mu] : protos.normalized) {
    const double sim = dot(mu.data(), embedding.data(), embedding.size());
    out.scores[cls] = std::exp(sim - max_sim);
    denom += out.scores[cls];
    if (sim > best) {  // strict: map order makes ties resolve to the lowest id
      best = sim;
      out.label = cls;
    }
  }
  for (auto& [cls, score] : out.scores) score /= denom;
  return out;
}

int classify_nme(const Prototypes& protos, const std::vector<double>& embedding) {
  if (protos.mean.empty()) throw std::runtime_error("classify_nme: no prototypes");
  double best = std::numeric_limits<double>::infinity();
  int label = protos.mean.begin()->first;
  for (const auto& [cls, mu] : protos.mean) {
    if (mu.size() != embedding.size())
      throw std::runtime_error("classify_nme: embedding size mismatch");
    const double d = squared_distance(mu.data(), embedding.data(), embedding.size());
    if (d < best) {  // strict: ties resolve to the lowest id
      best = d;
      label = cls;
    }
  }
  return label;
}

}  // namespace sclifd
