#pragma once

#include <map>
#include <vector>

#include "sclifd/memory.hpp"
#include "sclifd/nn.hpp"

namespace sclifd {

/// Per-class mean of exemplar embeddings (mean) and its unit form
/// (normalized).
struct Prototypes {
  std::map<int, std::vector<double>> mean;
  std::map<int, std::vector<double>> normalized;
};

Prototypes compute_prototypes(const MemoryBuffer& buffer, const EncoderParams& encoder);

struct Classification {
  int label = 0;
  std::map<int, double> scores;  // softmax over cosine similarities
};

/// Softmax over <mu_bar_y, z> with temperature 1; argmax, ties to the
/// lowest class id.
Classification classify_cosine(const Prototypes& protos, const std::vector<double>& embedding);

/// Nearest mean of exemplars: argmin ||z - mu_y|| on the un-normalized
/// means, ties to the lowest class id.
int classify_nme(const Prototypes& protos, const std::vector<double>& embedding);

}  // namespace sclifd
