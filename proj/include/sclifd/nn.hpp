#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclifd/matrix.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sclifd {

/// MLP feature extractor. dims = {input, hidden..., embedding}; hidden
/// layers are affine+ReLU, the output layer is affine. Embeddings are the
/// row-wise L2 normalization of the output layer.
struct EncoderParams {
  std::vector<std::size_t> dims;
  std::vector<Matrix> weights;              // weights[l]: dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases;  // biases[l]: dims[l+1]
};

/// Gradient (or moment) buffers shaped like EncoderParams.
struct EncoderGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre_activations;  // per layer, before ReLU
  std::vector<Matrix> activations;      // per layer output; last entry is raw
  std::vector<double> raw_norms;        // per batch row
  Matrix raw;                           // B x e
  Matrix embeddings;                    // B x e, unit rows
};

EncoderParams init_params(const std::vector<std::size_t>& dims, std::uint64_t seed);

ForwardCache encoder_forward(const EncoderParams& params, const Matrix& batch);

/// Exact analytic backprop of a gradient w.r.t. the unit embeddings,
/// through the normalization Jacobian (I - z z^T)/||raw|| and the
/// affine/ReLU stack.
EncoderGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Matrix& grad_embeddings);

struct AdamConfig {
  double base_lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  EncoderGrads m;
  EncoderGrads v;
  long step = 0;
  AdamConfig cfg;
};

AdamState make_adam_state(const EncoderParams& params, const AdamConfig& cfg);

/// Bias-corrected Adam step. Weight decay is coupled: wd * param is added
/// to the raw gradient before the moment updates.
void adam_step(AdamState& state, EncoderParams& params, const EncoderGrads& grads, double lr);

/// Piecewise-constant decay: base_lr * gamma^(milestones passed).
struct LrSchedule {
  double base_lr = 0.01;
  double gamma = 0.2;
  std::vector<int> milestones{200, 400};

  double lr_at(int epoch) const;
};

nlohmann::json encoder_to_json(const EncoderParams& params);
EncoderParams encoder_from_json(const nlohmann::json& j);
void save_encoder(const EncoderParams& params, const std::string& path);
EncoderParams load_encoder(const std::string& path);

/// FNV-1a over the raw little-endian bytes of dims, weights and biases.
std::string encoder_checksum(const EncoderParams& params);

}  // namespace sclifd
