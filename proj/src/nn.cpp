#include "sclifd/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sclifd {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw std::runtime_error("encoder needs at least input and output dims");
  for (std::size_t d : dims)
    if (d == 0) throw std::runtime_error("encoder has a zero-sized layer");
}

EncoderGrads zeros_like(const EncoderParams& p) {
  EncoderGrads g;
  g.weights.reserve(p.weights.size());
  g.biases.reserve(p.biases.size());
  for (const Matrix& w : p.weights) g.weights.emplace_back(w.n_rows, w.n_cols, 0.0);
  for (const auto& b : p.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

}  // namespace

EncoderParams init_params(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  check_dims(dims);
  EncoderParams p;
  p.dims = dims;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data) v = std_dev * unit_normal(rng);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }
  return p;
}

ForwardCache encoder_forward(const EncoderParams& params, const Matrix& batch) {
  check_dims(params.dims);
  if (batch.n_cols != params.dims.front())
    throw std::runtime_error("encoder_forward: batch width " + std::to_string(batch.n_cols) +
                             " does not match input dim " + std::to_string(params.dims.front()));

  const std::size_t layers = params.weights.size();
  const std::size_t batch_rows = batch.n_rows;

  ForwardCache cache;
  cache.input = batch;
  cache.pre_activations.reserve(layers);
  cache.activations.reserve(layers);

  const Matrix* act = &cache.input;
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = params.weights[l];
    const std::vector<double>& b = params.biases[l];
    Matrix pre(batch_rows, w.n_rows);
    for (std::size_t r = 0; r < batch_rows; ++r) {
      const double* x = act->row(r);
      double* out = pre.row(r);
      for (std::size_t o = 0; o < w.n_rows; ++o) out[o] = b[o] + dot(w.row(o), x, w.n_cols);
    }
    for (double v : pre.data)
      if (!std::isfinite(v))
        throw std::runtime_error("encoder_forward: non-finite activation at layer " +
                                 std::to_string(l));
    cache.pre_activations.push_back(pre);
    if (l + 1 < layers) {
      for (double& v : pre.data) v = v > 0.0 ? v : 0.0;  // ReLU on hidden layers
    }
    cache.activations.push_back(std::move(pre));
    act = &cache.activations.back();
  }

  cache.raw = cache.activations.back();
  const std::size_t e = cache.raw.n_cols;
  cache.raw_norms.resize(batch_rows);
  cache.embeddings = Matrix(batch_rows, e);
  for (std::size_t r = 0; r < batch_rows; ++r) {
    const double n = l2_norm(cache.raw.row(r), e);
    if (n == 0.0)
      throw std::runtime_error("encoder_forward: zero-norm raw output at row " + std::to_string(r));
    cache.raw_norms[r] = n;
    for (std::size_t c = 0; c < e; ++c) cache.embeddings(r, c) = cache.raw(r, c) / n;
  }
  return cache;
}

EncoderGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Matrix& grad_embeddings) {
  if (!grad_embeddings.same_shape(cache.embeddings))
    throw std::runtime_error("encoder_backward: gradient shape mismatch");

  const std::size_t layers = params.weights.size();
  const std::size_t batch_rows = cache.embeddings.n_rows;
  const std::size_t e = cache.embeddings.n_cols;

  // Through the normalization: g_raw = (g - z (z . g)) / ||raw||.
  Matrix grad(batch_rows, e);
  for (std::size_t r = 0; r < batch_rows; ++r) {
    const double* z = cache.embeddings.row(r);
    const double* g = grad_embeddings.row(r);
    const double zg = dot(z, g, e);
    for (std::size_t c = 0; c < e; ++c) grad(r, c) = (g[c] - z[c] * zg) / cache.raw_norms[r];
  }

  EncoderGrads out = zeros_like(params);
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& w = params.weights[l];
    const Matrix& in_act = (l == 0) ? cache.input : cache.activations[l - 1];
    Matrix& gw = out.weights[l];
    std::vector<double>& gb = out.biases[l];

    for (std::size_t r = 0; r < batch_rows; ++r) {
      const double* gp = grad.row(r);
      const double* x = in_act.row(r);
      for (std::size_t o = 0; o < w.n_rows; ++o) {
        gb[o] += gp[o];
        double* gw_row = gw.row(o);
        for (std::size_t i = 0; i < w.n_cols; ++i) gw_row[i] += gp[o] * x[i];
      }
    }

    if (l > 0) {
      Matrix next(batch_rows, w.n_cols, 0.0);
      for (std::size_t r = 0; r < batch_rows; ++r) {
        const double* gp = grad.row(r);
        double* np = next.row(r);
        for (std::size_t o = 0; o < w.n_rows; ++o) {
          const double* w_row = w.row(o);
          for (std::size_t i = 0; i < w.n_cols; ++i) np[i] += gp[o] * w_row[i];
        }
        const double* pre = cache.pre_activations[l - 1].row(r);
        for (std::size_t i = 0; i < w.n_cols; ++i)
          if (pre[i] <= 0.0) np[i] = 0.0;
      }
      grad = std::move(next);
    }
  }
  return out;
}

AdamState make_adam_state(const EncoderParams& params, const AdamConfig& cfg) {
  AdamState st;
  st.m = zeros_like(params);
  st.v = zeros_like(params);
  st.cfg = cfg;
  return st;
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, const AdamConfig& cfg, double lr, double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(g[i])) throw std::runtime_error("adam_step: non-finite gradient");
    const double grad = g[i] + cfg.weight_decay * p[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad * grad;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

}  // namespace

void adam_step(AdamState& state, EncoderParams& params, const EncoderGrads& grads, double lr) {
  if (grads.weights.size() != params.weights.size())
    throw std::runtime_error("adam_step: gradient/parameter layer mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (!params.weights[l].same_shape(grads.weights[l]))
      throw std::runtime_error("adam_step: weight gradient shape mismatch at layer " +
                               std::to_string(l));
    adam_update(params.weights[l].data, grads.weights[l].data, state.m.weights[l].data,
                state.v.weights[l].data, state.cfg, lr, bc1, bc2);
    adam_update(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l], state.cfg,
                lr, bc1, bc2);
  }
}

double LrSchedule::lr_at(int epoch) const {
  if (epoch < 0) throw std::runtime_error("lr_at: negative epoch");
  double lr = base_lr;
  for (int m : milestones)
    if (epoch >= m) lr *= gamma;
  return lr;
}

nlohmann::json encoder_to_json(const EncoderParams& params) {
  nlohmann::json j;
  j["dims"] = params.dims;
  j["weights"] = nlohmann::json::array();
  for (const Matrix& w : params.weights) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < w.n_rows; ++r)
      rows.push_back(std::vector<double>(w.row(r), w.row(r) + w.n_cols));
    j["weights"].push_back(std::move(rows));
  }
  j["biases"] = params.biases;
  return j;
}

EncoderParams encoder_from_json(const nlohmann::json& j) {
  EncoderParams p;
  p.dims = j.at("dims").get<std::vector<std::size_t>>();
  check_dims(p.dims);
  for (const auto& rows : j.at("weights")) {
    const std::size_t n_rows = rows.size();
    if (n_rows == 0) throw std::runtime_error("encoder_from_json: empty weight matrix");
    const std::size_t n_cols = rows[0].size();
    Matrix w(n_rows, n_cols);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const auto row = rows[r].get<std::vector<double>>();
      if (row.size() != n_cols) throw std::runtime_error("encoder_from_json: ragged weight matrix");
      std::copy(row.begin(), row.end(), w.row(r));
    }
    p.weights.push_back(std::move(w));
  }
  p.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  if (p.weights.size() + 1 != p.dims.size() || p.biases.size() != p.weights.size())
    throw std::runtime_error("encoder_from_json: layer count mismatch");
  return p;
}

void save_encoder(const EncoderParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << encoder_to_json(params).dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

EncoderParams load_encoder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open encoder checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  return encoder_from_json(j);
}

namespace {

void fnv1a_feed(std::uint64_t& h, const void* bytes, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

std::string encoder_checksum(const EncoderParams& params) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t d : params.dims) {
    const std::uint64_t v = d;
    fnv1a_feed(h, &v, sizeof(v));
  }
  for (const Matrix& w : params.weights) fnv1a_feed(h, w.data.data(), w.data.size() * sizeof(double));
  for (const auto& b : params.biases) fnv1a_feed(h, b.data(), b.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sclifd
