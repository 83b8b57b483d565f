#include "sclifd/session.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sclifd/version.hpp"

namespace sclifd {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

Matrix augment(const Matrix& batch, const AugmentConfig& cfg,
               const std::vector<double>& feature_std, std::mt19937_64& rng) {
  if (batch.n_rows == 0) throw std::runtime_error("augment: empty batch");
  if (feature_std.size() != batch.n_cols)
    throw std::runtime_error("augment: feature std size mismatch");
  std::uniform_real_distribution<double> scale_dist(cfg.scale_min, cfg.scale_max);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  Matrix out(batch.n_rows, batch.n_cols);
  for (std::size_t r = 0; r < batch.n_rows; ++r) {
    const double scale = scale_dist(rng);
    for (std::size_t c = 0; c < batch.n_cols; ++c) {
      const double jitter = cfg.jitter_std * feature_std[c] * unit_normal(rng);
      out(r, c) = batch(r, c) * scale + jitter;
    }
  }
  return out;
}

namespace {

std::vector<double> per_feature_std(const std::vector<Sample>& pool, std::size_t dim) {
  std::vector<double> mean(dim, 0.0);
  std::vector<double> var(dim, 0.0);
  for (const Sample& s : pool)
    for (std::size_t f = 0; f < dim; ++f) mean[f] += s.features[f];
  for (double& m : mean) m /= static_cast<double>(pool.size());
  for (const Sample& s : pool)
    for (std::size_t f = 0; f < dim; ++f) {
      const double d = s.features[f] - mean[f];
      var[f] += d * d;
    }
  std::vector<double> out(dim);
  for (std::size_t f = 0; f < dim; ++f)
    out[f] = std::sqrt(var[f] / static_cast<double>(pool.size()));
  return out;
}

Matrix embed_samples(const EncoderParams& encoder, const std::vector<Sample>& samples) {
  Matrix batch(samples.size(), samples.empty() ? 0 : samples[0].features.size());
  for (std::size_t r = 0; r < samples.size(); ++r)
    std::copy(samples[r].features.begin(), samples[r].features.end(), batch.row(r));
  return encoder_forward(encoder, batch).embeddings;
}

}  // namespace

TrainStats train_session(SessionState& state, const std::vector<Sample>& new_data,
                         const TrainConfig& train_cfg, const LossConfig& loss_cfg,
                         const AugmentConfig& aug_cfg) {
  std::vector<Sample> pool = new_data;
  for (auto& [sample, cls] : buffer_flatten(state.buffer)) {
    (void)cls;
    pool.push_back(sample);
  }
  if (pool.empty()) throw std::runtime_error("train_session: empty training set");

  const std::size_t dim = state.encoder.dims.front();
  for (const Sample& s : pool)
    if (s.features.size() != dim)
      throw std::runtime_error("train_session: sample width does not match encoder input");

  const bool with_scl = train_cfg.use_scl;
  const bool with_kd = state.teacher.has_value() && loss_cfg.lambda > 0.0;

  TrainStats stats;
  if (with_scl || with_kd) {
    AdamState adam = make_adam_state(state.encoder, train_cfg.adam);
    const std::vector<double> feature_std = per_feature_std(pool, dim);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), state.rng);
      const double lr = train_cfg.lr.lr_at(epoch);
      double loss_sum = 0.0;
      std::size_t batches = 0;

      for (std::size_t start = 0; start < pool.size(); start += train_cfg.batch_size) {
        const std::size_t bsz = std::min(train_cfg.batch_size, pool.size() - start);

        Matrix originals(bsz, dim);
        std::vector<int> labels(2 * bsz);
        for (std::size_t i = 0; i < bsz; ++i) {
          const Sample& s = pool[order[start + i]];
          std::copy(s.features.begin(), s.features.end(), originals.row(i));
          labels[i] = s.label;
          labels[bsz + i] = s.label;
        }
        const Matrix views = augment(originals, aug_cfg, feature_std, state.rng);

        Matrix both(2 * bsz, dim);
        std::copy(originals.data.begin(), originals.data.end(), both.data.begin());
        std::copy(views.data.begin(), views.data.end(), both.data.begin() + bsz * dim);
        std::vector<std::size_t> pairing(2 * bsz);
        for (std::size_t i = 0; i < bsz; ++i) {
          pairing[i] = bsz + i;
          pairing[bsz + i] = i;
        }

        ForwardCache fwd = encoder_forward(state.encoder, both);

        LossValue total;
        if (with_scl) {
          ContrastiveBatch cb{fwd.embeddings, labels, pairing};
          if (with_kd) {
            const Matrix teacher_emb = encoder_forward(*state.teacher, both).embeddings;
            total = total_loss(cb, &teacher_emb, loss_cfg);
          } else {
            total = total_loss(cb, nullptr, loss_cfg);
          }
        } else {
          const Matrix teacher_emb = encoder_forward(*state.teacher, both).embeddings;
          total = kd_loss(teacher_emb, fwd.embeddings, loss_cfg.tau);
          total.value *= loss_cfg.lambda;
          for (double& g : total.grad.data) g *= loss_cfg.lambda;
        }

        if (!std::isfinite(total.value))
          throw std::runtime_error("train_session: non-finite loss at session " +
                                   std::to_string(state.session_index) + ", epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batches));

        const EncoderGrads grads = encoder_backward(state.encoder, fwd, total.grad);
        adam_step(adam, state.encoder, grads, lr);
        loss_sum += total.value;
        ++batches;
      }
      stats.epoch_mean_loss.push_back(loss_sum / static_cast<double>(batches));
    }
  }

  state.teacher = state.encoder;  // frozen copy for the next session
  return stats;
}

void build_exemplars(SessionState& state, const std::vector<Sample>& new_data,
                     const std::vector<std::size_t>& new_data_indices, Selector selector,
                     int n_neighbors, std::size_t memory_size) {
  if (new_data.empty()) throw std::runtime_error("build_exemplars: no new data");
  std::vector<std::size_t> indices = new_data_indices;
  if (indices.empty()) {
    indices.resize(new_data.size());
    std::iota(indices.begin(), indices.end(), 0);
  }
  if (indices.size() != new_data.size())
    throw std::runtime_error("build_exemplars: index list size mismatch");

  state.buffer.capacity = memory_size;

  // Register classes not yet seen (driver normally pre-registers them in
  // schedule order; ascending here keeps standalone use deterministic).
  std::set<int> new_classes;
  for (const Sample& s : new_data)
    if (std::find(state.seen_classes.begin(), state.seen_classes.end(), s.label) ==
        state.seen_classes.end())
      new_classes.insert(s.label);
  for (int c : new_classes) state.seen_classes.push_back(c);

  const std::size_t t_seen = state.seen_classes.size();
  rebalance(state.buffer, t_seen);
  const std::size_t budget = memory_size / t_seen;

  // Classes that need a fresh list: anything present in new_data without one.
  std::set<int> to_fill;
  for (const Sample& s : new_data)
    if (!state.buffer.per_class.count(s.label)) to_fill.insert(s.label);
  if (to_fill.empty()) return;

  // Current-encoder embeddings of the selection context: retained exemplars
  // of old classes plus the full training data of this session.
  const std::vector<std::pair<Sample, int>> old = buffer_flatten(state.buffer);
  std::vector<Sample> context_samples;
  context_samples.reserve(old.size() + new_data.size());
  std::vector<int> context_labels;
  context_labels.reserve(old.size() + new_data.size());
  for (const auto& [sample, cls] : old) {
    context_samples.push_back(sample);
    context_labels.push_back(cls);
  }
  for (const Sample& s : new_data) {
    context_samples.push_back(s);
    context_labels.push_back(s.label);
  }
  const Matrix context = embed_samples(state.encoder, context_samples);
  const std::size_t new_offset = old.size();

  for (int cls : to_fill) {
    std::vector<std::size_t> positions;  // into new_data
    for (std::size_t i = 0; i < new_data.size(); ++i)
      if (new_data[i].label == cls) positions.push_back(i);

    std::vector<StoredExemplar> list;
    if (selector == Selector::adaherding) {
      std::vector<std::size_t> query_rows(positions.size());
      for (std::size_t i = 0; i < positions.size(); ++i) query_rows[i] = new_offset + positions[i];
      const AdaherdingResult res =
          adaherding_select(context, context_labels, query_rows, n_neighbors, budget);
      for (std::size_t sel : res.selected) {
        StoredExemplar ex;
        ex.sample = new_data[positions[sel]];
        ex.source_index = indices[positions[sel]];
        ex.ratio = res.ratios[sel];
        list.push_back(std::move(ex));
      }
    } else if (selector == Selector::herding) {
      Matrix feats(positions.size(), context.n_cols);
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const double* src = context.row(new_offset + positions[i]);
        std::copy(src, src + context.n_cols, feats.row(i));
      }
      for (std::size_t sel : herding_select(feats, budget)) {
        StoredExemplar ex;
        ex.sample = new_data[positions[sel]];
        ex.source_index = indices[positions[sel]];
        list.push_back(std::move(ex));
      }
    } else {
      const std::uint64_t seed =
          (static_cast<std::uint64_t>(state.session_index) << 32) ^
          static_cast<std::uint64_t>(static_cast<std::uint32_t>(cls));
      for (std::size_t sel : random_select(positions.size(), budget, seed)) {
        StoredExemplar ex;
        ex.sample = new_data[positions[sel]];
        ex.source_index = indices[positions[sel]];
        list.push_back(std::move(ex));
      }
    }
    state.buffer.per_class[cls] = std::move(list);
  }

  if (state.buffer.total_stored() > state.buffer.capacity)
    throw std::runtime_error("build_exemplars: capacity invariant violated");
}

SessionReport evaluate(const SessionState& state, const std::vector<Sample>& joint_test,
                       Classifier classifier) {
  if (joint_test.empty()) throw std::runtime_error("evaluate: empty test set");
  if (state.seen_classes.empty()) throw std::runtime_error("evaluate: no classes seen yet");

  std::map<int, std::size_t> row_of;
  for (std::size_t i = 0; i < state.seen_classes.size(); ++i) row_of[state.seen_classes[i]] = i;
  for (const Sample& s : joint_test)
    if (!row_of.count(s.label))
      throw std::runtime_error("evaluate: test sample of unseen class " + std::to_string(s.label));
  for (int c : state.seen_classes)
    if (!state.buffer.per_class.count(c) || state.buffer.per_class.at(c).empty())
      throw std::runtime_error("evaluate: seen class " + std::to_string(c) +
                               " has no exemplars to build a prototype from");

  const Prototypes protos = compute_prototypes(state.buffer, state.encoder);
  const Matrix emb = embed_samples(state.encoder, joint_test);

  const std::size_t t = state.seen_classes.size();
  Matrix counts(t, t, 0.0);
  std::size_t correct = 0;
  std::map<int, std::size_t> class_total, class_correct;
  for (int c : state.seen_classes) {
    class_total[c] = 0;
    class_correct[c] = 0;
  }

  std::vector<double> z(emb.n_cols);
  for (std::size_t r = 0; r < emb.n_rows; ++r) {
    std::copy(emb.row(r), emb.row(r) + emb.n_cols, z.begin());
    const int truth = joint_test[r].label;
    const int pred = (classifier == Classifier::cosine) ? classify_cosine(protos, z).label
                                                        : classify_nme(protos, z);
    counts(row_of.at(truth), row_of.at(pred)) += 1.0;
    class_total[truth] += 1;
    if (pred == truth) {
      ++correct;
      class_correct[truth] += 1;
    }
  }

  SessionReport rep;
  rep.session = state.session_index;
  rep.classes = state.seen_classes;
  rep.joint_accuracy = static_cast<double>(correct) / static_cast<double>(joint_test.size());
  for (int c : state.seen_classes)
    rep.per_class_accuracy[c] =
        class_total[c] ? static_cast<double>(class_correct[c]) / static_cast<double>(class_total[c])
                       : 0.0;
  rep.confusion = Matrix(t, t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    double row_sum = 0.0;
    for (std::size_t k = 0; k < t; ++k) row_sum += counts(i, k);
    if (row_sum > 0.0)
      for (std::size_t k = 0; k < t; ++k) rep.confusion(i, k) = counts(i, k) / row_sum;
  }
  return rep;
}

namespace {

std::string double_to_string(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ordered_json report_to_json(const SessionReport& rep) {
  ordered_json j;
  j["session"] = rep.session;
  j["classes"] = rep.classes;
  j["joint_accuracy"] = rep.joint_accuracy;
  ordered_json pca;
  for (const auto& [cls, acc] : rep.per_class_accuracy) pca[std::to_string(cls)] = acc;
  j["per_class_accuracy"] = pca;
  ordered_json conf = ordered_json::array();
  for (std::size_t r = 0; r < rep.confusion.n_rows; ++r)
    conf.push_back(std::vector<double>(rep.confusion.row(r), rep.confusion.row(r) +
                                                               rep.confusion.n_cols));
  j["confusion"] = conf;
  j["mean_loss_first_epoch"] = rep.mean_loss_first_epoch;
  j["mean_loss_last_epoch"] = rep.mean_loss_last_epoch;
  return j;
}

std::string confusion_csv(const SessionReport& rep) {
  std::string out = "class";
  for (int c : rep.classes) out += "," + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < rep.confusion.n_rows; ++r) {
    out += std::to_string(rep.classes[r]);
    for (std::size_t c = 0; c < rep.confusion.n_cols; ++c)
      out += "," + double_to_string(rep.confusion(r, c));
    out += "\n";
  }
  return out;
}

ordered_json buffer_audit(const MemoryBuffer& buffer) {
  ordered_json arr = ordered_json::array();
  for (const auto& [cls, list] : buffer.per_class) {
    ordered_json entry;
    entry["class"] = cls;
    entry["count"] = list.size();
    std::vector<std::size_t> idx;
    idx.reserve(list.size());
    for (const StoredExemplar& ex : list) idx.push_back(ex.source_index);
    entry["source_indices"] = idx;
    if (!list.empty() && list.front().ratio.has_value()) {
      std::vector<double> ratios;
      ratios.reserve(list.size());
      for (const StoredExemplar& ex : list) ratios.push_back(ex.ratio.value_or(0.0));
      entry["ratios"] = ratios;
    }
    arr.push_back(std::move(entry));
  }
  return arr;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg) {
  Dataset data;
  if (cfg.csv_path) {
    data = load_csv(*cfg.csv_path);
  } else if (cfg.blobs) {
    data = synth_blobs(*cfg.blobs);
  } else {
    throw ConfigError("config: dataset: either csv or blobs is required");
  }

  std::vector<int> class_order = cfg.class_order;
  if (class_order.empty()) class_order.assign(data.classes.begin(), data.classes.end());

  SessionSchedule sched = make_schedule(data, class_order, cfg.shot, cfg.normal_train,
                                        cfg.fault_train, cfg.test_per_class, cfg.seed);

  if (cfg.standardize) {
    std::vector<std::size_t> rows;
    for (int c : sched.sessions.front())
      for (std::size_t r : sched.train_indices.at(c)) rows.push_back(r);
    apply_scaler(data, fit_scaler(data, rows));
  }

  std::vector<std::size_t> dims;
  dims.push_back(data.dim);
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(cfg.embedding_dim);

  SessionState state;
  state.encoder = init_params(dims, cfg.seed);
  state.buffer.capacity = cfg.memory_size;
  state.rng.seed(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.lr = cfg.lr;
  tc.adam = cfg.adam;
  tc.use_scl = cfg.use_scl;

  ExperimentResult result;
  ordered_json session_audits = ordered_json::array();

  for (std::size_t k = 0; k < sched.sessions.size(); ++k) {
    state.session_index = static_cast<int>(k) + 1;
    for (int c : sched.sessions[k]) state.seen_classes.push_back(c);

    std::vector<Sample> new_data;
    std::vector<std::size_t> new_indices;
    for (int c : sched.sessions[k])
      for (std::size_t r : sched.train_indices.at(c)) {
        new_data.push_back(data.samples[r]);
        new_indices.push_back(r);
      }

    try {
      const TrainStats stats = train_session(state, new_data, tc, cfg.loss, cfg.augment);
      build_exemplars(state, new_data, new_indices, cfg.selector, cfg.n_neighbors,
                      cfg.memory_size);

      std::vector<Sample> joint_test;
      for (int c : state.seen_classes)
        for (std::size_t r : sched.test_indices.at(c)) joint_test.push_back(data.samples[r]);

      SessionReport rep = evaluate(state, joint_test, cfg.classifier);
      if (!stats.epoch_mean_loss.empty()) {
        rep.mean_loss_first_epoch = stats.epoch_mean_loss.front();
        rep.mean_loss_last_epoch = stats.epoch_mean_loss.back();
      }
      result.reports.push_back(std::move(rep));
      result.train_stats.push_back(stats);
    } catch (const std::exception& e) {
      throw std::runtime_error("session " + std::to_string(state.session_index) + ": " + e.what());
    }

    ordered_json audit;
    audit["session"] = state.session_index;
    audit["classes"] = sched.sessions[k];
    audit["encoder_checksum"] = encoder_checksum(state.encoder);
    audit["buffer_total"] = state.buffer.total_stored();
    audit["buffer"] = buffer_audit(state.buffer);
    ordered_json protos;
    for (const auto& [cls, mu] : compute_prototypes(state.buffer, state.encoder).normalized)
      protos[std::to_string(cls)] = mu;
    audit["prototypes"] = protos;
    session_audits.push_back(std::move(audit));
  }

  ordered_json reports;
  reports["sessions"] = ordered_json::array();
  for (const SessionReport& rep : result.reports) reports["sessions"].push_back(report_to_json(rep));
  result.reports_json = reports.dump(2) + "\n";

  ordered_json manifest;
  manifest["generator"] = {{"name", "sclifd"}, {"version", kVersion}};
  manifest["config"] = config_to_json(cfg);
  manifest["class_order"] = class_order;
  manifest["encoder_dims"] = dims;
  ordered_json schedule;
  schedule["sessions"] = sched.sessions;
  ordered_json train_idx, test_idx;
  for (const auto& [cls, rows] : sched.train_indices) train_idx[std::to_string(cls)] = rows;
  for (const auto& [cls, rows] : sched.test_indices) test_idx[std::to_string(cls)] = rows;
  schedule["train_indices"] = train_idx;
  schedule["test_indices"] = test_idx;
  manifest["schedule"] = schedule;
  manifest["sessions"] = session_audits;
  result.manifest_json = manifest.dump(2) + "\n";

  return result;
}

namespace {

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_outputs(const ExperimentResult& result, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::pair<std::string, std::string>> files;  // name, bytes
  files.emplace_back("reports.json", result.reports_json);
  for (const SessionReport& rep : result.reports)
    files.emplace_back("confusion_s" + std::to_string(rep.session) + ".csv", confusion_csv(rep));

  for (const auto& [name, bytes] : files) write_file_atomic(fs::path(out_dir) / name, bytes);

  ordered_json manifest = ordered_json::parse(result.manifest_json);
  ordered_json listed = ordered_json::array();
  for (const auto& [name, bytes] : files)
    listed.push_back({{"name", name}, {"fnv1a", fnv1a_hex(bytes)}});
  manifest["files"] = listed;
  write_file_atomic(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace sclifd
