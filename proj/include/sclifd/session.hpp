#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sclifd/classify.hpp"
#include "sclifd/config.hpp"
#include "sclifd/dataio.hpp"
#include "sclifd/losses.hpp"
#include "sclifd/memory.hpp"
#include "sclifd/nn.hpp"

namespace sclifd {

struct TrainConfig {
  int epochs = 500;
  std::size_t batch_size = 64;
  LrSchedule lr;
  AdamConfig adam{0.01, 0.9, 0.999, 1e-8, 1e-5};
  bool use_scl = true;
};

/// Mutable state carried across incremental sessions. The teacher is the
/// frozen copy of the previous session's final encoder; absent before the
/// first session completes.
struct SessionState {
  EncoderParams encoder;
  std::optional<EncoderParams> teacher;
  MemoryBuffer buffer;
  std::vector<int> seen_classes;  // introduction order
  int session_index = 0;          // 1-based once a session starts
  std::mt19937_64 rng;
};

struct TrainStats {
  std::vector<double> epoch_mean_loss;
};

struct SessionReport {
  int session = 0;
  std::vector<int> classes;  // confusion row/column order
  double joint_accuracy = 0.0;
  std::map<int, double> per_class_accuracy;
  Matrix confusion;  // row-normalized; all-zero row for an absent class
  double mean_loss_first_epoch = 0.0;
  double mean_loss_last_epoch = 0.0;
};

/// One view per input row: per-sample uniform scale in
/// [scale_min, scale_max], then per-feature Gaussian jitter with std
/// jitter_std * feature_std[f].
Matrix augment(const Matrix& batch, const AugmentConfig& cfg,
               const std::vector<double>& feature_std, std::mt19937_64& rng);

/// Trains the encoder on new data merged with the rehearsal buffer, then
/// freezes the result as the new teacher. Mini-batches become 2N
/// (original, augmented) contrastive batches; the distillation term is
/// active only when a teacher exists. When no loss term is active (no SCL
/// and no teacher) the optimizer loop is skipped.
TrainStats train_session(SessionState& state, const std::vector<Sample>& new_data,
                         const TrainConfig& train_cfg, const LossConfig& loss_cfg,
                         const AugmentConfig& aug_cfg);

/// Rebalances existing class lists to floor(K / t_seen) and fills one list
/// per new class with the chosen selector, using current encoder features.
/// new_data_indices are dataset row ids recorded for the manifest audit.
void build_exemplars(SessionState& state, const std::vector<Sample>& new_data,
                     const std::vector<std::size_t>& new_data_indices, Selector selector,
                     int n_neighbors, std::size_t memory_size);

SessionReport evaluate(const SessionState& state, const std::vector<Sample>& joint_test,
                       Classifier classifier);

struct ExperimentResult {
  std::vector<SessionReport> reports;
  std::vector<TrainStats> train_stats;
  std::string reports_json;
  std::string manifest_json;  // without the emitted-files section
};

/// Runs the full four-step incremental procedure over the configured
/// schedule. Deterministic for a fixed config.
ExperimentResult run_experiment(const RunConfig& cfg);

/// Writes reports.json, confusion_s<k>.csv per session and manifest.json
/// (which lists the other files with content hashes). All writes are
/// temp-then-rename.
void write_outputs(const ExperimentResult& result, const std::string& out_dir);

/// FNV-1a/64 of a byte string, hex-encoded; used for manifest file hashes.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace sclifd
