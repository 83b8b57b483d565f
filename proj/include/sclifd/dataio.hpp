#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sclifd/matrix.hpp"

namespace sclifd {

struct Sample {
  std::vector<double> features;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t dim = 0;
  std::set<int> classes;
};

/// Isotropic Gaussian blobs with class means kept at least
/// mean_separation * within_std apart (rejection-sampled placement).
struct BlobConfig {
  int num_classes = 2;
  std::size_t dim = 2;
  double mean_separation = 4.0;
  double within_std = 1.0;
  std::size_t samples_per_class = 100;
  std::uint64_t seed = 0;
};

/// Class-incremental session layout plus the frozen per-class train/test
/// index splits. Test splits are fixed once and reused by every session.
struct SessionSchedule {
  std::vector<std::vector<int>> sessions;
  int shot = 1;
  std::map<int, std::size_t> train_count;
  std::map<int, std::size_t> test_count;
  std::map<int, std::vector<std::size_t>> train_indices;  // into Dataset::samples
  std::map<int, std::vector<std::size_t>> test_indices;
};

Dataset load_csv(const std::string& path);
void write_csv(const Dataset& data, const std::string& path);

Dataset synth_blobs(const BlobConfig& cfg);

/// Chunks class_order into sessions of `shot` classes and draws disjoint
/// train/test splits per class without replacement. The first class in
/// class_order is the normal class and gets the normal_train budget.
SessionSchedule make_schedule(const Dataset& data, const std::vector<int>& class_order,
                              int shot, std::size_t normal_train, std::size_t fault_train,
                              std::size_t test_per_class, std::uint64_t seed);

/// Per-feature z-scoring. Fit on a row subset (session-1 training data),
/// apply to the whole dataset. Zero-variance features pass through.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> std;
};

FeatureScaler fit_scaler(const Dataset& data, const std::vector<std::size_t>& rows);
void apply_scaler(Dataset& data, const FeatureScaler& scaler);

}  // namespace sclifd
