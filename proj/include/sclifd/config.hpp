#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclifd/dataio.hpp"
#include "sclifd/losses.hpp"
#include "sclifd/nn.hpp"

#include <nlohmann/json_fwd.hpp>

namespace sclifd {

/// Raised for malformed or invalid configuration; everything else is a
/// plain std::runtime_error.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Selector { herding, adaherding, random };
enum class Classifier { cosine, nme };

struct AugmentConfig {
  double jitter_std = 0.05;  // fraction of per-feature training std
  double scale_min = 0.9;
  double scale_max = 1.1;
};

struct RunConfig {
  std::optional<std::string> csv_path;
  std::optional<BlobConfig> blobs;
  std::vector<int> class_order;  // empty = ascending class ids
  int shot = 2;
  std::size_t normal_train = 500;
  std::size_t fault_train = 48;
  std::size_t test_per_class = 800;
  std::size_t memory_size = 100;  // exemplar budget K
  std::vector<std::size_t> hidden{20};
  std::size_t embedding_dim = 10;
  int epochs = 500;
  std::size_t batch_size = 64;
  LrSchedule lr;
  AdamConfig adam{0.01, 0.9, 0.999, 1e-8, 1e-5};
  LossConfig loss;
  Selector selector = Selector::adaherding;
  int n_neighbors = 5;
  Classifier classifier = Classifier::cosine;
  bool use_scl = true;
  bool standardize = false;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
};

/// Parses and validates a config object. Unknown keys fail closed; value
/// errors name the offending field path. Unset fields keep the defaults
/// above. blobs.seed defaults to the run seed.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_string(const std::string& text);

nlohmann::ordered_json config_to_json(const RunConfig& cfg);

const char* selector_name(Selector s);
const char* classifier_name(Classifier c);

}  // namespace sclifd
