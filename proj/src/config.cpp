#include "sclifd/config.hpp"

#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace sclifd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

template <typename T>
T get_num(const json& obj, const std::string& path, const char* key, T def,
          bool require_positive = false, bool allow_zero = true) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + key, "expected a number");
  T out = v.get<T>();
  if (require_positive && (out < T(0) || (!allow_zero && out == T(0))))
    fail(path + key, allow_zero ? "must be >= 0" : "must be > 0");
  return out;
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(path + key, "expected true or false");
  return v.get<bool>();
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  check_keys(j, "",
             {"dataset", "class_order", "shot", "normal_train", "fault_train", "test_per_class",
              "memory_size", "encoder", "epochs", "batch_size", "lr", "optimizer", "tau", "lambda",
              "selector", "n_neighbors", "classifier", "use_scl", "standardize", "augment", "seed",
              "output_dir"});

  cfg.seed = get_num<std::uint64_t>(j, "", "seed", cfg.seed);

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset", {"csv", "blobs"});
    if (d.contains("csv") && d.contains("blobs"))
      fail("dataset", "give either csv or blobs, not both");
    if (d.contains("csv")) {
      if (!d.at("csv").is_string()) fail("dataset.csv", "expected a string path");
      cfg.csv_path = d.at("csv").get<std::string>();
    } else if (d.contains("blobs")) {
      const json& b = d.at("blobs");
      check_keys(b, "dataset.blobs",
                 {"num_classes", "dim", "mean_separation", "within_std", "samples_per_class",
                  "seed"});
      BlobConfig bc;
      bc.num_classes = get_num<int>(b, "dataset.blobs.", "num_classes", bc.num_classes);
      if (bc.num_classes < 2) fail("dataset.blobs.num_classes", "must be >= 2");
      bc.dim = get_num<std::size_t>(b, "dataset.blobs.", "dim", bc.dim, true, false);
      bc.mean_separation =
          get_num<double>(b, "dataset.blobs.", "mean_separation", bc.mean_separation, true);
      bc.within_std = get_num<double>(b, "dataset.blobs.", "within_std", bc.within_std);
      if (bc.within_std <= 0) fail("dataset.blobs.within_std", "must be > 0");
      bc.samples_per_class =
          get_num<std::size_t>(b, "dataset.blobs.", "samples_per_class", bc.samples_per_class,
                               true, false);
      bc.seed = get_num<std::uint64_t>(b, "dataset.blobs.", "seed", cfg.seed);
      cfg.blobs = bc;
    }
  }

  if (j.contains("class_order")) {
    const json& co = j.at("class_order");
    if (!co.is_array()) fail("class_order", "expected an array of class ids");
    for (const auto& v : co) {
      if (!v.is_number_integer()) fail("class_order", "expected integer class ids");
      cfg.class_order.push_back(v.get<int>());
    }
  }

  cfg.shot = get_num<int>(j, "", "shot", cfg.shot, true, false);
  cfg.normal_train = get_num<std::size_t>(j, "", "normal_train", cfg.normal_train, true, false);
  cfg.fault_train = get_num<std::size_t>(j, "", "fault_train", cfg.fault_train, true, false);
  cfg.test_per_class =
      get_num<std::size_t>(j, "", "test_per_class", cfg.test_per_class, true, false);
  cfg.memory_size = get_num<std::size_t>(j, "", "memory_size", cfg.memory_size, true, false);

  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    check_keys(e, "encoder", {"hidden", "embedding"});
    if (e.contains("hidden")) {
      if (!e.at("hidden").is_array()) fail("encoder.hidden", "expected an array of layer widths");
      cfg.hidden.clear();
      for (const auto& v : e.at("hidden")) {
        if (!v.is_number_integer() || v.get<long>() <= 0)
          fail("encoder.hidden", "layer widths must be positive integers");
        cfg.hidden.push_back(v.get<std::size_t>());
      }
    }
    cfg.embedding_dim =
        get_num<std::size_t>(e, "encoder.", "embedding", cfg.embedding_dim, true, false);
  }

  cfg.epochs = get_num<int>(j, "", "epochs", cfg.epochs, true);
  cfg.batch_size = get_num<std::size_t>(j, "", "batch_size", cfg.batch_size, true, false);

  if (j.contains("lr")) {
    const json& l = j.at("lr");
    check_keys(l, "lr", {"base", "gamma", "milestones"});
    cfg.lr.base_lr = get_num<double>(l, "lr.", "base", cfg.lr.base_lr, true, false);
    cfg.lr.gamma = get_num<double>(l, "lr.", "gamma", cfg.lr.gamma);
    if (cfg.lr.gamma <= 0 || cfg.lr.gamma >= 1) fail("lr.gamma", "must be in (0, 1)");
    if (l.contains("milestones")) {
      if (!l.at("milestones").is_array()) fail("lr.milestones", "expected an array of epochs");
      cfg.lr.milestones.clear();
      int prev = -1;
      for (const auto& v : l.at("milestones")) {
        if (!v.is_number_integer()) fail("lr.milestones", "expected integer epochs");
        const int m = v.get<int>();
        if (m <= prev) fail("lr.milestones", "must be strictly increasing");
        prev = m;
        cfg.lr.milestones.push_back(m);
      }
    }
  }
  cfg.adam.base_lr = cfg.lr.base_lr;

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    check_keys(o, "optimizer", {"beta1", "beta2", "eps", "weight_decay"});
    cfg.adam.beta1 = get_num<double>(o, "optimizer.", "beta1", cfg.adam.beta1);
    cfg.adam.beta2 = get_num<double>(o, "optimizer.", "beta2", cfg.adam.beta2);
    if (cfg.adam.beta1 < 0 || cfg.adam.beta1 >= 1) fail("optimizer.beta1", "must be in [0, 1)");
    if (cfg.adam.beta2 < 0 || cfg.adam.beta2 >= 1) fail("optimizer.beta2", "must be in [0, 1)");
    cfg.adam.eps = get_num<double>(o, "optimizer.", "eps", cfg.adam.eps, true, false);
    cfg.adam.weight_decay =
        get_num<double>(o, "optimizer.", "weight_decay", cfg.adam.weight_decay, true);
  }

  cfg.loss.tau = get_num<double>(j, "", "tau", cfg.loss.tau, true, false);
  cfg.loss.lambda = get_num<double>(j, "", "lambda", cfg.loss.lambda, true);

  if (j.contains("selector")) {
    const std::string s = j.at("selector").is_string() ? j.at("selector").get<std::string>() : "";
    if (s == "herding")
      cfg.selector = Selector::herding;
    else if (s == "adaherding")
      cfg.selector = Selector::adaherding;
    else if (s == "random")
      cfg.selector = Selector::random;
    else
      fail("selector", "expected herding, adaherding or random");
  }
  cfg.n_neighbors = get_num<int>(j, "", "n_neighbors", cfg.n_neighbors, true, false);

  if (j.contains("classifier")) {
    const std::string c =
        j.at("classifier").is_string() ? j.at("classifier").get<std::string>() : "";
    if (c == "cos")
      cfg.classifier = Classifier::cosine;
    else if (c == "nme")
      cfg.classifier = Classifier::nme;
    else
      fail("classifier", "expected cos or nme");
  }

  cfg.use_scl = get_bool(j, "", "use_scl", cfg.use_scl);
  cfg.standardize = get_bool(j, "", "standardize", cfg.standardize);

  if (j.contains("augment")) {
    const json& a = j.at("augment");
    check_keys(a, "augment", {"jitter_std", "scale_min", "scale_max"});
    cfg.augment.jitter_std =
        get_num<double>(a, "augment.", "jitter_std", cfg.augment.jitter_std, true);
    cfg.augment.scale_min = get_num<double>(a, "augment.", "scale_min", cfg.augment.scale_min);
    cfg.augment.scale_max = get_num<double>(a, "augment.", "scale_max", cfg.augment.scale_max);
    if (cfg.augment.scale_min <= 0) fail("augment.scale_min", "must be > 0");
    if (cfg.augment.scale_max < cfg.augment.scale_min)
      fail("augment.scale_max", "must be >= scale_min");
  }

  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) fail("output_dir", "expected a string path");
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }

  return cfg;
}

RunConfig parse_config_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json dataset;
  if (cfg.csv_path) {
    dataset["csv"] = *cfg.csv_path;
  } else if (cfg.blobs) {
    dataset["blobs"] = {{"num_classes", cfg.blobs->num_classes},
                        {"dim", cfg.blobs->dim},
                        {"mean_separation", cfg.blobs->mean_separation},
                        {"within_std", cfg.blobs->within_std},
                        {"samples_per_class", cfg.blobs->samples_per_class},
                        {"seed", cfg.blobs->seed}};
  }
  j["dataset"] = dataset;
  j["class_order"] = cfg.class_order;
  j["shot"] = cfg.shot;
  j["normal_train"] = cfg.normal_train;
  j["fault_train"] = cfg.fault_train;
  j["test_per_class"] = cfg.test_per_class;
  j["memory_size"] = cfg.memory_size;
  j["encoder"] = {{"hidden", cfg.hidden}, {"embedding", cfg.embedding_dim}};
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = {{"base", cfg.lr.base_lr}, {"gamma", cfg.lr.gamma}, {"milestones", cfg.lr.milestones}};
  j["optimizer"] = {{"beta1", cfg.adam.beta1},
                    {"beta2", cfg.adam.beta2},
                    {"eps", cfg.adam.eps},
                    {"weight_decay", cfg.adam.weight_decay}};
  j["tau"] = cfg.loss.tau;
  j["lambda"] = cfg.loss.lambda;
  j["selector"] = selector_name(cfg.selector);
  j["n_neighbors"] = cfg.n_neighbors;
  j["classifier"] = classifier_name(cfg.classifier);
  j["use_scl"] = cfg.use_scl;
  j["standardize"] = cfg.standardize;
  j["augment"] = {{"jitter_std", cfg.augment.jitter_std},
                  {"scale_min", cfg.augment.scale_min},
                  {"scale_max", cfg.augment.scale_max}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  return j;
}

const char* selector_name(Selector s) {
  switch (s) {
    case Selector::herding: return "herding";
    case Selector::adaherding: return "adaherding";
    case Selector::random: return "random";
  }
  return "?";
}

const char* classifier_name(Classifier c) {
  return c == Classifier::cosine ? "cos" : "nme";
}

}  // namespace sclifd
