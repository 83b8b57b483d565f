// Command-line front end. Links only the C interface in sclifd.h; flags are
// merged over an optional JSON config file (flags win) and the merged
// document is handed to the library.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "sclifd.h"

using nlohmann::json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(int status) {
  switch (status) {
    case SCLIFD_OK: return 0;
    case SCLIFD_ERR_CONFIG: return kExitConfig;
    default: return kExitRuntime;
  }
}

// Experiment flags shared by `run` and `ablate`. Each value is written into
// the config JSON only when the user actually passed the flag.
struct ExperimentFlags {
  std::string config_path;
  std::string csv;
  int blob_classes = 0;
  int blob_dim = 0;
  double blob_separation = 0;
  double blob_std = 0;
  int blob_samples = 0;
  std::uint64_t blob_seed = 0;
  std::vector<int> class_order;
  int shot = 0;
  int normal_train = 0;
  int fault_train = 0;
  int test_per_class = 0;
  int memory_size = 0;
  std::vector<int> hidden;
  int embedding = 0;
  int epochs = 0;
  int batch_size = 0;
  double lr = 0;
  double lr_gamma = 0;
  std::vector<int> lr_milestones;
  double weight_decay = 0;
  double tau = 0;
  double lambda = 0;
  std::string selector;
  int n_neighbors = 0;
  std::string classifier;
  bool no_scl = false;
  bool standardize = false;
  double jitter_std = 0;
  double scale_min = 0;
  double scale_max = 0;
  std::uint64_t seed = 0;
  std::string out;

  CLI::App* cmd = nullptr;
};

void register_flags(CLI::App* cmd, ExperimentFlags& f, bool with_ablation_switches) {
  f.cmd = cmd;
  cmd->add_option("--config", f.config_path, "JSON config file; flags override its values");
  cmd->add_option("--csv", f.csv, "CSV dataset (header row with a 'label' column)");
  cmd->add_option("--blob-classes", f.blob_classes, "synthetic dataset: number of classes");
  cmd->add_option("--blob-dim", f.blob_dim, "synthetic dataset: feature dimensionality");
  cmd->add_option("--blob-separation", f.blob_separation,
                  "synthetic dataset: min class-mean distance in within-std units");
  cmd->add_option("--blob-std", f.blob_std, "synthetic dataset: within-class std");
  cmd->add_option("--blob-samples", f.blob_samples, "synthetic dataset: samples per class");
  cmd->add_option("--blob-seed", f.blob_seed, "synthetic dataset seed (defaults to --seed)");
  cmd->add_option("--class-order", f.class_order, "class ids in introduction order")
      ->delimiter(',');
  cmd->add_option("--shot", f.shot, "novel classes per incremental session");
  cmd->add_option("--normal-train", f.normal_train, "training samples for the normal class");
  cmd->add_option("--fault-train", f.fault_train, "training samples per fault class");
  cmd->add_option("--test-per-class", f.test_per_class, "test samples per class");
  cmd->add_option("-K,--memory-size", f.memory_size, "exemplar buffer capacity");
  cmd->add_option("--hidden", f.hidden, "encoder hidden layer widths")->delimiter(',');
  cmd->add_option("--embedding", f.embedding, "embedding dimensionality");
  cmd->add_option("--epochs", f.epochs, "training epochs per session");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--lr", f.lr, "initial learning rate");
  cmd->add_option("--lr-gamma", f.lr_gamma, "learning-rate decay factor");
  cmd->add_option("--lr-milestones", f.lr_milestones, "epochs at which the rate decays")
      ->delimiter(',');
  cmd->add_option("--weight-decay", f.weight_decay, "Adam coupled weight decay");
  cmd->add_option("--tau", f.tau, "temperature for the contrastive and distillation losses");
  cmd->add_option("--lambda", f.lambda, "distillation weight");
  cmd->add_option("--n-neighbors", f.n_neighbors, "neighbors for the majority-ratio ranking");
  cmd->add_flag("--standardize", f.standardize,
                "z-score features using session-1 training statistics");
  cmd->add_option("--jitter-std", f.jitter_std, "augmentation noise std (fraction of feature std)");
  cmd->add_option("--scale-min", f.scale_min, "augmentation scale lower bound");
  cmd->add_option("--scale-max", f.scale_max, "augmentation scale upper bound");
  cmd->add_option("--seed", f.seed, "experiment seed");
  cmd->add_option("-o,--out", f.out, "output directory (also: SCLIFD_OUT_DIR)");
  if (with_ablation_switches) {
    cmd->add_option("--selector", f.selector, "exemplar selector: herding|adaherding|random");
    cmd->add_option("--classifier", f.classifier, "classification head: cos|nme");
    cmd->add_flag("--no-scl", f.no_scl, "drop the contrastive term (distillation only)");
  }
}

bool passed(const CLI::App& cmd, const std::string& name) {
  const CLI::Option* opt = cmd.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

// Builds the merged config document: file first, then every passed flag.
json build_config(const ExperimentFlags& f, int& error) {
  json j = json::object();
  error = 0;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) {
      std::cerr << "error: cannot open config file: " << f.config_path << "\n";
      error = kExitConfig;
      return j;
    }
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      std::cerr << "error: " << f.config_path << ": " << e.what() << "\n";
      error = kExitConfig;
      return j;
    }
  }
  const CLI::App& cmd = *f.cmd;
  if (passed(cmd, "--csv")) j["dataset"] = {{"csv", f.csv}};
  const bool blob_flags = passed(cmd, "--blob-classes") || passed(cmd, "--blob-dim") ||
                          passed(cmd, "--blob-separation") || passed(cmd, "--blob-std") ||
                          passed(cmd, "--blob-samples") || passed(cmd, "--blob-seed");
  if (blob_flags && passed(cmd, "--csv")) {
    std::cerr << "error: give either --csv or --blob-* flags, not both\n";
    error = kExitConfig;
    return j;
  }
  if (blob_flags) {
    json& b = j["dataset"]["blobs"];
    if (!b.is_object()) b = json::object();
    j["dataset"].erase("csv");
    if (passed(cmd, "--blob-classes")) b["num_classes"] = f.blob_classes;
    if (passed(cmd, "--blob-dim")) b["dim"] = f.blob_dim;
    if (passed(cmd, "--blob-separation")) b["mean_separation"] = f.blob_separation;
    if (passed(cmd, "--blob-std")) b["within_std"] = f.blob_std;
    if (passed(cmd, "--blob-samples")) b["samples_per_class"] = f.blob_samples;
    if (passed(cmd, "--blob-seed")) b["seed"] = f.blob_seed;
  }
  if (passed(cmd, "--class-order")) j["class_order"] = f.class_order;
  if (passed(cmd, "--shot")) j["shot"] = f.shot;
  if (passed(cmd, "--normal-train")) j["normal_train"] = f.normal_train;
  if (passed(cmd, "--fault-train")) j["fault_train"] = f.fault_train;
  if (passed(cmd, "--test-per-class")) j["test_per_class"] = f.test_per_class;
  if (passed(cmd, "--memory-size")) j["memory_size"] = f.memory_size;
  if (passed(cmd, "--hidden")) j["encoder"]["hidden"] = f.hidden;
  if (passed(cmd, "--embedding")) j["encoder"]["embedding"] = f.embedding;
  if (passed(cmd, "--epochs")) j["epochs"] = f.epochs;
  if (passed(cmd, "--batch-size")) j["batch_size"] = f.batch_size;
  if (passed(cmd, "--lr")) j["lr"]["base"] = f.lr;
  if (passed(cmd, "--lr-gamma")) j["lr"]["gamma"] = f.lr_gamma;
  if (passed(cmd, "--lr-milestones")) j["lr"]["milestones"] = f.lr_milestones;
  if (passed(cmd, "--weight-decay")) j["optimizer"]["weight_decay"] = f.weight_decay;
  if (passed(cmd, "--tau")) j["tau"] = f.tau;
  if (passed(cmd, "--lambda")) j["lambda"] = f.lambda;
  if (passed(cmd, "--selector")) j["selector"] = f.selector;
  if (passed(cmd, "--n-neighbors")) j["n_neighbors"] = f.n_neighbors;
  if (passed(cmd, "--classifier")) j["classifier"] = f.classifier;
  if (passed(cmd, "--no-scl")) j["use_scl"] = false;
  if (passed(cmd, "--standardize")) j["standardize"] = true;
  if (passed(cmd, "--jitter-std")) j["augment"]["jitter_std"] = f.jitter_std;
  if (passed(cmd, "--scale-min")) j["augment"]["scale_min"] = f.scale_min;
  if (passed(cmd, "--scale-max")) j["augment"]["scale_max"] = f.scale_max;
  if (passed(cmd, "--seed")) j["seed"] = f.seed;

  if (passed(cmd, "--out")) {
    j["output_dir"] = f.out;
  } else if (const char* env = std::getenv("SCLIFD_OUT_DIR")) {
    j["output_dir"] = env;
  }
  return j;
}

int fail_with_library_error(int status) {
  std::cerr << "error: " << sclifd_last_error() << "\n";
  return exit_code_for(status);
}

// Runs one config and writes the outputs; fills final_accuracies per session.
int execute(const json& config, std::vector<double>* accuracies, bool quiet) {
  const std::string text = config.dump();
  sclifd_experiment_t* exp = nullptr;
  int status = sclifd_experiment_create(text.c_str(), &exp);
  if (status != SCLIFD_OK) return fail_with_library_error(status);

  status = sclifd_experiment_run(exp);
  if (status != SCLIFD_OK) {
    sclifd_experiment_destroy(exp);
    return fail_with_library_error(status);
  }

  const std::string out_dir = config.value("output_dir", "out");
  status = sclifd_experiment_write_outputs(exp, out_dir.c_str());
  if (status != SCLIFD_OK) {
    sclifd_experiment_destroy(exp);
    return fail_with_library_error(status);
  }

  const int sessions = sclifd_experiment_session_count(exp);
  for (int s = 1; s <= sessions; ++s) {
    const double acc = sclifd_experiment_accuracy(exp, s);
    if (accuracies) accuracies->push_back(acc);
    if (!quiet)
      std::cout << "session " << s << ": joint accuracy " << acc << "\n";
  }
  if (!quiet) std::cout << "outputs written to " << out_dir << "\n";
  sclifd_experiment_destroy(exp);
  return 0;
}

int cmd_run(const ExperimentFlags& flags) {
  int error = 0;
  const json config = build_config(flags, error);
  if (error) return error;
  return execute(config, nullptr, false);
}

struct AblationRow {
  const char* name;
  bool use_scl;
  const char* selector;
  const char* classifier;
};

// The six component combinations of the ablation grid. Rows without a
// component fall back to the herding + NME baseline pipeline.
constexpr AblationRow kAblationRows[] = {
    {"icarl", false, "herding", "nme"},
    {"icarl_scl", true, "herding", "nme"},
    {"icarl_adaherding", false, "adaherding", "nme"},
    {"icarl_cos", false, "herding", "cos"},
    {"icarl_scl_adaherding", true, "adaherding", "nme"},
    {"sclifd", true, "adaherding", "cos"},
};

int cmd_ablate(const ExperimentFlags& flags) {
  int error = 0;
  const json base = build_config(flags, error);
  if (error) return error;
  const std::string out_root = base.value("output_dir", "out");

  json summary = json::array();
  for (const AblationRow& row : kAblationRows) {
    json config = base;
    config["use_scl"] = row.use_scl;
    config["selector"] = row.selector;
    config["classifier"] = row.classifier;
    config["output_dir"] = out_root + "/" + row.name;

    std::cout << "[" << row.name << "] scl=" << (row.use_scl ? "on" : "off")
              << " selector=" << row.selector << " classifier=" << row.classifier << "\n";
    std::vector<double> accuracies;
    const int rc = execute(config, &accuracies, true);
    if (rc != 0) return rc;
    for (std::size_t s = 0; s < accuracies.size(); ++s)
      std::cout << "  session " << (s + 1) << ": " << accuracies[s] << "\n";

    summary.push_back({{"name", row.name},
                       {"use_scl", row.use_scl},
                       {"selector", row.selector},
                       {"classifier", row.classifier},
                       {"joint_accuracy", accuracies}});
  }

  std::ofstream out(out_root + "/ablation_summary.json");
  out << summary.dump(2) << "\n";
  if (!out) {
    std::cerr << "error: cannot write " << out_root << "/ablation_summary.json\n";
    return kExitRuntime;
  }
  std::cout << "summary written to " << out_root << "/ablation_summary.json\n";
  return 0;
}

struct SynthFlags {
  int classes = 6;
  int dim = 10;
  double separation = 6.0;
  double within_std = 1.0;
  int samples = 300;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthFlags& f) {
  const json blob = {{"num_classes", f.classes},     {"dim", f.dim},
                     {"mean_separation", f.separation}, {"within_std", f.within_std},
                     {"samples_per_class", f.samples},  {"seed", f.seed}};
  const std::string text = blob.dump();
  const int status = sclifd_synth_csv(text.c_str(), f.out.c_str());
  if (status != SCLIFD_OK) return fail_with_library_error(status);
  std::cout << "wrote " << f.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("sclifd ") + sclifd_version() +
               " - class-incremental fault diagnosis experiments"};
  app.require_subcommand(1);

  ExperimentFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  register_flags(run, run_flags, true);

  ExperimentFlags ablate_flags;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "run the six-row component ablation grid into per-row subdirectories");
  register_flags(ablate, ablate_flags, false);

  SynthFlags synth_flags;
  CLI::App* synth = app.add_subcommand("synth", "generate a Gaussian-blob CSV dataset");
  synth->add_option("--classes", synth_flags.classes, "number of classes");
  synth->add_option("--dim", synth_flags.dim, "feature dimensionality");
  synth->add_option("--separation", synth_flags.separation,
                    "min class-mean distance in within-std units");
  synth->add_option("--std", synth_flags.within_std, "within-class std");
  synth->add_option("--samples", synth_flags.samples, "samples per class");
  synth->add_option("--seed", synth_flags.seed, "generator seed");
  synth->add_option("-o,--out", synth_flags.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (run->parsed()) return cmd_run(run_flags);
  if (ablate->parsed()) return cmd_ablate(ablate_flags);
  if (synth->parsed()) return cmd_synth(synth_flags);
  return kExitConfig;
}
