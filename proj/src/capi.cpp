#include "sclifd.h"

#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "sclifd/config.hpp"
#include "sclifd/dataio.hpp"
#include "sclifd/session.hpp"
#include "sclifd/version.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

int guard(const std::function<void()>& body) {
  try {
    body();
    g_last_error.clear();
    return SCLIFD_OK;
  } catch (const sclifd::ConfigError& e) {
    set_error(e.what());
    return SCLIFD_ERR_CONFIG;
  } catch (const std::exception& e) {
    set_error(e.what());
    return SCLIFD_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown error");
    return SCLIFD_ERR_RUNTIME;
  }
}

}  // namespace

struct sclifd_experiment_t {
  sclifd::RunConfig config;
  sclifd::ExperimentResult result;
  bool ran = false;
};

extern "C" {

const char* sclifd_version(void) { return sclifd::kVersion; }

const char* sclifd_last_error(void) { return g_last_error.c_str(); }

const char* sclifd_default_config_json(void) {
  static const std::string defaults = [] {
    sclifd::RunConfig cfg;
    return sclifd::config_to_json(cfg).dump(2);
  }();
  return defaults.c_str();
}

int sclifd_experiment_create(const char* config_json, sclifd_experiment_t** out_handle) {
  if (config_json == nullptr || out_handle == nullptr) {
    set_error("null argument");
    return SCLIFD_ERR_ARGUMENT;
  }
  *out_handle = nullptr;
  return guard([&] {
    auto handle = std::make_unique<sclifd_experiment_t>();
    handle->config = sclifd::parse_config_string(config_json);
    *out_handle = handle.release();
  });
}

int sclifd_experiment_run(sclifd_experiment_t* handle) {
  if (handle == nullptr) {
    set_error("null handle");
    return SCLIFD_ERR_ARGUMENT;
  }
  return guard([&] {
    handle->result = sclifd::run_experiment(handle->config);
    handle->ran = true;
  });
}

int sclifd_experiment_session_count(const sclifd_experiment_t* handle) {
  if (handle == nullptr || !handle->ran) return -1;
  return static_cast<int>(handle->result.reports.size());
}

double sclifd_experiment_accuracy(const sclifd_experiment_t* handle, int session) {
  if (handle == nullptr || !handle->ran) return -1.0;
  if (session < 1 || static_cast<std::size_t>(session) > handle->result.reports.size()) return -1.0;
  return handle->result.reports[static_cast<std::size_t>(session) - 1].joint_accuracy;
}

const char* sclifd_experiment_reports_json(const sclifd_experiment_t* handle) {
  if (handle == nullptr || !handle->ran) return nullptr;
  return handle->result.reports_json.c_str();
}

const char* sclifd_experiment_manifest_json(const sclifd_experiment_t* handle) {
  if (handle == nullptr || !handle->ran) return nullptr;
  return handle->result.manifest_json.c_str();
}

int sclifd_experiment_write_outputs(sclifd_experiment_t* handle, const char* out_dir) {
  if (handle == nullptr || out_dir == nullptr) {
    set_error("null argument");
    return SCLIFD_ERR_ARGUMENT;
  }
  if (!handle->ran) {
    set_error("experiment has not run yet");
    return SCLIFD_ERR_RUNTIME;
  }
  return guard([&] { sclifd::write_outputs(handle->result, out_dir); });
}

void sclifd_experiment_destroy(sclifd_experiment_t* handle) { delete handle; }

int sclifd_synth_csv(const char* blob_config_json, const char* csv_path) {
  if (blob_config_json == nullptr || csv_path == nullptr) {
    set_error("null argument");
    return SCLIFD_ERR_ARGUMENT;
  }
  return guard([&] {
    nlohmann::json wrapper;
    try {
      wrapper["dataset"]["blobs"] = nlohmann::json::parse(blob_config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw sclifd::ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    const sclifd::RunConfig cfg = sclifd::parse_config(wrapper);
    sclifd::write_csv(sclifd::synth_blobs(*cfg.blobs), csv_path);
  });
}

}  // extern "C"
