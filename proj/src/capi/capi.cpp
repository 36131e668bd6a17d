#include "vbp/vbp.h"

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/errors.hpp"
#include "core/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

vbp_status fail(vbp_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Maps the core exception taxonomy onto status codes.
template <typename Fn>
vbp_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const vbp::ConfigError& e) {
    return fail(VBP_ERR_CONFIG, e.what());
  } catch (const vbp::NumericError& e) {
    return fail(VBP_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(VBP_ERR_DATA, e.what());
  }
}

void fill_prediction(const vbp::EstimatorOutput& out, const std::string& target,
                     vbp_prediction* dst) {
  dst->fused = out.fused;
  dst->regressed = out.reg_value;
  dst->group = out.group;
  for (int i = 0; i < 4; ++i) dst->class_probs[i] = out.class_probs[i];
  std::snprintf(dst->target, sizeof(dst->target), "%s", target.c_str());
}

}  // namespace

struct vbp_config {
  vbp::RunConfig impl;
};

struct vbp_model {
  vbp::Predictor impl;
};

extern "C" {

const char* vbp_version(void) { return "1.0.0"; }

const char* vbp_last_error(void) { return g_last_error.c_str(); }

vbp_config* vbp_config_new(void) { return new vbp_config{}; }

void vbp_config_free(vbp_config* cfg) { delete cfg; }

vbp_status vbp_config_load_file(vbp_config* cfg, const char* path) {
  if (!cfg || !path) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    cfg->impl = vbp::RunConfig::load_file(path);
    return VBP_OK;
  });
}

vbp_status vbp_config_set(vbp_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    cfg->impl.set(key, value);
    return VBP_OK;
  });
}

vbp_status vbp_config_get(const vbp_config* cfg, const char* key, char* buf, size_t buf_size) {
  if (!cfg || !key || !buf) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    const std::string& value = cfg->impl.get(key);
    if (value.size() + 1 > buf_size) {
      return fail(VBP_ERR_CONFIG,
                  vbp::msg("buffer too small for key '", key, "' (need ", value.size() + 1, ")"));
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
    return VBP_OK;
  });
}

vbp_status vbp_config_save_file(const vbp_config* cfg, const char* path) {
  if (!cfg || !path) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    cfg->impl.save_file(path);
    return VBP_OK;
  });
}

vbp_status vbp_synth(const vbp_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    vbp::run_synth(cfg->impl, out_dir);
    return VBP_OK;
  });
}

vbp_status vbp_prepare(const vbp_config* cfg, const char* manifest_path, const char* out_dir) {
  if (!cfg || !manifest_path || !out_dir) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    vbp::PrepareResult result = vbp::run_prepare(cfg->impl, manifest_path, out_dir);
    if (!result.failures.empty()) {
      std::string message =
          vbp::msg(result.failures.size(), " sample(s) failed, ", result.written, " written");
      for (const auto& f : result.failures) message += "\n  " + f;
      return fail(VBP_ERR_DATA, message);
    }
    return VBP_OK;
  });
}

vbp_status vbp_train(const vbp_config* cfg, const char* manifest_path, const char* out_dir) {
  if (!cfg || !manifest_path || !out_dir) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    vbp::run_train(cfg->impl, manifest_path, out_dir);
    return VBP_OK;
  });
}

vbp_status vbp_evaluate(const vbp_config* cfg, const char* manifest_path,
                        const char* const* checkpoint_paths, size_t checkpoint_count,
                        const char* out_dir) {
  if (!cfg || !manifest_path || !checkpoint_paths || !out_dir) {
    return fail(VBP_ERR_CONFIG, "null argument");
  }
  return guarded([&] {
    std::vector<std::string> paths(checkpoint_paths, checkpoint_paths + checkpoint_count);
    vbp::run_evaluate(cfg->impl, manifest_path, paths, out_dir);
    return VBP_OK;
  });
}

vbp_status vbp_model_open(const char* checkpoint_path, vbp_model** out_model) {
  if (!checkpoint_path || !out_model) return fail(VBP_ERR_CONFIG, "null argument");
  *out_model = nullptr;
  return guarded([&] {
    *out_model = new vbp_model{vbp::Predictor(checkpoint_path)};
    return VBP_OK;
  });
}

void vbp_model_free(vbp_model* model) { delete model; }

vbp_status vbp_model_predict_file(vbp_model* model, const char* stm_path, vbp_prediction* out) {
  if (!model || !stm_path || !out) return fail(VBP_ERR_CONFIG, "null argument");
  return guarded([&] {
    fill_prediction(model->impl.predict_file(stm_path), model->impl.target(), out);
    return VBP_OK;
  });
}

vbp_status vbp_model_predict_raw(vbp_model* model, const char* frames_path,
                                 const char* landmarks_path, vbp_prediction* out) {
  if (!model || !frames_path || !landmarks_path || !out) {
    return fail(VBP_ERR_CONFIG, "null argument");
  }
  return guarded([&] {
    fill_prediction(model->impl.predict_raw(frames_path, landmarks_path), model->impl.target(),
                    out);
    return VBP_OK;
  });
}

}  // extern "C"
