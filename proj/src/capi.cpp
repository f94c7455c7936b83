#include "egomo/egomo.h"

#include <exception>
#include <string>

#include "egomo/errors.hpp"
#include "egomo/pipeline.hpp"

struct egomo_ctx {
  egomo::pipeline::ExperimentConfig cfg;
  bool has_config = false;
  std::string last_error;
  std::string last_text;
};

namespace {

template <typename F>
egomo_status guarded(egomo_ctx* ctx, F&& body) {
  if (ctx == nullptr) return EGOMO_ERR_INVALID_ARGUMENT;
  ctx->last_error.clear();
  try {
    body();
    return EGOMO_OK;
  } catch (const egomo::Error& e) {
    ctx->last_error = e.what();
    return static_cast<egomo_status>(static_cast<int>(e.kind()));
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return EGOMO_ERR_UNKNOWN;
  } catch (...) {
    ctx->last_error = "unknown failure";
    return EGOMO_ERR_UNKNOWN;
  }
}

void need_config(const egomo_ctx* ctx) {
  egomo::require(ctx->has_config, egomo::ErrorKind::config,
                 "no config loaded; call egomo_load_config first");
}

std::string need_cstr(const char* s, const char* what) {
  egomo::require(s != nullptr, egomo::ErrorKind::invalid_argument,
                 std::string(what) + " must not be null");
  return s;
}

}  // namespace

extern "C" {

const char* egomo_version(void) { return "0.1.0"; }

egomo_ctx* egomo_ctx_new(void) {
  try {
    return new egomo_ctx();
  } catch (...) {
    return nullptr;
  }
}

void egomo_ctx_free(egomo_ctx* ctx) { delete ctx; }

const char* egomo_last_error(const egomo_ctx* ctx) {
  return ctx == nullptr ? "" : ctx->last_error.c_str();
}

egomo_status egomo_load_config(egomo_ctx* ctx, const char* path) {
  return guarded(ctx, [&] {
    ctx->cfg = egomo::pipeline::load_config(need_cstr(path, "path"));
    ctx->has_config = true;
  });
}

egomo_status egomo_config_digest(egomo_ctx* ctx, const char** digest) {
  return guarded(ctx, [&] {
    need_config(ctx);
    egomo::require(digest != nullptr, egomo::ErrorKind::invalid_argument,
                   "digest must not be null");
    ctx->last_text = ctx->cfg.digest();
    *digest = ctx->last_text.c_str();
  });
}

egomo_status egomo_run_datagen(egomo_ctx* ctx) {
  return guarded(ctx, [&] {
    need_config(ctx);
    egomo::pipeline::cmd_datagen(ctx->cfg);
  });
}

egomo_status egomo_run_train(egomo_ctx* ctx, const char* target) {
  return guarded(ctx, [&] {
    need_config(ctx);
    egomo::pipeline::cmd_train(ctx->cfg, need_cstr(target, "target"));
  });
}

egomo_status egomo_run_eval(egomo_ctx* ctx, const char* mode,
                            const char** report_text) {
  return guarded(ctx, [&] {
    need_config(ctx);
    egomo::metrics::MetricReport report =
        egomo::pipeline::cmd_eval(ctx->cfg, need_cstr(mode, "mode"));
    ctx->last_text = report.to_text();
    if (report_text != nullptr) *report_text = ctx->last_text.c_str();
  });
}

egomo_status egomo_run_pipeline(egomo_ctx* ctx, const char* input_path,
                                const char* gt_path, uint64_t seed,
                                const char** summary_text) {
  return guarded(ctx, [&] {
    need_config(ctx);
    std::string gt = gt_path == nullptr ? "" : gt_path;
    egomo::pipeline::PipelineResult result = egomo::pipeline::cmd_pipeline(
        ctx->cfg, need_cstr(input_path, "input_path"), gt, seed);
    if (result.has_report) {
      ctx->last_text = result.report.to_text();
    } else {
      ctx->last_text = "generated " + std::to_string(ctx->cfg.eval.k) +
                       " samples at " + ctx->cfg.paths.output + "\n";
    }
    if (summary_text != nullptr) *summary_text = ctx->last_text.c_str();
  });
}

}  // extern "C"
