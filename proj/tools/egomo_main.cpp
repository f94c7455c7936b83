#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <string>

#include "egomo/egomo.h"

namespace {

// Runs one body under a loaded config and maps the status to the exit code.
template <typename F>
int with_config(const std::string& config_path, F&& body) {
  egomo_ctx* ctx = egomo_ctx_new();
  if (ctx == nullptr) {
    std::fprintf(stderr, "egomo: out of memory\n");
    return EGOMO_ERR_UNKNOWN;
  }
  int code = egomo_load_config(ctx, config_path.c_str());
  if (code == EGOMO_OK) code = body(ctx);
  if (code != EGOMO_OK)
    std::fprintf(stderr, "egomo: %s\n", egomo_last_error(ctx));
  egomo_ctx_free(ctx);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egocentric head-pose and full-body motion pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(egomo_version()));

  std::string config_path, target, mode, input_path, gt_path;
  std::uint64_t seed = 0;

  CLI::App* datagen =
      app.add_subcommand("datagen", "build the synthetic dataset");
  datagen->add_option("--config", config_path, "experiment config JSON")
      ->required();

  CLI::App* train = app.add_subcommand("train", "train one model target");
  train->add_option("--config", config_path, "experiment config JSON")
      ->required();
  train->add_option("--target", target, "gravity, head or diffusion")
      ->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate one head-pose mode");
  eval->add_option("--config", config_path, "experiment config JSON")
      ->required();
  eval->add_option("--mode", mode, "slam, slam+s, slam+s+g, full or gt-head")
      ->required();

  CLI::App* pipeline =
      app.add_subcommand("pipeline", "run inference on one trajectory");
  pipeline->add_option("--config", config_path, "experiment config JSON")
      ->required();
  pipeline->add_option("--input", input_path, "trajectory container")
      ->required();
  pipeline->add_option("--gt", gt_path, "ground-truth motion container");
  pipeline->add_option("--seed", seed, "sampling seed")->required();

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(datagen)) {
    return with_config(config_path,
                       [](egomo_ctx* ctx) { return egomo_run_datagen(ctx); });
  }
  if (app.got_subcommand(train)) {
    return with_config(config_path, [&](egomo_ctx* ctx) {
      return egomo_run_train(ctx, target.c_str());
    });
  }
  if (app.got_subcommand(eval)) {
    return with_config(config_path, [&](egomo_ctx* ctx) {
      const char* text = nullptr;
      int code = egomo_run_eval(ctx, mode.c_str(), &text);
      if (code == EGOMO_OK && text != nullptr) std::fputs(text, stdout);
      return code;
    });
  }
  return with_config(config_path, [&](egomo_ctx* ctx) {
    const char* text = nullptr;
    int code = egomo_run_pipeline(
        ctx, input_path.c_str(), gt_path.empty() ? nullptr : gt_path.c_str(),
        seed, &text);
    if (code == EGOMO_OK && text != nullptr) std::fputs(text, stdout);
    return code;
  });
}
