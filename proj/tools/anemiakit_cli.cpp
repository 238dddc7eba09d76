// Command-line front end. Talks to the toolkit only through the C API.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "anemiakit/anemiakit.h"

namespace {

int report_failure(ak_status status, const char* what) {
  std::fprintf(stderr, "anemiakit: %s failed (%s): %s\n", what, ak_status_name(status), ak_last_error());
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anemia prediction benchmarking toolkit"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print toolkit and report-format versions");

  auto* run = app.add_subcommand("run", "Run the full workflow from a config file");
  std::string config_path;
  int jobs = 1;
  bool keep_going = false, emit_encoded = false, timings = false;
  int smote_k = 0;
  double smote_ratio = 0.0;
  run->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--keep-going", keep_going, "Record and skip models that fail to train");
  run->add_flag("--emit-encoded", emit_encoded, "Also write the encoded matrix (encoded.csv)");
  run->add_flag("--timings", timings, "Record wall-clock seconds per stage in manifest.json");
  run->add_option("--smote-k", smote_k, "Override SMOTE k_neighbors")->check(CLI::PositiveNumber);
  run->add_option("--smote-ratio", smote_ratio, "Override SMOTE target ratio")->check(CLI::Range(0.0, 1.0));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string spec_path, out_dir;
  std::uint64_t seed = 0;
  synth->add_option("--spec", spec_path, "Generator spec (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (show_version) {
    std::printf("anemiakit %s (report format %d)\n", ak_version(), ak_report_format_version());
    return 0;
  }
  if (*run) {
    ak_run_options opts;
    ak_run_options_init(&opts);
    opts.jobs = jobs;
    opts.keep_going = keep_going;
    opts.emit_encoded = emit_encoded;
    opts.timings = timings;
    opts.smote_k = smote_k;
    opts.smote_ratio = smote_ratio;
    const char* env_out = std::getenv("ANEMIAKIT_OUTPUT_DIR");
    if (env_out && *env_out) opts.output_dir = env_out;
    char* stage = nullptr;
    const ak_status status = ak_run_pipeline(config_path.c_str(), &opts, nullptr, &stage);
    if (status != AK_OK) {
      std::fprintf(stderr, "anemiakit: stage '%s' failed (%s): %s\n", stage ? stage : "?",
                   ak_status_name(status), ak_last_error());
      ak_string_free(stage);
      return static_cast<int>(status);
    }
    return 0;
  }
  if (*synth) {
    const ak_status status = ak_generate_synthetic(spec_path.c_str(), seed, out_dir.c_str());
    if (status != AK_OK) return report_failure(status, "synth");
    return 0;
  }
  std::fputs(app.help().c_str(), stdout);
  return 0;
}
