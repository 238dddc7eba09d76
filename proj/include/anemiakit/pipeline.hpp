#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anemiakit/balance.hpp"
#include "anemiakit/learners.hpp"
#include "anemiakit/select.hpp"

namespace anemiakit {

inline constexpr std::string_view kToolkitVersion = "1.0.0";
inline constexpr int kReportFormatVersion = 1;

struct ModelSpec {
  LearnerId id = LearnerId::kLR;
  // Grid override: key -> list of values. Default grid when absent.
  std::optional<ojson> grid;
};

struct PipelineConfig {
  std::filesystem::path data_path;
  std::filesystem::path schema_path;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  double test_frac = 0.2;
  bool smote_enabled = true;
  SmoteConfig smote;
  SelectionConfig selection;
  int n_folds = 5;
  int n_repeats = 3;
  std::vector<ModelSpec> models;

  /// Relative paths are resolved against `base_dir`. Unknown keys and a
  /// missing seed are rejected.
  static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
  ojson to_json() const;
  /// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
  std::string hash() const;
  void validate() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct RunOptions {
  int jobs = 1;
  bool keep_going = false;
  bool emit_encoded = false;
  // Adds wall-clock seconds per stage to the manifest (breaks byte identity).
  bool timings = false;
  std::optional<std::filesystem::path> output_dir;
  std::function<void(std::string_view)> log;
};

struct RunResult {
  bool ok = false;
  std::string failed_stage;
  std::string error;
  ErrorCode error_code = ErrorCode::kInternal;
  std::filesystem::path output_dir;
  ojson manifest;
};

/// ingest -> select -> per-model grid search with fold-internal SMOTE ->
/// refit -> evaluate -> epi. Never throws for stage failures: outputs written
/// so far are removed and manifest.json records the failing stage.
RunResult run_pipeline(const PipelineConfig& cfg, const RunOptions& options = {});

}  // namespace anemiakit
