#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "anemiakit/ingest.hpp"

namespace anemiakit {

struct SyntheticFeature {
  FeatureSpec spec;
  // Sampling probability per level; must sum to 1 within 1e-9.
  std::vector<double> probabilities;
  // True log-odds contribution per level; the reference level's entry is
  // the baseline and is usually 0.
  std::vector<double> log_odds;
  // Fraction of cells written as missing (needs an impute rule).
  double missing_rate = 0.0;
};

struct SyntheticSpec {
  std::size_t n_rows = 2000;
  double intercept = 0.0;
  std::string label_name = "anemia";
  std::vector<SyntheticFeature> features;
  std::vector<std::string> forced_includes;

  void validate() const;
  static SyntheticSpec from_json(const nlohmann::json& doc);
  DatasetSchema schema() const;
  /// True log-odds of every row of `ds` (same schema layout).
  std::vector<double> true_log_odds(const Dataset& ds) const;
  /// Generating coefficients in `encode` layout (ordinal features must have
  /// log-odds linear in rank); throws kInvalidArgument otherwise.
  Eigen::VectorXd model_coefficients(const EncodedMatrix& m) const;
  /// Intercept matching `model_coefficients` (reference or rank-0 baseline).
  double model_intercept() const;
};

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

struct SyntheticSample {
  // Complete cells (before missingness is applied) as level codes.
  Dataset data;
  std::vector<double> log_odds;
};

/// Draws categorical features then labels from the logistic model.
SyntheticSample sample_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Writes data.csv, schema.json and truth.json into `out_dir`.
void generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace anemiakit
