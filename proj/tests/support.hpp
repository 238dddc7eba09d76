#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "anemiakit/ingest.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ANEMIAKIT_FIXTURES) / name;
}

inline std::filesystem::path demo(const std::string& name) {
  return std::filesystem::path(ANEMIAKIT_DEMO) / name;
}

inline anemiakit::Dataset survey_counts() {
  auto schema = std::make_shared<anemiakit::DatasetSchema>(
      anemiakit::load_schema(fixture("survey_counts_schema.json")));
  return anemiakit::load_dataset_csv(fixture("survey_counts.csv"), schema);
}

inline anemiakit::Dataset demo_data() {
  auto schema = std::make_shared<anemiakit::DatasetSchema>(anemiakit::load_schema(demo("schema.json")));
  return anemiakit::load_dataset_csv(demo("data.csv"), schema);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("anemiakit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
