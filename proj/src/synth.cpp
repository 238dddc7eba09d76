#include "anemiakit/synth.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace anemiakit {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void SyntheticSpec::validate() const {
  if (n_rows < 1) throw Error(ErrorCode::kInvalidArgument, "n_rows must be >= 1");
  if (!std::isfinite(intercept)) throw Error(ErrorCode::kInvalidArgument, "intercept must be finite");
  if (features.empty()) throw Error(ErrorCode::kInvalidArgument, "generator needs at least one feature");
  schema().validate();
  for (const auto& f : features) {
    const auto L = f.spec.levels.size();
    if (f.probabilities.size() != L || f.log_odds.size() != L) {
      throw Error(ErrorCode::kInvalidArgument,
                  "feature '" + f.spec.name + "' needs one probability and one log-odds per level");
    }
    double total = 0.0;
    for (double p : f.probabilities) {
      if (!(p >= 0) || !std::isfinite(p)) {
        throw Error(ErrorCode::kInvalidArgument, "invalid probability for feature '" + f.spec.name + "'");
      }
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "probabilities of '" + f.spec.name + "' do not sum to 1");
    }
    for (double b : f.log_odds) {
      if (!std::isfinite(b)) throw Error(ErrorCode::kInvalidArgument, "non-finite log-odds for '" + f.spec.name + "'");
    }
    if (!(f.missing_rate >= 0 && f.missing_rate < 1)) {
      throw Error(ErrorCode::kInvalidArgument, "missing_rate of '" + f.spec.name + "' must lie in [0, 1)");
    }
    if (f.missing_rate > 0 && f.spec.impute == ImputeRule::kNone) {
      throw Error(ErrorCode::kInvalidArgument, "feature '" + f.spec.name + "' has missing cells but no impute rule");
    }
  }
}

SyntheticSpec SyntheticSpec::from_json(const json& doc) {
  SyntheticSpec spec;
  try {
    json schema_doc = {{"label_name", doc.value("label_name", spec.label_name)},
                       {"features", doc.at("features")},
                       {"forced_includes", doc.value("forced_includes", std::vector<std::string>{})}};
    const DatasetSchema schema = DatasetSchema::from_json(schema_doc);
    spec.n_rows = doc.value("n_rows", spec.n_rows);
    spec.intercept = doc.value("intercept", 0.0);
    spec.label_name = schema.label_name;
    spec.forced_includes = schema.forced_includes;
    const auto& feats = doc.at("features");
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
      SyntheticFeature f;
      f.spec = schema.features[i];
      const auto& fd = feats[i];
      const std::size_t L = f.spec.levels.size();
      f.probabilities = fd.contains("probabilities") ? fd["probabilities"].get<std::vector<double>>()
                                                     : std::vector<double>(L, 1.0 / static_cast<double>(L));
      if (fd.contains("log_odds")) {
        f.log_odds = fd["log_odds"].get<std::vector<double>>();
      } else if (fd.contains("slope")) {
        // Linear in level rank.
        const double slope = fd["slope"].get<double>();
        for (std::size_t l = 0; l < L; ++l) f.log_odds.push_back(slope * static_cast<double>(l) + 0.0);
      } else {
        f.log_odds.assign(L, 0.0);
      }
      f.missing_rate = fd.value("missing_rate", 0.0);
      spec.features.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("generator spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

DatasetSchema SyntheticSpec::schema() const {
  DatasetSchema s;
  s.label_name = label_name;
  s.forced_includes = forced_includes;
  for (const auto& f : features) s.features.push_back(f.spec);
  return s;
}

std::vector<double> SyntheticSpec::true_log_odds(const Dataset& ds) const {
  if (ds.n_features() != features.size()) throw Error(ErrorCode::kInvalidArgument, "dataset does not match generator");
  std::vector<double> eta(ds.n_rows(), intercept);
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& col = ds.column(f);
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] += features[f].log_odds[static_cast<std::size_t>(col[i])];
  }
  return eta;
}

double SyntheticSpec::model_intercept() const {
  double b = intercept;
  for (const auto& f : features) {
    b += f.spec.kind == FeatureKind::kOrdinal ? f.log_odds.front()
                                               : f.log_odds[static_cast<std::size_t>(f.spec.reference_index())];
  }
  return b;
}

Eigen::VectorXd SyntheticSpec::model_coefficients(const EncodedMatrix& m) const {
  Eigen::VectorXd beta(static_cast<Eigen::Index>(m.cols()));
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto& origin = m.column_map[c];
    const auto& f = features.at(static_cast<std::size_t>(origin.feature));
    const double ref = f.log_odds[static_cast<std::size_t>(f.spec.reference_index())];
    double b;
    if (origin.level >= 0) {
      b = f.log_odds[static_cast<std::size_t>(origin.level)] - ref;
    } else if (f.spec.kind == FeatureKind::kBinary) {
      b = f.log_odds[static_cast<std::size_t>(1 - f.spec.reference_index())] - ref;
    } else {
      const double slope = f.log_odds.size() > 1 ? f.log_odds[1] - f.log_odds[0] : 0.0;
      for (std::size_t l = 0; l < f.log_odds.size(); ++l) {
        if (std::fabs(f.log_odds[l] - f.log_odds[0] - slope * static_cast<double>(l)) > 1e-9) {
          throw Error(ErrorCode::kInvalidArgument,
                      "ordinal feature '" + f.spec.name + "' has log-odds that are not linear in rank");
        }
      }
      b = slope;
    }
    beta(static_cast<Eigen::Index>(c)) = b;
  }
  return beta;
}

SyntheticSpec load_synthetic_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open generator spec " + path.string());
  try {
    return SyntheticSpec::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "generator spec is not valid JSON: " + std::string(e.what()));
  }
}

namespace {

int draw_level(Rng& rng, const std::vector<double>& probs) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t l = 0; l < probs.size(); ++l) {
    acc += probs[l];
    if (u < acc) return static_cast<int>(l);
  }
  // Rounding residue: last level with positive mass.
  for (std::size_t l = probs.size(); l-- > 0;) {
    if (probs[l] > 0) return static_cast<int>(l);
  }
  return 0;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

SyntheticSample sample_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, "synth-rows"));
  const std::size_t n = spec.n_rows;
  std::vector<std::vector<int>> cols(spec.features.size(), std::vector<int>(n));
  Labels y(n);
  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = spec.intercept;
    for (std::size_t f = 0; f < spec.features.size(); ++f) {
      const int level = draw_level(rng, spec.features[f].probabilities);
      cols[f][i] = level;
      z += spec.features[f].log_odds[static_cast<std::size_t>(level)];
    }
    eta[i] = z;
    y[i] = rng.uniform() < sigmoid(z) ? 1 : 0;
  }
  auto schema = std::make_shared<DatasetSchema>(spec.schema());
  return {Dataset(std::move(schema), std::move(cols), std::move(y)), std::move(eta)};
}

void generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed, const fs::path& out_dir) {
  const SyntheticSample sample = sample_synthetic(spec, seed);
  const Dataset& ds = sample.data;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string());

  Rng miss(derive_seed(seed, "synth-missing"));
  std::ofstream csv(out_dir / "data.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw Error(ErrorCode::kIo, "cannot write " + (out_dir / "data.csv").string());
  for (const auto& f : spec.features) csv << csv_field(f.spec.name) << ',';
  csv << csv_field(spec.label_name) << '\n';
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t f = 0; f < spec.features.size(); ++f) {
      const double rate = spec.features[f].missing_rate;
      // The draw happens for every cell so missingness in one feature does
      // not shift the stream for the others.
      const bool missing = miss.uniform() < rate;
      csv << (missing ? std::string("NA") : csv_field(ds.category(i, f))) << ',';
    }
    csv << ds.labels()[i] << '\n';
  }
  if (!csv) throw Error(ErrorCode::kIo, "write failed for data.csv");

  std::ofstream schema_out(out_dir / "schema.json", std::ios::binary | std::ios::trunc);
  schema_out << spec.schema().to_json().dump(2) << '\n';

  ojson truth = ojson::object();
  truth["seed"] = seed;
  truth["n_rows"] = spec.n_rows;
  truth["intercept"] = spec.intercept;
  ojson feats = ojson::object();
  for (const auto& f : spec.features) {
    ojson levels = ojson::object();
    for (std::size_t l = 0; l < f.spec.levels.size(); ++l) levels[f.spec.levels[l]] = f.log_odds[l];
    feats[f.spec.name] = std::move(levels);
  }
  truth["log_odds"] = std::move(feats);
  const long positives = std::count(ds.labels().begin(), ds.labels().end(), 1);
  truth["anemic"] = positives;
  truth["prevalence"] = static_cast<double>(positives) / static_cast<double>(ds.n_rows());
  try {
    const EncodedMatrix enc = encode(ds);
    const Eigen::VectorXd beta = spec.model_coefficients(enc);
    ojson coef = ojson::object();
    for (std::size_t c = 0; c < enc.cols(); ++c) coef[enc.column_map[c].name] = beta(static_cast<Eigen::Index>(c));
    truth["model_intercept"] = spec.model_intercept();
    truth["model_coefficients"] = std::move(coef);
  } catch (const Error&) {
    truth["model_coefficients"] = nullptr;
  }
  std::ofstream truth_out(out_dir / "truth.json", std::ios::binary | std::ios::trunc);
  truth_out << truth.dump(2) << '\n';
  if (!schema_out || !truth_out) throw Error(ErrorCode::kIo, "write failed in " + out_dir.string());
}

}  // namespace anemiakit
