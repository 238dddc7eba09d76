#include <cmath>

#include "anemiakit/learners.hpp"

namespace anemiakit {

std::string_view learner_name(LearnerId id) {
  switch (id) {
    case LearnerId::kLR: return "LR";
    case LearnerId::kKNN: return "KNN";
    case LearnerId::kDT: return "DT";
    case LearnerId::kRF: return "RF";
    case LearnerId::kXGB: return "XGB";
    case LearnerId::kSVM: return "SVM";
    case LearnerId::kNB: return "NB";
    case LearnerId::kLDA: return "LDA";
    case LearnerId::kDNN: return "DNN";
  }
  return "?";
}

std::optional<LearnerId> parse_learner(std::string_view name) {
  for (auto id : kAllLearners) {
    if (learner_name(id) == name) return id;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

HyperParams::HyperParams(ojson values) : values_(std::move(values)) {
  if (values_.is_null()) values_ = ojson::object();
  if (!values_.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "hyperparameters must be a JSON object");
  }
}

const ojson& HyperParams::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "missing hyperparameter '" + key + "'");
  }
  return *it;
}

bool HyperParams::is_null(const std::string& key) const { return at(key).is_null(); }

double HyperParams::number(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_number()) {
    throw Error(ErrorCode::kInvalidArgument, "hyperparameter '" + key + "' must be numeric");
  }
  return v.get<double>();
}

int HyperParams::integer(const std::string& key) const {
  const double v = number(key);
  if (std::nearbyint(v) != v) {
    throw Error(ErrorCode::kInvalidArgument, "hyperparameter '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

bool HyperParams::flag(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_boolean()) {
    throw Error(ErrorCode::kInvalidArgument, "hyperparameter '" + key + "' must be boolean");
  }
  return v.get<bool>();
}

std::string HyperParams::text(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "hyperparameter '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<int> HyperParams::int_list(const std::string& key) const {
  const auto& v = at(key);
  if (!v.is_array()) {
    throw Error(ErrorCode::kInvalidArgument, "hyperparameter '" + key + "' must be a list");
  }
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<int>() < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "hyperparameter '" + key + "' must list positive integers");
    }
    out.push_back(e.get<int>());
  }
  return out;
}

HyperParams HyperParams::with(const std::string& key, ojson value) const {
  HyperParams copy = *this;
  copy.values_[key] = std::move(value);
  return copy;
}

// ---------------------------------------------------------------------------

void ClassifierModel::fit(const Eigen::MatrixXd& X, const Labels& y, const HyperParams& hp,
                          const FitOptions& options) {
  ojson resolved = parameter_defaults();
  for (const auto& [key, value] : hp.values().items()) {
    if (!resolved.contains(key)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown hyperparameter '" + key + "' for " +
                                                   std::string(learner_name(id())));
    }
    resolved[key] = value;
  }
  if (X.rows() == 0 || X.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty training matrix");
  }
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "row count and label count differ");
  }
  if (!X.allFinite()) throw Error(ErrorCode::kInvalidArgument, "training matrix is not finite");
  int positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0/1");
    positives += v;
  }
  if (positives == 0 || positives == static_cast<int>(y.size())) {
    throw Error(ErrorCode::kInvalidArgument, "both classes must be present to fit");
  }
  fitted_ = false;
  hp_ = HyperParams(std::move(resolved));
  n_columns_ = X.cols();
  do_fit(X, y, options);
  fitted_ = true;
}

Labels ClassifierModel::predict(const Eigen::MatrixXd& X) const {
  const Eigen::VectorXd p = predict_proba(X);
  Labels out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5;
  return out;
}

ojson ClassifierModel::to_json() const {
  require_fitted();
  ojson doc;
  doc["format_version"] = kModelFormatVersion;
  doc["learner"] = learner_name(id());
  doc["hyperparameters"] = hp_.values();
  doc["parameters"] = parameters();
  return doc;
}

void ClassifierModel::require_fitted() const {
  if (!fitted_) throw Error(ErrorCode::kInvalidArgument, "model is not fitted");
}

void ClassifierModel::check_input(const Eigen::MatrixXd& X) const {
  require_fitted();
  if (X.cols() != n_columns_) {
    throw Error(ErrorCode::kInvalidArgument, "expected " + std::to_string(n_columns_) +
                                                 " columns, got " + std::to_string(X.cols()));
  }
  if (!X.allFinite()) throw Error(ErrorCode::kInvalidArgument, "input matrix is not finite");
}

// ---------------------------------------------------------------------------

std::unique_ptr<ClassifierModel> make_learner(LearnerId id) {
  switch (id) {
    case LearnerId::kLR: return std::make_unique<LogisticModel>();
    case LearnerId::kKNN: return std::make_unique<KnnModel>();
    case LearnerId::kDT: return std::make_unique<TreeModel>();
    case LearnerId::kRF: return std::make_unique<ForestModel>();
    case LearnerId::kXGB: return std::make_unique<GbtModel>();
    case LearnerId::kSVM: return std::make_unique<SvmModel>();
    case LearnerId::kNB: return std::make_unique<NbModel>();
    case LearnerId::kLDA: return std::make_unique<LdaModel>();
    case LearnerId::kDNN: return std::make_unique<MlpModel>();
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown learner");
}

ojson default_grid_spec(LearnerId id, std::size_t n_columns) {
  const double d = static_cast<double>(std::max<std::size_t>(1, n_columns));
  ojson g;
  switch (id) {
    case LearnerId::kLR:
      g["l2"] = {0.01, 0.1, 1.0, 10.0};
      break;
    case LearnerId::kKNN:
      g["k"] = {5, 11, 21};
      break;
    case LearnerId::kDT:
      g["max_depth"] = {3, 5, 8, nullptr};
      break;
    case LearnerId::kRF:
      g["n_trees"] = {100, 300};
      g["m_features"] = {std::max(1L, std::lround(std::sqrt(d)))};
      break;
    case LearnerId::kXGB:
      g["n_rounds"] = {100, 300};
      g["eta"] = {0.05, 0.1, 0.3};
      g["max_depth"] = {3, 5};
      break;
    case LearnerId::kSVM:
      g["C"] = {0.1, 1.0, 10.0};
      g["kernel"] = {"linear", "rbf"};
      g["gamma"] = {1.0 / d};
      break;
    case LearnerId::kNB:
      g["alpha"] = {0.5, 1.0};
      break;
    case LearnerId::kLDA:
      g["epsilon"] = {1e-4, 1e-2};
      break;
    case LearnerId::kDNN:
      g["hidden_sizes"] = ojson::array({ojson::array({32}), ojson::array({64, 32})});
      g["lr"] = {1e-2, 1e-3};
      g["epochs"] = {200};
      break;
  }
  return g;
}

std::vector<HyperParams> expand_grid(const ojson& grid_spec) {
  if (!grid_spec.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "grid must be a JSON object of value lists");
  }
  std::vector<ojson> combos{ojson::object()};
  for (const auto& [key, values] : grid_spec.items()) {
    if (!values.is_array() || values.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "grid entry '" + key + "' must be a non-empty list");
    }
    std::vector<ojson> next;
    for (const auto& partial : combos) {
      for (const auto& v : values) {
        ojson c = partial;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    combos = std::move(next);
  }
  std::vector<HyperParams> out;
  out.reserve(combos.size());
  for (auto& c : combos) out.emplace_back(std::move(c));
  return out;
}

}  // namespace anemiakit
