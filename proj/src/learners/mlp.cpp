#include <cmath>
#include <numeric>

#include "anemiakit/learners.hpp"

namespace anemiakit {

namespace {

/// Backpropagation on a column-major batch (features x samples). Returns the
/// mean binary cross-entropy; `grads` receives d(loss)/d(params).
double backprop(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& Xt,
                const Eigen::VectorXd& y, std::vector<MlpLayer>& grads) {
  const std::size_t L = layers.size();
  const double n = static_cast<double>(Xt.cols());
  std::vector<Eigen::MatrixXd> acts(L + 1);
  acts[0] = Xt;
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = layers[l].weights * acts[l];
    z.colwise() += layers[l].bias;
    if (l + 1 < L) z = z.cwiseMax(0.0);
    acts[l + 1] = std::move(z);
  }
  const Eigen::RowVectorXd logits = acts[L].row(0);
  double loss = 0.0;
  Eigen::MatrixXd delta(1, Xt.cols());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits(i);
    loss += std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) - y(i) * z;
    delta(0, i) = (sigmoid(z) - y(i)) / n;
  }
  grads.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    grads[l].weights = delta * acts[l].transpose();
    grads[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
      // ReLU derivative: acts[l] > 0 exactly where the pre-activation was.
      delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss / n;
}

}  // namespace

ojson MlpModel::parameter_defaults() const {
  return {{"hidden_sizes", {64, 32}}, {"lr", 1e-3},          {"epochs", 200},
          {"batch", 32},              {"optimizer", "adam"}};
}

std::vector<MlpLayer> MlpModel::init_layers(int inputs, const std::vector<int>& hidden,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MlpLayer> layers;
  int fan_in = inputs;
  std::vector<int> sizes = hidden;
  sizes.push_back(1);
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const bool output = l + 1 == sizes.size();
    const double limit = output ? 1.0 / std::sqrt(fan_in) : std::sqrt(6.0 / fan_in);
    MlpLayer layer;
    layer.weights.resize(sizes[l], fan_in);
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        layer.weights(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
      }
    }
    layer.bias = Eigen::VectorXd::Zero(sizes[l]);
    layers.push_back(std::move(layer));
    fan_in = sizes[l];
  }
  return layers;
}

Eigen::VectorXd MlpModel::forward(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd h = X.transpose();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weights * h;
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  Eigen::VectorXd out(h.cols());
  for (Eigen::Index i = 0; i < h.cols(); ++i) out(i) = sigmoid(h(0, i));
  return out;
}

double MlpModel::loss_and_gradient(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& X,
                                   const Labels& y, Eigen::VectorXd* gradient) {
  Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) yv(static_cast<Eigen::Index>(i)) = y[i];
  std::vector<MlpLayer> grads;
  const double loss = backprop(layers, X.transpose(), yv, grads);
  if (gradient) *gradient = flatten(grads);
  return loss;
}

Eigen::VectorXd MlpModel::flatten(const std::vector<MlpLayer>& layers) {
  Eigen::Index total = 0;
  for (const auto& l : layers) total += l.weights.size() + l.bias.size();
  Eigen::VectorXd flat(total);
  Eigen::Index pos = 0;
  for (const auto& l : layers) {
    flat.segment(pos, l.weights.size()) = l.weights.reshaped();
    pos += l.weights.size();
    flat.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return flat;
}

void MlpModel::unflatten(const Eigen::VectorXd& flat, std::vector<MlpLayer>& layers) {
  Eigen::Index pos = 0;
  for (auto& l : layers) {
    l.weights.reshaped() = flat.segment(pos, l.weights.size());
    pos += l.weights.size();
    l.bias = flat.segment(pos, l.bias.size());
    pos += l.bias.size();
  }
  if (pos != flat.size()) throw Error(ErrorCode::kInvalidArgument, "parameter vector size mismatch");
}

void MlpModel::do_fit(const Eigen::MatrixXd& X, const Labels& y, const FitOptions& options) {
  const std::vector<int> hidden = hp_.int_list("hidden_sizes");
  if (hidden.empty()) throw Error(ErrorCode::kInvalidArgument, "hidden_sizes must be non-empty");
  const double lr = hp_.number("lr");
  const int epochs = hp_.integer("epochs");
  const int batch = hp_.integer("batch");
  const std::string optimizer = hp_.text("optimizer");
  if (!(lr > 0) || epochs < 1 || batch < 1) {
    throw Error(ErrorCode::kInvalidArgument, "lr, epochs and batch must be positive");
  }
  const bool adam = optimizer == "adam";
  if (!adam && optimizer != "sgd") {
    throw Error(ErrorCode::kInvalidArgument, "optimizer must be 'adam' or 'sgd'");
  }

  layers_ = init_layers(static_cast<int>(X.cols()), hidden, derive_seed(options.seed, "mlp-init"));
  Rng rng(derive_seed(options.seed, "mlp-batches"));
  const Eigen::MatrixXd Xt = X.transpose();
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<MlpLayer> grads, m1, m2;
  for (const auto& l : layers_) {
    m1.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                  Eigen::VectorXd::Zero(l.bias.size())});
  }
  m2 = m1;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  loss_history_.clear();
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(batch));
      const auto b = static_cast<Eigen::Index>(stop - start);
      xb.resize(Xt.rows(), b);
      yb.resize(b);
      for (Eigen::Index k = 0; k < b; ++k) {
        const auto row = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(k)]);
        xb.col(k) = Xt.col(row);
        yb(k) = y[static_cast<std::size_t>(row)];
      }
      const double loss = backprop(layers_, xb, yb, grads);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDiverged, "MLP training loss became non-finite at epoch " +
                                              std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(b);
      if (adam) {
        beta1_t *= kBeta1;
        beta2_t *= kBeta2;
        const double step = lr * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
          m1[l].weights = kBeta1 * m1[l].weights + (1 - kBeta1) * grads[l].weights;
          m2[l].weights = kBeta2 * m2[l].weights + (1 - kBeta2) * grads[l].weights.cwiseAbs2();
          m1[l].bias = kBeta1 * m1[l].bias + (1 - kBeta1) * grads[l].bias;
          m2[l].bias = kBeta2 * m2[l].bias + (1 - kBeta2) * grads[l].bias.cwiseAbs2();
          layers_[l].weights.array() -= step * m1[l].weights.array() / (m2[l].weights.array().sqrt() + kEps);
          layers_[l].bias.array() -= step * m1[l].bias.array() / (m2[l].bias.array().sqrt() + kEps);
        }
      } else {
        for (std::size_t l = 0; l < layers_.size(); ++l) {
          layers_[l].weights -= lr * grads[l].weights;
          layers_[l].bias -= lr * grads[l].bias;
        }
      }
    }
    loss_history_.push_back(epoch_loss / static_cast<double>(n));
  }
  for (const auto& l : layers_) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw Error(ErrorCode::kDiverged, "MLP weights became non-finite");
    }
  }
}

Eigen::VectorXd MlpModel::predict_proba(const Eigen::MatrixXd& X) const {
  check_input(X);
  return forward(layers_, X);
}

ojson MlpModel::parameters() const {
  ojson arr = ojson::array();
  for (const auto& l : layers_) {
    arr.push_back({{"rows", l.weights.rows()},
                   {"cols", l.weights.cols()},
                   {"weights", std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size())},
                   {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"activation", "relu"}, {"output", "sigmoid"}, {"layers", std::move(arr)}};
}

}  // namespace anemiakit
