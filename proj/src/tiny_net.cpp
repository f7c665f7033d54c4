// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/tiny_net.hpp"

#include <cmath>
#include <numbers>

#include "clvr/error.hpp"

namespace clvr::geom {

namespace {

void check_widths(const std::vector<int>& widths) {
  if (widths.size() < 2) throw Error("bad_net", "a net needs at least input and output widths");
  for (int w : widths) {
    if (w < 1) throw Error("bad_net", "layer widths must be positive");
  }
}

std::string weight_name(std::size_t l) { return "layer" + std::to_string(l) + ".weight"; }
std::string bias_name(std::size_t l) { return "layer" + std::to_string(l) + ".bias"; }

}  // namespace

double normal_draw(CounterRng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

NetParams NetParams::zeros(const std::vector<int>& widths) {
  check_widths(widths);
  NetParams p;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(widths[l + 1], widths[l]));
    p.biases.push_back(Eigen::VectorXd::Zero(widths[l + 1]));
  }
  return p;
}

NetParams NetParams::random(const std::vector<int>& widths, CounterRng& rng, double scale) {
  NetParams p = zeros(widths);
  for (auto& w : p.weights) {
    const double sd = scale / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = sd * normal_draw(rng);
    }
  }
  return p;
}

NetParams NetParams::from_tensors(const std::vector<int>& widths, const TensorMap& tensors) {
  NetParams p = zeros(widths);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    auto wi = tensors.find(weight_name(l));
    auto bi = tensors.find(bias_name(l));
    if (wi == tensors.end() || bi == tensors.end()) {
      throw Error("shape_mismatch", "missing tensors for layer " + std::to_string(l));
    }
    const auto expected_w = std::vector<std::int64_t>{p.weights[l].rows(), p.weights[l].cols()};
    if (wi->second.shape != expected_w || bi->second.numel() != static_cast<std::size_t>(p.biases[l].size())) {
      throw Error("shape_mismatch", "layer " + std::to_string(l) + " tensors do not match the widths");
    }
    p.weights[l] = wi->second.matrix().cast<double>();
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = bi->second.data[static_cast<std::size_t>(i)];
  }
  return p;
}

TensorMap NetParams::to_tensors() const {
  TensorMap out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.emplace(weight_name(l), Tensor::from_matrix(weights[l]));
    std::vector<float> b(static_cast<std::size_t>(biases[l].size()));
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) b[static_cast<std::size_t>(i)] = static_cast<float>(biases[l](i));
    out.emplace(bias_name(l), Tensor({biases[l].size()}, std::move(b)));
  }
  return out;
}

std::vector<int> NetParams::widths() const {
  std::vector<int> w;
  if (weights.empty()) return w;
  w.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& m : weights) w.push_back(static_cast<int>(m.rows()));
  return w;
}

double NetParams::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

NetParams& NetParams::operator+=(const NetParams& o) {
  if (o.weights.size() != weights.size()) throw Error("shape_mismatch", "parameter structures differ");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += o.weights[l];
    biases[l] += o.biases[l];
  }
  return *this;
}

NetParams& NetParams::operator-=(const NetParams& o) {
  if (o.weights.size() != weights.size()) throw Error("shape_mismatch", "parameter structures differ");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] -= o.weights[l];
    biases[l] -= o.biases[l];
  }
  return *this;
}

NetParams& NetParams::operator*=(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
  return *this;
}

Eigen::MatrixXd forward_batch(const NetParams& p, Activation act, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Eigen::MatrixXd z = p.weights[l] * h;
    z.colwise() += p.biases[l];
    const bool hidden = l + 1 < p.weights.size();
    h = (hidden && act == Activation::tanh) ? Eigen::MatrixXd(z.array().tanh()) : z;
  }
  return h;
}

Eigen::VectorXd forward(const NetParams& p, Activation act, const Eigen::VectorXd& x) {
  return forward_batch(p, act, x);
}

NetParams mse_gradient(const NetParams& p, Activation act, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       double* loss) {
  const std::size_t layers = p.weights.size();
  const double batch = static_cast<double>(x.cols());
  std::vector<Eigen::MatrixXd> inputs(layers);  // h_{l} fed into layer l
  std::vector<Eigen::MatrixXd> pre(layers);
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    inputs[l] = h;
    pre[l] = p.weights[l] * h;
    pre[l].colwise() += p.biases[l];
    const bool hidden = l + 1 < layers;
    h = (hidden && act == Activation::tanh) ? Eigen::MatrixXd(pre[l].array().tanh()) : pre[l];
  }
  const Eigen::MatrixXd residual = h - y;
  if (loss) *loss = 0.5 * residual.squaredNorm() / batch;

  NetParams grad = NetParams::zeros(p.widths());
  Eigen::MatrixXd delta = residual / batch;
  for (std::size_t l = layers; l-- > 0;) {
    const bool hidden = l + 1 < layers;
    if (hidden && act == Activation::tanh) {
      delta = delta.cwiseProduct((1.0 - pre[l].array().tanh().square()).matrix());
    }
    grad.weights[l] = delta * inputs[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l > 0) delta = p.weights[l].transpose() * delta;
  }
  return grad;
}

}  // namespace clvr::geom
