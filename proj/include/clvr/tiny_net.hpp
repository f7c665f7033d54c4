// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "clvr/rng.hpp"
#include "clvr/tensor_map.hpp"

namespace clvr::geom {

enum class Activation { tanh, identity };

/// Parameters of a fully connected net: layer l maps widths[l] -> widths[l+1]
/// as W_l x + b_l, with the activation on every layer but the last. Stored
/// in double; converts to/from "layer{l}.weight" / "layer{l}.bias" tensors.
struct NetParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static NetParams zeros(const std::vector<int>& widths);
  /// Gaussian init with std `scale / sqrt(fan_in)`; biases zero.
  static NetParams random(const std::vector<int>& widths, CounterRng& rng, double scale = 1.0);
  static NetParams from_tensors(const std::vector<int>& widths, const TensorMap& tensors);
  TensorMap to_tensors() const;

  std::vector<int> widths() const;
  /// Largest absolute entry.
  double max_abs() const;

  NetParams& operator+=(const NetParams& o);
  NetParams& operator-=(const NetParams& o);
  NetParams& operator*=(double s);
  friend NetParams operator+(NetParams a, const NetParams& b) { return a += b; }
  friend NetParams operator-(NetParams a, const NetParams& b) { return a -= b; }
  friend NetParams operator*(double s, NetParams a) { return a *= s; }
};

struct TinyNetSpec {
  std::vector<int> widths;
  Activation activation = Activation::tanh;
  TensorMap weights;
};

/// Single input (column vector).
Eigen::VectorXd forward(const NetParams& p, Activation act, const Eigen::VectorXd& x);
/// Batch, one sample per column.
Eigen::MatrixXd forward_batch(const NetParams& p, Activation act, const Eigen::MatrixXd& x);

/// Gradient of 0.5 * mean_j ||f(x_j) - y_j||^2 with respect to every
/// parameter, by backpropagation. Returns the loss through `loss`.
NetParams mse_gradient(const NetParams& p, Activation act, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       double* loss = nullptr);

/// Standard normal draw (Box-Muller on the counter stream).
double normal_draw(CounterRng& rng);

}  // namespace clvr::geom
