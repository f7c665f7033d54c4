// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// Numerical checks of the merge geometry on synthetic toys:
//   * additive task increments superpose to first order (second-order
//     remainder in the step scale),
//   * distillation-like increments act along the normal of a manifold while
//     alignment-like increments act along its tangent,
//   * a one-step jump plus a single-point evaluation of a windowed field
//     approximates the multi-step integral up to the field's temporal
//     variation.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "clvr/geometry.hpp"
#include "clvr/tiny_net.hpp"

namespace clvr::geom {

/// Least-squares slope of log(ys) against log(xs).
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// --- superposition ----------------------------------------------------------------

struct SuperpositionResult {
  double max_error = 0.0;
  std::vector<double> per_probe;
};

/// max_x || f(W + s(D1 + D2)) - f(W) - s J D1 - s J D2 ||, with each J D a
/// central difference whose perturbation has max-norm `fd_step`.
SuperpositionResult superposition_error(const NetParams& w, Activation act, const NetParams& d1,
                                        const NetParams& d2, double s, const Eigen::MatrixXd& probes,
                                        double fd_step = 1e-4);
SuperpositionResult superposition_error(const TinyNetSpec& net, const TensorMap& d1, const TensorMap& d2,
                                        double s, const Eigen::MatrixXd& probes, double fd_step = 1e-4);

struct SuperposeConfig {
  std::vector<int> widths{3, 16, 16, 2};
  Activation activation = Activation::tanh;
  std::uint64_t seed = 5;
  int probes = 32;
  double delta_scale = 0.5;
  std::vector<double> scales{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  double fd_step = 1e-4;
};

struct SuperposeSweep {
  std::vector<double> scales;
  std::vector<double> errors;
  double slope = 0.0;
};

/// Random net, two random deltas and random probes from `seed`, swept over
/// the configured scales.
SuperposeSweep run_superpose(const SuperposeConfig& config);

// --- normal/tangent decoupling ------------------------------------------------------

struct CosineStats {
  std::vector<double> cosines;  // per retained probe
  std::size_t excluded = 0;     // probes with a zero-norm increment
  double median_abs = 0.0;
  double mean_abs = 0.0;
  double max_abs = 0.0;
};

/// Cosine between f(W + D_distill) - f(W) and f(W + D_align) - f(W) per probe.
CosineStats increment_cosine(const NetParams& w, Activation act, const NetParams& d_distill,
                             const NetParams& d_align, const Eigen::MatrixXd& probes);
CosineStats increment_cosine(const TinyNetSpec& net, const TensorMap& d_distill, const TensorMap& d_align,
                             const Eigen::MatrixXd& probes);

/// Affine net whose distill increment is exactly radial and align increment
/// exactly tangential at every probe.
CosineStats constructed_decoupling_toy(std::uint64_t seed, int probes = 64);

struct DecoupleConfig {
  int hidden = 32;
  int train_points = 256;
  int probe_points = 64;
  double noise = 0.1;      // radial spread of inputs around the unit circle
  double rotation = 0.15;  // radians, for the align target
  int base_steps = 3000;
  int delta_steps = 10000;
  double learning_rate = 0.3;
  std::uint64_t seed = 13;
};

struct DecoupleResult {
  CosineStats stats;
  double base_loss = 0.0;
  double distill_loss = 0.0;
  double align_loss = 0.0;
  double distill_shift = 0.0;  // mean ||delta f_distill||
  double align_shift = 0.0;
};

/// Fits a base net to the identity near the unit circle, then trains a
/// distill delta towards pi(f_W(x)) and an align delta towards f_W(x)
/// rotated about the center, both by plain gradient descent.
DecoupleResult run_decouple(const DecoupleConfig& config);

// --- one-step truncation ---------------------------------------------------------------

/// dx/dtau = rate * x + U(tau), integrated from tau = 1 down to 0. U is
/// `align_direction * (1 + epsilon * cos(2 pi (tau - t_a) / (t_b - t_a)))`
/// inside [t_a, t_b] and zero outside.
struct OdeSetup {
  double contraction_rate = 1e-3;
  Eigen::Vector2d x1{1.0, 0.5};
  Eigen::Vector2d align_direction{0.3, -0.2};
  double t_a = 0.3;
  double t_b = 0.7;
  double epsilon = 0.1;
  int steps = 20000;

  void validate() const;
  Eigen::Vector2d align_field(double tau) const;
};

struct TruncationResult {
  double gap = 0.0;
  Eigen::Vector2d x_merge = Eigen::Vector2d::Zero();
  Eigen::Vector2d x_reference = Eigen::Vector2d::Zero();
};

/// Reference: RK4 over [1, t_b], [t_b, t_a], [t_a, 0] with `steps` steps in
/// total. Merge: exp(-rate) x1 - |I| U(t*) with t* the window midpoint.
TruncationResult truncation_gap(const OdeSetup& setup);

struct TruncationSweep {
  std::vector<double> epsilons;
  std::vector<double> gaps;
  double slope = 0.0;
};

TruncationSweep truncation_sweep(OdeSetup setup, const std::vector<double>& epsilons);

}  // namespace clvr::geom
