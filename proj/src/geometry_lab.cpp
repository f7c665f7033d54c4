// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

#include "clvr/geometry_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "clvr/error.hpp"

namespace clvr::geom {

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw Error("bad_argument", "slope needs >= 2 paired points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw Error("bad_argument", "log-log slope needs positive values");
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxy += dx * (std::log(ys[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

// Central difference J_W D for every probe column.
Eigen::MatrixXd jvp(const NetParams& w, Activation act, const NetParams& d, const Eigen::MatrixXd& probes,
                    double fd_step) {
  const double scale = d.max_abs();
  if (scale == 0.0) return Eigen::MatrixXd::Zero(w.weights.back().rows(), probes.cols());
  const double h = fd_step / scale;
  const Eigen::MatrixXd plus = forward_batch(w + h * d, act, probes);
  const Eigen::MatrixXd minus = forward_batch(w - h * d, act, probes);
  return (plus - minus) / (2.0 * h);
}

Eigen::MatrixXd ring_points(CounterRng& rng, int count, double noise) {
  Eigen::MatrixXd x(2, count);
  for (int j = 0; j < count; ++j) {
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    const double r = std::clamp(1.0 + noise * normal_draw(rng), 0.5, 1.5);
    x(0, j) = r * std::cos(theta);
    x(1, j) = r * std::sin(theta);
  }
  return x;
}

NetParams descend(const NetParams& base, Activation act, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  int steps, double lr, NetParams start, double* final_loss) {
  NetParams d = std::move(start);
  double loss = 0.0;
  for (int k = 0; k < steps; ++k) {
    const NetParams g = mse_gradient(base + d, act, x, y, &loss);
    d -= lr * g;
  }
  mse_gradient(base + d, act, x, y, &loss);
  if (final_loss) *final_loss = loss;
  return d;
}

void summarize(CosineStats& s) {
  if (s.cosines.empty()) return;
  std::vector<double> a(s.cosines.size());
  std::transform(s.cosines.begin(), s.cosines.end(), a.begin(), [](double c) { return std::abs(c); });
  std::sort(a.begin(), a.end());
  s.median_abs = a[(a.size() - 1) / 2];
  s.mean_abs = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  s.max_abs = a.back();
}

}  // namespace

SuperpositionResult superposition_error(const NetParams& w, Activation act, const NetParams& d1,
                                        const NetParams& d2, double s, const Eigen::MatrixXd& probes,
                                        double fd_step) {
  if (!(s > 0.0)) throw Error("bad_argument", "scale s must be positive");
  const Eigen::MatrixXd f0 = forward_batch(w, act, probes);
  const Eigen::MatrixXd fs = forward_batch(w + s * (d1 + d2), act, probes);
  const Eigen::MatrixXd remainder = fs - f0 - s * jvp(w, act, d1, probes, fd_step) - s * jvp(w, act, d2, probes, fd_step);
  SuperpositionResult r;
  r.per_probe.resize(static_cast<std::size_t>(probes.cols()));
  for (Eigen::Index j = 0; j < probes.cols(); ++j) {
    r.per_probe[static_cast<std::size_t>(j)] = remainder.col(j).norm();
    r.max_error = std::max(r.max_error, r.per_probe[static_cast<std::size_t>(j)]);
  }
  return r;
}

SuperpositionResult superposition_error(const TinyNetSpec& net, const TensorMap& d1, const TensorMap& d2,
                                        double s, const Eigen::MatrixXd& probes, double fd_step) {
  return superposition_error(NetParams::from_tensors(net.widths, net.weights), net.activation,
                             NetParams::from_tensors(net.widths, d1), NetParams::from_tensors(net.widths, d2), s,
                             probes, fd_step);
}

SuperposeSweep run_superpose(const SuperposeConfig& config) {
  CounterRng rng(config.seed, 0x7375706572);
  const NetParams w = NetParams::random(config.widths, rng);
  const NetParams d1 = NetParams::random(config.widths, rng, config.delta_scale);
  const NetParams d2 = NetParams::random(config.widths, rng, config.delta_scale);
  Eigen::MatrixXd probes(config.widths.front(), config.probes);
  for (Eigen::Index j = 0; j < probes.cols(); ++j) {
    for (Eigen::Index i = 0; i < probes.rows(); ++i) probes(i, j) = normal_draw(rng);
  }
  SuperposeSweep sweep;
  sweep.scales = config.scales;
  for (double s : config.scales) {
    sweep.errors.push_back(superposition_error(w, config.activation, d1, d2, s, probes, config.fd_step).max_error);
  }
  const bool all_positive = std::all_of(sweep.errors.begin(), sweep.errors.end(), [](double e) { return e > 0.0; });
  if (sweep.scales.size() >= 2 && all_positive) sweep.slope = loglog_slope(sweep.scales, sweep.errors);
  return sweep;
}

CosineStats increment_cosine(const NetParams& w, Activation act, const NetParams& d_distill,
                             const NetParams& d_align, const Eigen::MatrixXd& probes) {
  const Eigen::MatrixXd f0 = forward_batch(w, act, probes);
  const Eigen::MatrixXd df = forward_batch(w + d_distill, act, probes) - f0;
  const Eigen::MatrixXd da = forward_batch(w + d_align, act, probes) - f0;
  CosineStats s;
  for (Eigen::Index j = 0; j < probes.cols(); ++j) {
    const double nf = df.col(j).norm();
    const double na = da.col(j).norm();
    if (nf == 0.0 || na == 0.0) {
      ++s.excluded;
      continue;
    }
    s.cosines.push_back(df.col(j).dot(da.col(j)) / (nf * na));
  }
  summarize(s);
  return s;
}

CosineStats increment_cosine(const TinyNetSpec& net, const TensorMap& d_distill, const TensorMap& d_align,
                             const Eigen::MatrixXd& probes) {
  return increment_cosine(NetParams::from_tensors(net.widths, net.weights), net.activation,
                          NetParams::from_tensors(net.widths, d_distill), NetParams::from_tensors(net.widths, d_align),
                          probes);
}

CosineStats constructed_decoupling_toy(std::uint64_t seed, int probes) {
  CounterRng rng(seed, 0x636f6e73);
  const Circle<double> circle(1.0);
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const Eigen::Vector2d p(std::cos(phi), std::sin(phi));
  const Eigen::Vector2d n = unit_normal(circle, p);
  const Eigen::Vector2d t = unit_tangent(circle, p);

  const std::vector<int> widths{2, 2};
  NetParams w = NetParams::zeros(widths);
  w.biases[0] = p;
  const Eigen::Vector2d u(normal_draw(rng), normal_draw(rng));
  const Eigen::Vector2d v(normal_draw(rng), normal_draw(rng));
  NetParams d_distill = NetParams::zeros(widths);
  d_distill.weights[0] = 0.05 * n * u.transpose();
  d_distill.biases[0] = 0.2 * n;
  NetParams d_align = NetParams::zeros(widths);
  d_align.weights[0] = 0.05 * t * v.transpose();
  d_align.biases[0] = 0.2 * t;

  Eigen::MatrixXd x(2, probes);
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = Eigen::Vector2d(normal_draw(rng), normal_draw(rng));
  return increment_cosine(w, Activation::identity, d_distill, d_align, x);
}

DecoupleResult run_decouple(const DecoupleConfig& config) {
  CounterRng rng(config.seed, 0x6465636f);
  const std::vector<int> widths{2, config.hidden, 2};
  const Circle<double> circle(1.0);
  const Eigen::MatrixXd x = ring_points(rng, config.train_points, config.noise);
  const Eigen::MatrixXd probes = ring_points(rng, config.probe_points, config.noise);

  DecoupleResult out;
  const NetParams init = NetParams::random(widths, rng);
  const NetParams zero = NetParams::zeros(widths);
  const NetParams base = descend(zero, Activation::tanh, x, x, config.base_steps, config.learning_rate, init,
                                 &out.base_loss);

  const Eigen::MatrixXd f = forward_batch(base, Activation::tanh, x);
  Eigen::MatrixXd distill_target(2, f.cols());
  Eigen::MatrixXd align_target(2, f.cols());
  const Eigen::Rotation2Dd rot(config.rotation);
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    distill_target.col(j) = project(circle, f.col(j));
    align_target.col(j) = circle.center + rot.toRotationMatrix() * (f.col(j) - circle.center);
  }
  const NetParams d_distill = descend(base, Activation::tanh, x, distill_target, config.delta_steps,
                                      config.learning_rate, zero, &out.distill_loss);
  const NetParams d_align = descend(base, Activation::tanh, x, align_target, config.delta_steps,
                                    config.learning_rate, zero, &out.align_loss);

  out.stats = increment_cosine(base, Activation::tanh, d_distill, d_align, probes);
  const Eigen::MatrixXd f0 = forward_batch(base, Activation::tanh, probes);
  out.distill_shift = (forward_batch(base + d_distill, Activation::tanh, probes) - f0).colwise().norm().mean();
  out.align_shift = (forward_batch(base + d_align, Activation::tanh, probes) - f0).colwise().norm().mean();
  return out;
}

void OdeSetup::validate() const {
  if (!(t_a >= 0.0 && t_a < t_b && t_b <= 1.0)) throw Error("bad_setup", "need 0 <= t_a < t_b <= 1");
  if (steps < 1) throw Error("bad_setup", "step count must be at least 1");
}

Eigen::Vector2d OdeSetup::align_field(double tau) const {
  if (tau < t_a || tau > t_b) return Eigen::Vector2d::Zero();
  const double phase = 2.0 * std::numbers::pi * (tau - t_a) / (t_b - t_a);
  return align_direction * (1.0 + epsilon * std::cos(phase));
}

namespace {

// RK4 from tau = from down to tau = to; the window field is on or off for
// the whole segment so no step straddles a discontinuity.
Eigen::Vector2d integrate_segment(const OdeSetup& s, Eigen::Vector2d x, double from, double to, int steps,
                                  bool window) {
  const double h = (to - from) / steps;
  auto field = [&](const Eigen::Vector2d& y, double tau) -> Eigen::Vector2d {
    Eigen::Vector2d v = s.contraction_rate * y;
    if (window) v += s.align_field(std::clamp(tau, s.t_a, s.t_b));
    return v;
  };
  for (int k = 0; k < steps; ++k) {
    const double tau = from + k * h;
    const Eigen::Vector2d k1 = field(x, tau);
    const Eigen::Vector2d k2 = field(x + 0.5 * h * k1, tau + 0.5 * h);
    const Eigen::Vector2d k3 = field(x + 0.5 * h * k2, tau + 0.5 * h);
    const Eigen::Vector2d k4 = field(x + h * k3, tau + h);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

}  // namespace

TruncationResult truncation_gap(const OdeSetup& setup) {
  setup.validate();
  struct Segment {
    double from, to;
    bool window;
  };
  const Segment segments[] = {{1.0, setup.t_b, false}, {setup.t_b, setup.t_a, true}, {setup.t_a, 0.0, false}};
  Eigen::Vector2d x = setup.x1;
  for (const auto& seg : segments) {
    const double length = seg.from - seg.to;
    if (length <= 0.0) continue;
    const int n = std::max(1, static_cast<int>(std::lround(setup.steps * length)));
    x = integrate_segment(setup, x, seg.from, seg.to, n, seg.window);
  }
  TruncationResult r;
  r.x_reference = x;
  const double t_star = 0.5 * (setup.t_a + setup.t_b);
  r.x_merge = std::exp(-setup.contraction_rate) * setup.x1 - (setup.t_b - setup.t_a) * setup.align_field(t_star);
  r.gap = (r.x_merge - r.x_reference).norm();
  return r;
}

TruncationSweep truncation_sweep(OdeSetup setup, const std::vector<double>& epsilons) {
  TruncationSweep sweep;
  sweep.epsilons = epsilons;
  for (double e : epsilons) {
    setup.epsilon = e;
    sweep.gaps.push_back(truncation_gap(setup).gap);
  }
  const bool all_positive = std::all_of(sweep.gaps.begin(), sweep.gaps.end(), [](double g) { return g > 0.0; });
  if (epsilons.size() >= 2 && all_positive) sweep.slope = loglog_slope(sweep.epsilons, sweep.gaps);
  return sweep;
}

}  // namespace clvr::geom
