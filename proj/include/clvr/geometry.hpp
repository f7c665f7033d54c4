// Copyright 2026 The clvr Authors
// SPDX-License-Identifier: Apache-2.0

// Circle manifold in the plane: nearest-point projection, the
// Tweedie-style normal pull (pi(x) - x) / sigma^2, and the exact
// normal/tangent split of a vector at pi(x).

#pragma once

#include <cmath>

#include <Eigen/Core>

#include "clvr/error.hpp"

namespace clvr::geom {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct Circle {
  Scalar radius = Scalar(1);
  Vec2<Scalar> center = Vec2<Scalar>::Zero();

  Circle() = default;
  Circle(Scalar r, Vec2<Scalar> c = Vec2<Scalar>::Zero()) : radius(r), center(std::move(c)) {
    if (!(radius > Scalar(0))) throw Error("bad_manifold", "circle radius must be positive");
  }
};

/// Outward unit normal at pi(x). Throws at the center, where pi is undefined.
template <typename Scalar, typename Derived>
Vec2<Scalar> unit_normal(const Circle<Scalar>& m, const Eigen::MatrixBase<Derived>& x) {
  const Vec2<Scalar> r = x - m.center;
  const Scalar n = r.norm();
  if (n == Scalar(0)) throw Error("degenerate", "projection undefined at the circle center");
  return r / n;
}

/// Counter-clockwise unit tangent at pi(x).
template <typename Scalar, typename Derived>
Vec2<Scalar> unit_tangent(const Circle<Scalar>& m, const Eigen::MatrixBase<Derived>& x) {
  const Vec2<Scalar> n = unit_normal(m, x);
  return Vec2<Scalar>(-n.y(), n.x());
}

template <typename Scalar, typename Derived>
Vec2<Scalar> project(const Circle<Scalar>& m, const Eigen::MatrixBase<Derived>& x) {
  return m.center + m.radius * unit_normal(m, x);
}

/// Signed distance from the circle, positive outside.
template <typename Scalar, typename Derived>
Scalar signed_distance(const Circle<Scalar>& m, const Eigen::MatrixBase<Derived>& x) {
  return (x - m.center).norm() - m.radius;
}

/// (pi(x) - x) / sigma^2. Requires sigma > 0 and x inside the tubular
/// neighbourhood |dist| < radius.
template <typename Scalar, typename Derived>
Vec2<Scalar> normal_score(const Circle<Scalar>& m, const Eigen::MatrixBase<Derived>& x, Scalar sigma) {
  if (!(sigma > Scalar(0))) throw Error("bad_sigma", "sigma must be positive");
  if (!(std::abs(signed_distance(m, x)) < m.radius)) {
    throw Error("outside_neighbourhood", "point lies outside the tubular neighbourhood");
  }
  return (project(m, x) - x) / (sigma * sigma);
}

template <typename Scalar>
struct NormalTangent {
  Vec2<Scalar> normal;
  Vec2<Scalar> tangent;
};

/// v = v_N + v_T with v_N along the normal at pi(x) and v_T along the
/// tangent. Both parts are built from the orthonormal frame (n, t) with
/// t = (-n_y, n_x), so <v_N, v_T> vanishes up to one rounding of each
/// coordinate product.
template <typename Scalar, typename DerivedX, typename DerivedV>
NormalTangent<Scalar> decompose(const Circle<Scalar>& m, const Eigen::MatrixBase<DerivedX>& x,
                                const Eigen::MatrixBase<DerivedV>& v) {
  const Vec2<Scalar> n = unit_normal(m, x);
  const Vec2<Scalar> t(-n.y(), n.x());
  return {n * n.dot(v), t * t.dot(v)};
}

}  // namespace clvr::geom
