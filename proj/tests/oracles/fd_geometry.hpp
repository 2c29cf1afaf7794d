#pragma once

// Curvatures of a parametric surface X(θ,φ) = ρ(θ,φ) ω̂ from fourth-order
// finite differences of pointwise evaluations. Knows nothing about the
// closed-form graph expressions used by the library.

#include <Eigen/Dense>
#include <cmath>

#include "vesicle/sphharm.hpp"

namespace oracle {

struct FdCurvature {
  double H = 0, K = 0;
  Eigen::Vector3d nu;
};

inline Eigen::Vector3d embed(const vesicle::sph::ShCoeffs& rho, double t, double p) {
  const double r = vesicle::sph::evaluate(rho, t, p);
  return r * Eigen::Vector3d(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
}

inline FdCurvature fd_curvature(const vesicle::sph::ShCoeffs& rho, double t, double p, double e = 2e-3) {
  using V = Eigen::Vector3d;
  auto X = [&](double dt, double dp) -> V { return embed(rho, t + dt, p + dp); };
  auto d1 = [&](double ut, double up) -> V {
    return (-X(2 * e * ut, 2 * e * up) + 8.0 * X(e * ut, e * up) - 8.0 * X(-e * ut, -e * up) +
            X(-2 * e * ut, -2 * e * up)) / (12 * e);
  };
  auto d2 = [&](double ut, double up) -> V {
    return (-X(2 * e * ut, 2 * e * up) + 16.0 * X(e * ut, e * up) - 30.0 * X(0, 0) + 16.0 * X(-e * ut, -e * up) -
            X(-2 * e * ut, -2 * e * up)) / (12 * e * e);
  };
  const V xt = d1(1, 0), xp = d1(0, 1);
  const V xtt = d2(1, 0), xpp = d2(0, 1);
  // mixed derivative from the diagonal directions
  const V xtp = 0.25 * (d2(1, 1) - d2(1, -1));
  FdCurvature out;
  out.nu = xt.cross(xp).normalized();
  Eigen::Matrix2d g, k;
  g << xt.dot(xt), xt.dot(xp), xt.dot(xp), xp.dot(xp);
  k << out.nu.dot(xtt), out.nu.dot(xtp), out.nu.dot(xtp), out.nu.dot(xpp);
  out.H = (k * g.inverse()).trace();
  out.K = k.determinant() / g.determinant();
  return out;
}

}  // namespace oracle
