#pragma once

#include <cmath>
#include <random>

#include "vesicle/sphharm.hpp"

namespace testsupport {

// Band-limited random expansion with amplitude ratio `decay` per degree.
inline vesicle::sph::ShCoeffs random_coeffs(int lmax, std::mt19937_64& rng, double scale = 1.0,
                                            double decay = 0.5, int lmin = 0) {
  std::normal_distribution<double> n(0.0, 1.0);
  vesicle::sph::ShCoeffs c(lmax);
  for (int l = lmin; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) c(l, m) = scale * std::pow(decay, l) * n(rng);
  return c;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testsupport

#include "vesicle/surface.hpp"

namespace testsupport {

// Random shape with max |h| scaled to `amp` (absolute length).
inline vesicle::SurfaceShape random_shape(const vesicle::DomainSpec& dom, int lmax, double amp,
                                          std::mt19937_64& rng, double decay = 0.5) {
  vesicle::sph::ShCoeffs h = random_coeffs(lmax, rng, 1.0, decay, 1);
  vesicle::SurfaceShape s(dom, h);
  h *= amp / s.max_abs_h();
  return s.with_h(h);
}

inline double max_norm(const vesicle::VecField& f) {
  double m = 0;
  for (const auto& v : f) m = std::max(m, v.norm());
  return m;
}

inline double max_abs(const std::vector<double>& f) {
  double m = 0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace testsupport
