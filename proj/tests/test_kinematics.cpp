#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vesicle/error.hpp"
#include "vesicle/kinematics.hpp"

using namespace vesicle;
using sph::Field;
using sph::ShCoeffs;
constexpr double kPi = std::numbers::pi;

TEST_CASE("advect a sphere") {
  DomainSpec dom;
  const SurfaceShape s(dom, ShCoeffs(8));
  const GeometryCache geo = build_geometry(s);
  const SurfaceShape t = advect(s, geo, Field(geo.size(), 1.0), 1e-4);
  const GeometryCache gt = build_geometry(t);
  for (double r : gt.rho) CHECK(std::abs(r - (1 + 1e-4)) < 1e-12);
  const SurfaceShape z = advect(s, geo, Field(geo.size(), 0.0), 1e-4);
  CHECK(z.h().max_abs() == 0.0);
  CHECK_THROWS_AS(advect(s, geo, Field(geo.size(), 1.0), 10.0), Error);
  try {
    advect(s, geo, Field(geo.size(), 1.0), 10.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StepTooLarge);
  }
}

TEST_CASE("mean-zero normal speed changes area at second order on a sphere") {
  DomainSpec dom;
  const SurfaceShape s(dom, ShCoeffs(8));
  const GeometryCache geo = build_geometry(s);
  ShCoeffs wc(8);
  wc(2, 0) = 1e-3;
  const Field w = sph::synthesize(wc, geo.grd());
  const double a0 = energy_ch(geo, MaterialParams{}).area;
  const double dt = 1e-4;
  const double a1 = energy_ch(advect(s, geo, w, dt), MaterialParams{}).area;
  CHECK(std::abs(a1 - a0) < 10 * dt * dt * 1e-6);
}

TEST_CASE("transport identities on a sphere") {
  DomainSpec dom;
  const SurfaceShape s(dom, ShCoeffs(8));
  const GeometryCache geo = build_geometry(s);
  const TransportReport r = check_transport(s, Field(geo.size(), 1.0), 1e-5);
  CHECK(std::abs(r.dvolume_fd - 4 * kPi) < 1e-6 * 4 * kPi);
  CHECK(std::abs(r.darea_fd - 8 * kPi) < 1e-6 * 8 * kPi);
  CHECK(r.err_density < 1e-5);
  CHECK(r.err_H < 1e-5);

  ShCoeffs wc(8);
  wc(2, 0) = 1;
  const Field w = sph::synthesize(wc, geo.grd());
  const TransportReport q = check_transport(s, w);
  CHECK(q.err_H < 1e-5);
  // closed form: D/Dt H = -4 Y_2^0 / a²
  CHECK(std::abs(q.dH_scale - 4 * testsupport::max_abs(w)) < 1e-6);

  const TransportReport z = check_transport(s, Field(geo.size(), 0.0));
  CHECK(z.darea_fd == 0.0);
  CHECK(z.dvolume_fd == 0.0);
  CHECK(z.err_H == 0.0);
}

TEST_CASE("transport identities on random shapes and dt refinement") {
  std::mt19937_64 rng(12);
  DomainSpec dom;
  const SurfaceShape s = testsupport::random_shape(dom, 10, 0.05, rng);
  const GeometryCache geo = build_geometry(s);
  const Field w = sph::synthesize(testsupport::random_coeffs(10, rng, 1.0, 0.6), geo.grd());
  const TransportReport r = check_transport(s, w);
  CHECK(r.err_area < 1e-5);
  CHECK(r.err_volume < 1e-5);
  CHECK(r.err_density < 1e-5);
  CHECK(r.err_H < 1e-5);
  double prev = 1e300;
  for (double dt : {4e-2, 2e-2, 1e-2}) {
    const TransportReport q = check_transport(s, w, dt);
    CHECK(q.err_area < prev);
    prev = q.err_area;
  }
}

TEST_CASE("rate of strain is half the metric rate along the motion") {
  std::mt19937_64 rng(13);
  DomainSpec dom;
  const SurfaceShape s = testsupport::random_shape(dom, 10, 0.05, rng);
  const GeometryCache geo = build_geometry(s);
  const Field w = sph::synthesize(testsupport::random_coeffs(10, rng, 1.0, 0.6), geo.grd());
  const double dt = 1e-5;
  const int L = s.grid().lmax();
  const GeometryCache gp = build_geometry(advect(s, geo, w, dt, L));
  const GeometryCache gm = build_geometry(advect(s, geo, w, -dt, L));
  const auto D = rate_of_strain(geo, chart_velocity(geo, w));
  double err = 0, scale = 0;
  for (std::size_t n = 0; n < geo.size(); ++n) {
    const double ftt = 0.25 * (gp.g[n].tt - gm.g[n].tt) / dt;
    const double ftp = 0.25 * (gp.g[n].tp - gm.g[n].tp) / dt;
    const double fpp = 0.25 * (gp.g[n].pp - gm.g[n].pp) / dt;
    err = std::max({err, std::abs(ftt - D[n].tt), std::abs(ftp - D[n].tp), std::abs(fpp - D[n].pp)});
    scale = std::max({scale, std::abs(D[n].tt), std::abs(D[n].pp)});
  }
  CHECK(err < 1e-5 * scale);
}

TEST_CASE("linearized constraints give second-order drift") {
  std::mt19937_64 rng(14);
  DomainSpec dom;
  const SurfaceShape s = testsupport::random_shape(dom, 8, 0.05, rng);
  const GeometryCache geo = build_geometry(s);
  Field w = sph::synthesize(testsupport::random_coeffs(8, rng, 1.0, 0.6), geo.grd());
  // remove components along 1 and H in L²(Γ)
  Field one(geo.size(), 1.0);
  const double a11 = geo.integrate(one), a12 = geo.integrate(geo.H);
  Field HH(geo.size()), wH(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) {
    HH[n] = geo.H[n] * geo.H[n];
    wH[n] = w[n] * geo.H[n];
  }
  const double a22 = geo.integrate(HH), b1 = geo.integrate(w), b2 = geo.integrate(wH);
  const double det = a11 * a22 - a12 * a12;
  const double c1 = (b1 * a22 - b2 * a12) / det, c2 = (a11 * b2 - a12 * b1) / det;
  for (std::size_t n = 0; n < geo.size(); ++n) w[n] -= c1 + c2 * geo.H[n];
  const int L = s.grid().lmax();
  const EnergyReport e0 = energy_ch(geo, MaterialParams{});
  double prev_a = 0, prev_v = 0;
  for (double dt : {2e-3, 1e-3}) {
    const EnergyReport e1 = energy_ch(advect(s, geo, w, dt, L), MaterialParams{});
    const double da = std::abs(e1.area - e0.area), dv = std::abs(e1.volume - e0.volume);
    if (prev_a > 0) {
      CHECK(prev_a / da > 3.5);
      CHECK(prev_v / dv > 3.5);
    }
    prev_a = da;
    prev_v = dv;
  }
}
