#include "vesicle/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "vesicle/error.hpp"

namespace vesicle {

using sph::Field;

namespace {

double rel_err(double got, double want) {
  const double d = std::abs(got - want);
  return want == 0.0 ? d : d / std::abs(want);
}

}  // namespace

SurfaceShape advect(const SurfaceShape& shape, const GeometryCache& geo, std::span<const double> w, double dt,
                    int lmax_out) {
  if (w.size() != geo.size()) throw Error(ErrorKind::ShapeError, "normal speed has wrong sample count");
  const int L = lmax_out < 0 ? shape.lmax() : lmax_out;
  Field dh(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) dh[n] = dt * w[n] / geo.omega[n].dot(geo.nu[n]);
  const sph::ShCoeffs step = sph::analyze(dh, geo.grd(), L);
  SurfaceShape out = shape.with_h(shape.h().resized(L) + step);
  const double m = out.max_abs_h();
  if (!(m < shape.domain().tubular_radius))
    throw Error(ErrorKind::StepTooLarge, "step dt = " + std::to_string(dt) + " gives max |h| = " + std::to_string(m));
  return out;
}

SurfaceShape advect(const SurfaceShape& shape, std::span<const double> w, double dt, int lmax_out) {
  return advect(shape, build_geometry(shape), w, dt, lmax_out);
}

SurfaceVelocity chart_velocity(const GeometryCache& geo, std::span<const double> w) {
  VecField u(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) u[n] = (w[n] / geo.omega[n].dot(geo.nu[n])) * geo.omega[n];
  SurfaceVelocity s = decompose(geo, u);
  s.w.assign(w.begin(), w.end());
  return s;
}

std::map<std::string, double> TransportReport::to_map() const {
  return {{"dt", dt},
          {"darea_fd", darea_fd},
          {"darea_exact", darea_exact},
          {"err_area", err_area},
          {"dvolume_fd", dvolume_fd},
          {"dvolume_exact", dvolume_exact},
          {"err_volume", err_volume},
          {"err_density", err_density},
          {"err_H", err_H}};
}

TransportReport check_transport(const SurfaceShape& shape, std::span<const double> w, double dt) {
  const GeometryCache geo = build_geometry(shape);
  const std::size_t N = geo.size();
  double wmax = 0;
  for (double v : w) wmax = std::max(wmax, std::abs(v));
  TransportReport r;
  r.dt = dt > 0 ? dt : (wmax > 0 ? 1e-5 * shape.domain().a / wmax : 1e-5);

  // keep the full working band so the finite differences see no truncation
  const int L = shape.grid().lmax();
  const GeometryCache gp = build_geometry(advect(shape, geo, w, r.dt, L));
  const GeometryCache gm = build_geometry(advect(shape, geo, w, -r.dt, L));

  const SurfaceVelocity vel = chart_velocity(geo, w);
  const Field div = surface_div(geo, vel);
  const Field lap_w = laplace_beltrami(geo, w);
  const VecField grad_H = surface_gradient(geo, geo.H);

  Field wH(N), one(N, 1.0), ww(w.begin(), w.end());
  for (std::size_t n = 0; n < N; ++n) wH[n] = w[n] * geo.H[n];
  const MaterialParams p;
  const EnergyReport ep = energy_ch(gp, p), em = energy_ch(gm, p);
  r.darea_fd = (ep.area - em.area) / (2 * r.dt);
  r.darea_exact = -geo.integrate(wH);
  r.err_area = rel_err(r.darea_fd, r.darea_exact);
  r.dvolume_fd = (ep.volume - em.volume) / (2 * r.dt);
  r.dvolume_exact = geo.integrate(ww);
  r.err_volume = rel_err(r.dvolume_fd, r.dvolume_exact);

  double dens_err = 0, dens_scale = 0, h_err = 0, h_scale = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const double dd_fd = (gp.area_density[n] - gm.area_density[n]) / (2 * r.dt);
    const double dd = div[n] * geo.area_density[n];
    dens_err = std::max(dens_err, std::abs(dd_fd - dd));
    dens_scale = std::max(dens_scale, std::abs(dd));
    const double dH_fd = (gp.H[n] - gm.H[n]) / (2 * r.dt);
    const double dH = lap_w[n] + w[n] * (geo.H[n] * geo.H[n] - 2 * geo.K[n]) + grad_H[n].dot(vel.v[n]);
    h_err = std::max(h_err, std::abs(dH_fd - dH));
    h_scale = std::max(h_scale, std::abs(dH));
  }
  r.err_density = dens_scale > 0 ? dens_err / dens_scale : dens_err;
  r.err_H = h_scale > 0 ? h_err / h_scale : h_err;
  r.dH_scale = h_scale;
  return r;
}

}  // namespace vesicle
