#include "vesicle/flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "vesicle/error.hpp"

namespace vesicle {

namespace {

constexpr double kPi = std::numbers::pi;
const double kY00 = 1.0 / std::sqrt(4.0 * kPi);

std::size_t find_l(const std::vector<int>& ls, int deg) {
  const auto it = std::find(ls.begin(), ls.end(), deg);
  if (it == ls.end()) throw Error(ErrorKind::InvalidParameter, "mode table has no entry for l = " + std::to_string(deg));
  return static_cast<std::size_t>(it - ls.begin());
}

}  // namespace

double ModeTable::M_of(int deg) const { return M[find_l(l, deg)]; }
double ModeTable::gamma_of(int deg) const { return gamma[find_l(l, deg)]; }

// ---------------------------------------------------------------- spectrum

namespace {

// F along h = ε Y_l^0 + h00 Y_0^0 with h00 chosen so the volume is that of the sphere.
double constrained_energy(const SurfaceShape& base, int l, double eps, const MaterialParams& params) {
  const double a = base.domain().a;
  const double V0 = 4.0 * kPi * a * a * a / 3.0;
  sph::ShCoeffs h(base.lmax());
  h(l, 0) += eps;
  EnergyReport r;
  for (int it = 0; it < 50; ++it) {
    r = energy_ch(base.with_h(h), params);
    const double dv = r.volume - V0;
    if (std::abs(dv) <= 1e-15 * V0) break;
    h(0, 0) -= dv / (r.area * kY00);
  }
  return r.F_bend + r.F_gauss;
}

}  // namespace

double second_variation(int l, const MaterialParams& params, const DomainSpec& domain, int lmax) {
  params.validate();
  domain.validate();
  if (l < 1) throw Error(ErrorKind::InvalidParameter, "second variation needs l >= 1");
  const SurfaceShape base(domain, sph::ShCoeffs(std::max({lmax, l, 2})));
  const double a = domain.a;
  const double F0 = constrained_energy(base, l, 0.0, params);
  auto d2 = [&](double e) {
    return (constrained_energy(base, l, e, params) - 2.0 * F0 + constrained_energy(base, l, -e, params)) / (e * e);
  };
  // Step shrinks with l so that the slope of the perturbation stays 1e-2.
  const double eps = 1e-2 * a / l;
  const double richardson = (4.0 * d2(0.5 * eps) - d2(eps)) / 3.0;
  return richardson / (a * a);
}

ModeTable spectrum(const MaterialParams& params, const DomainSpec& domain, int l_min, int l_max) {
  if (l_min < 1 || l_max < l_min) throw Error(ErrorKind::InvalidParameter, "spectrum needs 1 <= l_min <= l_max");
  ModeTable t;
  t.params = params;
  t.domain = domain;
  for (int l = l_min; l <= l_max; ++l) {
    const double M = mobility(l, params, domain);
    const double E = second_variation(l, params, domain, l_max);
    t.l.push_back(l);
    t.M.push_back(M);
    t.second_variation.push_back(E);
    t.gamma.push_back(M * E);
  }
  return t;
}

// ---------------------------------------------------------------- projection

Mobility Mobility::frozen_sphere(const ModeTable& table, int lmax, bool pin_translations) {
  Mobility m;
  m.a = table.domain.a;
  m.M.assign(lmax + 1, 0.0);
  auto lookup = [&](int l) {
    const auto it = std::find(table.l.begin(), table.l.end(), l);
    return it != table.l.end() ? table.M[it - table.l.begin()] : mobility(l, table.params, table.domain);
  };
  for (int l = 1; l <= lmax; ++l) m.M[l] = lookup(l);
  m.M[0] = lookup(2);
  if (pin_translations && lmax >= 1) m.M[1] = 0.0;
  return m;
}

sph::ShCoeffs Mobility::apply(const sph::ShCoeffs& f) const {
  sph::ShCoeffs out = f.resized(static_cast<int>(M.size()) - 1);
  for (int l = 0; l <= out.lmax(); ++l)
    for (int m = -l; m <= l; ++m) out(l, m) *= M[l];
  return out;
}

namespace {

// Chart coefficients of J·f with J = dA/(a² dΩ).
sph::ShCoeffs chart_coeffs(const GeometryCache& geo, std::span<const double> f, int lmax, double a) {
  sph::Field jf(geo.size());
  for (std::size_t n = 0; n < jf.size(); ++n) jf[n] = f[n] * geo.area_density[n] / (a * a);
  return sph::analyze(jf, geo.grd(), lmax);
}

double l2_norm(const GeometryCache& geo, std::span<const double> f) {
  sph::Field f2(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) f2[n] = f[n] * f[n];
  return std::sqrt(std::max(geo.integrate(f2), 0.0));
}

double cmc_defect(const GeometryCache& geo, const sph::Field& H, double& H_mean, double& area) {
  const sph::Field one(geo.size(), 1.0);
  area = geo.integrate(one);
  H_mean = geo.integrate(H) / area;
  sph::Field e(H);
  for (double& v : e) v -= H_mean;
  return l2_norm(geo, e) / (std::abs(H_mean) * std::sqrt(area));
}

}  // namespace

Projection project_constraints(const GeometryCache& geo, const sph::ShCoeffs& w, const Mobility& mob,
                               double cmc_tol) {
  const int L = w.lmax();
  const double a = mob.a;
  double H_mean = 0, area = 0;
  const double defect = cmc_defect(geo, geo.H, H_mean, area);
  const sph::Field one(geo.size(), 1.0);
  sph::Field e(geo.H);
  for (double& v : e) v -= H_mean;

  const sph::Field wf = sph::synthesize(w, geo.grd());
  auto moment = [&](const sph::Field& f, const sph::Field& g) {
    sph::Field p(f.size());
    for (std::size_t n = 0; n < p.size(); ++n) p[n] = f[n] * g[n];
    return geo.integrate(p);
  };
  const sph::ShCoeffs b1 = mob.apply(chart_coeffs(geo, one, L, a)).resized(L);
  const sph::Field B1 = sph::synthesize(b1, geo.grd());

  Projection out;
  double mu1 = 0, mu2 = 0;
  sph::ShCoeffs b2;
  if (defect < cmc_tol) {
    out.degenerate = true;
    mu1 = moment(wf, one) / moment(B1, one);
  } else {
    b2 = mob.apply(chart_coeffs(geo, e, L, a)).resized(L);
    const sph::Field B2 = sph::synthesize(b2, geo.grd());
    Eigen::Matrix2d G;
    G << moment(B1, one), moment(B2, one), moment(B1, e), moment(B2, e);
    const Eigen::Vector2d rhs(moment(wf, one), moment(wf, e));
    const Eigen::FullPivLU<Eigen::Matrix2d> lu(G);
    if (!lu.isInvertible()) throw Error(ErrorKind::DegenerateConstraints, "constraint Gram matrix is singular");
    const Eigen::Vector2d mu = lu.solve(rhs);
    mu1 = mu(0);
    mu2 = mu(1);
  }
  out.w = w - mu1 * b1;
  if (!out.degenerate) out.w -= mu2 * b2;
  // μ1 + μ2 (H − H̄) = λ1 + λ2 H
  out.lambda1 = mu1 - mu2 * H_mean;
  out.lambda2 = mu2;
  return out;
}

// ---------------------------------------------------------------- Helfrich fit

HelfrichFit helfrich_multipliers(const GeometryCache& geo, const MaterialParams& params, const DomainSpec& domain,
                                 int band) {
  // Fields are compared on the resolved band of the shape.
  auto resolved = [&](const sph::Field& f) {
    return band < 0 ? f : sph::synthesize(sph::analyze(f, geo.grd(), band), geo.grd());
  };
  const sph::Field g = resolved(grad_l2_F(geo, params));
  const sph::Field H = resolved(geo.H);
  double H_mean = 0, area = 0;
  const double defect = cmc_defect(geo, H, H_mean, area);
  const double a = domain.a;
  const double gnorm = l2_norm(geo, g);
  HelfrichFit fit;
  // Guard for 0/0 at an unforced round sphere.
  if (gnorm <= 1e-10 * params.kappa * std::sqrt(area) / (a * a * a)) return fit;
  const sph::Field one(geo.size(), 1.0);
  auto dot = [&](const sph::Field& f, const sph::Field& h) {
    sph::Field p(f.size());
    for (std::size_t n = 0; n < p.size(); ++n) p[n] = f[n] * h[n];
    return geo.integrate(p);
  };
  sph::Field e(H);
  for (double& v : e) v -= H_mean;
  if (defect < 1e-9) {
    // On a CMC surface 1 and H are parallel. The pair is taken in the
    // pressure normalization of the s1 solver, where λ1 = k λ2.
    fit.reduced = true;
    sph::Field r3(geo.size());
    for (std::size_t n = 0; n < r3.size(); ++n) r3[n] = geo.rho[n] * geo.rho[n] * geo.rho[n] / 3.0;
    const double v_in = sph::integrate(r3, geo.grd());
    const double R = domain.r_outer;
    const double v_out = 4.0 * kPi * R * R * R / 3.0 - v_in;
    const double k = area * (v_in + v_out) / (H_mean * v_in * v_out);
    sph::Field dir(H);
    for (double& v : dir) v += k;
    fit.lambda2 = -dot(g, dir) / dot(dir, dir);
    fit.lambda1 = k * fit.lambda2;
  } else {
    const double mu1 = -dot(g, one) / area;
    const double mu2 = -dot(g, e) / dot(e, e);
    fit.lambda2 = mu2;
    fit.lambda1 = mu1 - mu2 * H_mean;
  }
  sph::Field d(g);
  for (std::size_t n = 0; n < d.size(); ++n) d[n] += fit.lambda1 + fit.lambda2 * H[n];
  fit.residual = l2_norm(geo, d) / gnorm;
  return fit;
}

HelfrichFit helfrich_multipliers(const SurfaceShape& shape, const MaterialParams& params) {
  return helfrich_multipliers(build_geometry(shape), params, shape.domain(), shape.lmax());
}

// ---------------------------------------------------------------- stepping

std::string to_string(Stepper s) {
  switch (s) {
    case Stepper::Euler: return "euler";
    case Stepper::RK4: return "rk4";
    case Stepper::ImexExponential: return "imex-exponential";
  }
  return "?";
}

Stepper parse_stepper(const std::string& s) {
  if (s == "euler") return Stepper::Euler;
  if (s == "rk4") return Stepper::RK4;
  if (s == "imex-exponential") return Stepper::ImexExponential;
  throw Error(ErrorKind::InvalidParameter, "unknown stepper '" + s + "' (euler, rk4, imex-exponential)");
}

void FlowConfig::validate() const {
  if (!(dt_init > 0) || !std::isfinite(dt_init)) throw Error(ErrorKind::InvalidParameter, "dt_init must be positive");
  if (!(t_end >= 0) || !std::isfinite(t_end)) throw Error(ErrorKind::InvalidParameter, "t_end must be >= 0");
  if (!(tol_constraint >= 1e-12)) throw Error(ErrorKind::InvalidParameter, "tol_constraint must be >= 1e-12");
}

FlowState initial_state(const SurfaceShape& shape, const MaterialParams& params) {
  check_admissible(shape);
  FlowState s;
  s.shape = shape;
  s.report = energy_ch(shape, params);
  return s;
}

namespace {

struct Rate {
  sph::ShCoeffs dh;  // chart rate of h
  Projection proj;
  double dissipation = 0;
};

Rate rate(const SurfaceShape& shape, const MaterialParams& params, const Mobility& mob) {
  const GeometryCache geo = build_geometry(shape);
  const int L = shape.lmax();
  const double a = shape.domain().a;
  const sph::Field g = grad_l2_F(geo, params);
  sph::ShCoeffs w = mob.apply(chart_coeffs(geo, g, L, a));
  w *= -1.0;
  Rate r;
  r.proj = project_constraints(geo, w, mob);
  const sph::Field wf = sph::synthesize(r.proj.w, geo.grd());
  sph::Field dh(geo.size());
  for (std::size_t n = 0; n < dh.size(); ++n) dh[n] = wf[n] / geo.omega[n].dot(geo.nu[n]);
  r.dh = sph::analyze(dh, geo.grd(), L);
  for (int l = 0; l <= L; ++l) {
    if (mob.M[l] == 0.0) continue;
    for (int m = -l; m <= l; ++m) r.dissipation += r.proj.w(l, m) * r.proj.w(l, m) / mob.M[l];
  }
  r.dissipation *= a * a;
  return r;
}

double phi1(double z) { return std::abs(z) < 1e-8 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

sph::ShCoeffs advance(const FlowState& s, const Rate& k1, double dt, const FlowConfig& cfg, const MaterialParams& params,
                      const Mobility& mob, const ModeTable& table) {
  const sph::ShCoeffs& h = s.shape.h();
  switch (cfg.stepper) {
    case Stepper::Euler: return h + dt * k1.dh;
    case Stepper::RK4: {
      auto at = [&](const sph::ShCoeffs& hh) { return rate(s.shape.with_h(hh), params, mob).dh; };
      const sph::ShCoeffs k2 = at(h + (0.5 * dt) * k1.dh);
      const sph::ShCoeffs k3 = at(h + (0.5 * dt) * k2);
      const sph::ShCoeffs k4 = at(h + dt * k3);
      return h + (dt / 6.0) * (k1.dh + 2.0 * k2 + 2.0 * k3 + k4);
    }
    case Stepper::ImexExponential: {
      sph::ShCoeffs out = h;
      for (int l = 0; l <= h.lmax(); ++l) {
        const auto it = std::find(table.l.begin(), table.l.end(), l);
        const double g = (l >= 2 && it != table.l.end()) ? table.gamma[it - table.l.begin()] : 0.0;
        const double decay = std::exp(-g * dt), ph = phi1(-g * dt);
        for (int m = -l; m <= l; ++m) out(l, m) = decay * h(l, m) + dt * ph * (k1.dh(l, m) + g * h(l, m));
      }
      return out;
    }
  }
  return h;
}

}  // namespace

FlowState step(const FlowState& state, const FlowConfig& config, const MaterialParams& params, const ModeTable& table,
               double dt) {
  const Mobility mob = Mobility::frozen_sphere(table, state.shape.lmax(), config.pin_translations);
  const Rate k1 = rate(state.shape, params, mob);
  const double F0 = state.energy();
  std::string why;
  for (int halving = 0; halving <= 20; ++halving, dt *= 0.5) {
    SurfaceShape next = state.shape.with_h(advance(state, k1, dt, config, params, mob, table));
    if (!(next.max_abs_h() < next.domain().tubular_radius)) {
      why = "left the tubular neighbourhood";
      continue;
    }
    const EnergyReport rep = energy_ch(next, params);
    const double F1 = rep.F_bend + rep.F_gauss;
    if (!std::isfinite(F1) || F1 > F0 + 1e-12 * std::abs(F0)) {
      why = "energy increased";
      continue;
    }
    const double da = std::abs(rep.area - state.report.area) / state.report.area;
    const double dv = std::abs(rep.volume - state.report.volume) / state.report.volume;
    if (da > config.tol_constraint || dv > config.tol_constraint) {
      why = "area/volume drift above tolerance";
      continue;
    }
    FlowState out;
    out.t = state.t + dt;
    out.shape = std::move(next);
    out.report = rep;
    out.lambda1 = k1.proj.lambda1;
    out.lambda2 = k1.proj.lambda2;
    out.last_dissipation = k1.dissipation;
    out.dt = dt;
    out.degenerate = k1.proj.degenerate;
    return out;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "no acceptable step at t = %.6g after 20 halvings (%s)", state.t, why.c_str());
  throw Error(ErrorKind::BlowUpDetected, buf);
}

FlowState step(const FlowState& state, const FlowConfig& config, const MaterialParams& params, const ModeTable& table) {
  return step(state, config, params, table, config.dt_init);
}

MonitorRow monitor(const FlowState& s, const MaterialParams& params) {
  const HelfrichFit fit = helfrich_multipliers(s.shape, params);
  return {s.t,
          s.energy(),
          s.report.area,
          s.report.volume,
          s.report.sigma,
          s.last_dissipation,
          s.lambda1,
          s.lambda2,
          s.shape.max_abs_h(),
          fit.residual};
}

void write_monitor_header(std::ostream& os) {
  os << "t,F,area,volume,sigma,dissipation,lambda1,lambda2,max_h,helfrich_residual\n";
}

void write_monitor_row(std::ostream& os, const MonitorRow& r) {
  const double v[] = {r.t, r.F, r.area, r.volume, r.sigma, r.dissipation, r.lambda1, r.lambda2, r.max_h,
                      r.helfrich_residual};
  char buf[40];
  for (std::size_t i = 0; i < std::size(v); ++i) {
    std::snprintf(buf, sizeof buf, "%.15g", v[i]);
    os << (i ? "," : "") << buf;
  }
  os << "\n";
}

FlowRun run(const FlowConfig& config, const MaterialParams& params, const DomainSpec& domain, const SurfaceShape& init,
            int snapshot_every, const ModeTable* table) {
  config.validate();
  params.validate();
  domain.validate();
  const int L = init.lmax();
  ModeTable own;
  if (!table) {
    own = spectrum(params, domain, 1, std::max(L, 2));
    table = &own;
  }
  FlowRun out;
  FlowState s = initial_state(init, params);
  out.rows.push_back(monitor(s, params));
  if (snapshot_every > 0) out.snapshots.push_back(s);
  int n = 0;
  try {
    while (s.t < config.t_end * (1 - 1e-14)) {
      const double dt = std::min(config.dt_init, config.t_end - s.t);
      s = step(s, config, params, *table, dt);
      out.degenerate_seen = out.degenerate_seen || s.degenerate;
      out.rows.push_back(monitor(s, params));
      ++n;
      if (snapshot_every > 0 && n % snapshot_every == 0) out.snapshots.push_back(s);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BlowUpDetected && e.kind() != ErrorKind::ShapeOutOfTubularNeighborhood) throw;
    out.blew_up = true;
    out.message = e.what();
  }
  out.final = s;
  return out;
}

}  // namespace vesicle
