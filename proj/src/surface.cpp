#include "vesicle/surface.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "vesicle/error.hpp"

namespace vesicle {

using sph::Field;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix2d mat(const Sym2& s) {
  Eigen::Matrix2d m;
  m << s.tt, s.tp, s.tp, s.pp;
  return m;
}

Sym2 sym(const Eigen::Matrix2d& m) { return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)}; }

// Raise both indices of a covariant tensor.
Sym2 raise(const Sym2& a, const Sym2& g_inv) {
  const Eigen::Matrix2d gi = mat(g_inv);
  return sym(gi * mat(a) * gi);
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw Error(ErrorKind::ShapeError, std::string(what) + " has " + std::to_string(got) +
                                           " samples, expected " + std::to_string(want));
}

}  // namespace

void MaterialParams::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidParameter, m); };
  if (!(kappa > 0)) bad("kappa must be > 0");
  if (!(mu_b > 0)) bad("mu_b must be > 0");
  if (!(mu > 0)) bad("mu must be > 0");
  if (!(rho_b >= 0) || !(rho >= 0)) bad("densities must be >= 0");
  if (!std::isfinite(kappa_g) || !std::isfinite(c0)) bad("kappa_g and c0 must be finite");
}

double DomainSpec::default_tubular_radius(double a, double r_outer) {
  return 0.5 * std::min(a, r_outer - a);
}

void DomainSpec::validate() const {
  if (!(a > 0) || !(r_outer > a))
    throw Error(ErrorKind::InvalidParameter, "need 0 < a < r_outer");
  if (!(tubular_radius > 0) || !(tubular_radius < std::min(a, r_outer - a)))
    throw Error(ErrorKind::InvalidParameter, "need 0 < tubular_radius < min(a, r_outer - a)");
}

SurfaceShape::SurfaceShape(const DomainSpec& domain, sph::ShCoeffs h)
    : SurfaceShape(domain, h,
                   std::make_shared<const sph::SphGrid>(sph::build_grid(sph::dealiased_band(std::max(h.lmax(), 2))))) {}

SurfaceShape::SurfaceShape(const DomainSpec& domain, sph::ShCoeffs h, std::shared_ptr<const sph::SphGrid> grid)
    : domain_(domain), h_(std::move(h)), grid_(std::move(grid)) {
  domain_.validate();
  if (h_.kind() != sph::CoeffKind::Scalar) throw Error(ErrorKind::ShapeError, "height must be a scalar expansion");
  if (h_.lmax() > grid_->lmax()) throw Error(ErrorKind::ShapeError, "height band exceeds working grid");
}

sph::ShCoeffs SurfaceShape::radius_coeffs() const {
  sph::ShCoeffs r = h_;
  r(0, 0) += domain_.a * std::sqrt(4.0 * kPi);
  return r;
}

double SurfaceShape::max_abs_h() const {
  const Field f = sph::synthesize(h_, *grid_);
  double m = 0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

void check_admissible(const SurfaceShape& shape) {
  const double m = shape.max_abs_h();
  if (!(m < shape.domain().tubular_radius))
    throw Error(ErrorKind::ShapeOutOfTubularNeighborhood,
                "max |h| = " + std::to_string(m) + " >= tubular radius " +
                    std::to_string(shape.domain().tubular_radius));
}

GeometryCache build_geometry(const SurfaceShape& shape) {
  check_admissible(shape);
  const sph::SphGrid& grid = shape.grid();
  const sph::GridDerivatives d = sph::synthesize_derivatives(shape.radius_coeffs(), grid);
  const std::size_t N = grid.size();
  GeometryCache geo;
  geo.grid = shape.grid_ptr();
  geo.rho = d.f;
  geo.rho_t = d.f_t;
  geo.rho_p = d.f_p;
  geo.omega.resize(N);
  geo.position.resize(N);
  geo.x_t.resize(N);
  geo.x_p.resize(N);
  geo.x_tt.resize(N);
  geo.x_tp.resize(N);
  geo.x_pp.resize(N);
  geo.nu.resize(N);
  geo.g.resize(N);
  geo.g_inv.resize(N);
  geo.k.resize(N);
  geo.shape_op.resize(N);
  geo.chris_t.resize(N);
  geo.chris_p.resize(N);
  geo.sqrt_g.resize(N);
  geo.area_density.resize(N);
  geo.H.resize(N);
  geo.K.resize(N);
  for (int j = 0; j < grid.n_theta(); ++j) {
    const double st = grid.sin_theta(j), ct = grid.cos_theta(j);
    for (int kk = 0; kk < grid.n_phi(); ++kk) {
      const std::size_t n = grid.node(j, kk);
      const double sp = grid.sin_m_phi(1, kk), cp = grid.cos_m_phi(1, kk);
      const Vec3 er(st * cp, st * sp, ct), et(ct * cp, ct * sp, -st), ep(-sp, cp, 0.0);
      const double r = d.f[n], rt = d.f_t[n], rp = d.f_p[n];
      const double rtt = d.f_tt[n], rtp = d.f_tp[n], rpp = d.f_pp[n];
      geo.omega[n] = er;
      geo.position[n] = r * er;
      const Vec3 xt = rt * er + r * et;
      const Vec3 xp = rp * er + r * st * ep;
      geo.x_t[n] = xt;
      geo.x_p[n] = xp;
      geo.x_tt[n] = (rtt - r) * er + 2.0 * rt * et;
      geo.x_tp[n] = rtp * er + rp * et + (rt * st + r * ct) * ep;
      geo.x_pp[n] = (rpp - r * st * st) * er - r * st * ct * et + 2.0 * rp * st * ep;
      const Vec3 cr = xt.cross(xp);
      const double sg = cr.norm();
      const Vec3 nu = cr / sg;
      geo.nu[n] = nu;
      geo.sqrt_g[n] = sg;
      geo.area_density[n] = sg / st;
      const Sym2 g{xt.dot(xt), xt.dot(xp), xp.dot(xp)};
      const double det = g.tt * g.pp - g.tp * g.tp;
      const Sym2 gi{g.pp / det, -g.tp / det, g.tt / det};
      geo.g[n] = g;
      geo.g_inv[n] = gi;
      const Sym2 k{nu.dot(geo.x_tt[n]), nu.dot(geo.x_tp[n]), nu.dot(geo.x_pp[n])};
      geo.k[n] = k;
      const Eigen::Matrix2d so = mat(k) * mat(gi);
      geo.shape_op[n] = so;
      geo.H[n] = so.trace();
      geo.K[n] = (k.tt * k.pp - k.tp * k.tp) / det;
      // Γ^γ_{αβ} = g^{γδ} X_δ · X_{,αβ}
      const Vec3 up_t = gi.tt * xt + gi.tp * xp;
      const Vec3 up_p = gi.tp * xt + gi.pp * xp;
      geo.chris_t[n] = {up_t.dot(geo.x_tt[n]), up_t.dot(geo.x_tp[n]), up_t.dot(geo.x_pp[n])};
      geo.chris_p[n] = {up_p.dot(geo.x_tt[n]), up_p.dot(geo.x_tp[n]), up_p.dot(geo.x_pp[n])};
    }
  }
  return geo;
}

EnergyReport energy_ch(const GeometryCache& geo, const MaterialParams& params) {
  const std::size_t N = geo.size();
  Field bend(N), xn(N);
  for (std::size_t n = 0; n < N; ++n) {
    const double d = geo.H[n] - params.c0;
    bend[n] = d * d;
    xn[n] = geo.position[n].dot(geo.nu[n]);
  }
  const Field one(N, 1.0);
  EnergyReport e;
  e.F_bend = 0.5 * params.kappa * geo.integrate(bend);
  e.F_gauss = params.kappa_g * geo.integrate(geo.K);
  e.area = geo.integrate(one);
  e.volume = geo.integrate(xn) / 3.0;
  e.sigma = 6.0 * std::sqrt(kPi) * e.volume / std::pow(e.area, 1.5);
  return e;
}

EnergyReport energy_ch(const SurfaceShape& shape, const MaterialParams& params) {
  return energy_ch(build_geometry(shape), params);
}

VecField surface_gradient(const GeometryCache& geo, std::span<const double> f_t, std::span<const double> f_p) {
  VecField out(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) {
    const Sym2& gi = geo.g_inv[n];
    out[n] = (gi.tt * f_t[n] + gi.tp * f_p[n]) * geo.x_t[n] + (gi.tp * f_t[n] + gi.pp * f_p[n]) * geo.x_p[n];
  }
  return out;
}

VecField surface_gradient(const GeometryCache& geo, std::span<const double> f) {
  require_size(f.size(), geo.size(), "scalar field");
  const sph::GridDerivatives d = sph::synthesize_derivatives(sph::analyze(f, geo.grd()), geo.grd(), false);
  return surface_gradient(geo, d.f_t, d.f_p);
}

Field laplace_beltrami(const GeometryCache& geo, std::span<const double> f) {
  require_size(f.size(), geo.size(), "scalar field");
  const sph::GridDerivatives d = sph::synthesize_derivatives(sph::analyze(f, geo.grd()), geo.grd());
  Field out(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) {
    const Sym2& gi = geo.g_inv[n];
    const Sym2& ct = geo.chris_t[n];
    const Sym2& cp = geo.chris_p[n];
    const double htt = d.f_tt[n] - ct.tt * d.f_t[n] - cp.tt * d.f_p[n];
    const double htp = d.f_tp[n] - ct.tp * d.f_t[n] - cp.tp * d.f_p[n];
    const double hpp = d.f_pp[n] - ct.pp * d.f_t[n] - cp.pp * d.f_p[n];
    out[n] = gi.tt * htt + 2.0 * gi.tp * htp + gi.pp * hpp;
  }
  return out;
}

Field grad_l2_F(const GeometryCache& geo, const MaterialParams& params) {
  const Field lap = laplace_beltrami(geo, geo.H);
  const double c0 = params.c0;
  Field out(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) {
    const double H = geo.H[n], K = geo.K[n];
    out[n] = params.kappa * (lap[n] + H * (0.5 * H * H - 2.0 * K) + c0 * (2.0 * K - 0.5 * H * c0));
  }
  return out;
}

VecDerivatives differentiate(const GeometryCache& geo, const VecField& f) {
  require_size(f.size(), geo.size(), "vector field");
  const std::size_t N = geo.size();
  VecDerivatives out;
  out.f_t.assign(N, Vec3::Zero());
  out.f_p.assign(N, Vec3::Zero());
  Field comp(N);
  for (int i = 0; i < 3; ++i) {
    for (std::size_t n = 0; n < N; ++n) comp[n] = f[n][i];
    const sph::GridDerivatives d = sph::synthesize_derivatives(sph::analyze(comp, geo.grd()), geo.grd(), false);
    for (std::size_t n = 0; n < N; ++n) {
      out.f_t[n][i] = d.f_t[n];
      out.f_p[n][i] = d.f_p[n];
    }
  }
  return out;
}

VecField tensor_div(const GeometryCache& geo, const std::vector<Eigen::Matrix3d>& A) {
  require_size(A.size(), geo.size(), "tensor field");
  const std::size_t N = geo.size();
  // Row i of the divergence contracts ∂_α A_i· with g^{αβ} X_β.
  std::vector<Eigen::Matrix3d> dt(N, Eigen::Matrix3d::Zero()), dp(N, Eigen::Matrix3d::Zero());
  Field comp(N);
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) {
      for (std::size_t n = 0; n < N; ++n) comp[n] = A[n](i, c);
      const sph::GridDerivatives d = sph::synthesize_derivatives(sph::analyze(comp, geo.grd()), geo.grd(), false);
      for (std::size_t n = 0; n < N; ++n) {
        dt[n](i, c) = d.f_t[n];
        dp[n](i, c) = d.f_p[n];
      }
    }
  VecField out(N);
  for (std::size_t n = 0; n < N; ++n) {
    const Sym2& gi = geo.g_inv[n];
    const Vec3 up_t = gi.tt * geo.x_t[n] + gi.tp * geo.x_p[n];
    const Vec3 up_p = gi.tp * geo.x_t[n] + gi.pp * geo.x_p[n];
    out[n] = dt[n] * up_t + dp[n] * up_p;
  }
  return out;
}

VecField tangent_from_potentials(const GeometryCache& geo, const sph::ShCoeffs& phi, const sph::ShCoeffs& psi) {
  const sph::GridDerivatives dphi = sph::synthesize_derivatives(phi, geo.grd(), false);
  const sph::GridDerivatives dpsi = sph::synthesize_derivatives(psi, geo.grd(), false);
  const VecField g1 = surface_gradient(geo, dphi.f_t, dphi.f_p);
  const VecField g2 = surface_gradient(geo, dpsi.f_t, dpsi.f_p);
  VecField v(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) v[n] = g1[n] + geo.nu[n].cross(g2[n]);
  return v;
}

SurfaceVelocity decompose(const GeometryCache& geo, const VecField& u) {
  require_size(u.size(), geo.size(), "velocity");
  SurfaceVelocity s;
  s.v.resize(u.size());
  s.w.resize(u.size());
  for (std::size_t n = 0; n < u.size(); ++n) {
    s.w[n] = u[n].dot(geo.nu[n]);
    s.v[n] = u[n] - s.w[n] * geo.nu[n];
  }
  return s;
}

Field tangential_div(const GeometryCache& geo, const VecField& v) {
  const VecDerivatives d = differentiate(geo, v);
  Field out(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) {
    const Sym2& gi = geo.g_inv[n];
    out[n] = gi.tt * d.f_t[n].dot(geo.x_t[n]) + gi.tp * (d.f_t[n].dot(geo.x_p[n]) + d.f_p[n].dot(geo.x_t[n])) +
             gi.pp * d.f_p[n].dot(geo.x_p[n]);
  }
  return out;
}

Field surface_div(const GeometryCache& geo, const SurfaceVelocity& vel) {
  require_size(vel.w.size(), geo.size(), "normal velocity");
  Field out = tangential_div(geo, vel.v);
  for (std::size_t n = 0; n < geo.size(); ++n) out[n] -= vel.w[n] * geo.H[n];
  return out;
}

std::vector<Sym2> rate_of_strain(const GeometryCache& geo, const SurfaceVelocity& vel) {
  require_size(vel.w.size(), geo.size(), "normal velocity");
  const VecDerivatives d = differentiate(geo, vel.v);
  std::vector<Sym2> out(geo.size());
  for (std::size_t n = 0; n < geo.size(); ++n) {
    const double w = vel.w[n];
    const Sym2& k = geo.k[n];
    out[n].tt = d.f_t[n].dot(geo.x_t[n]) - w * k.tt;
    out[n].tp = 0.5 * (d.f_t[n].dot(geo.x_p[n]) + d.f_p[n].dot(geo.x_t[n])) - w * k.tp;
    out[n].pp = d.f_p[n].dot(geo.x_p[n]) - w * k.pp;
  }
  return out;
}

double trace(const Sym2& a, const Sym2& gi) { return gi.tt * a.tt + 2.0 * gi.tp * a.tp + gi.pp * a.pp; }

double contract(const Sym2& a, const Sym2& b, const Sym2& gi) {
  const Eigen::Matrix2d G = mat(gi);
  return (G * mat(a) * G).cwiseProduct(mat(b)).sum();
}

HybridStress helfrich_stress(const GeometryCache& geo, const MaterialParams& params) {
  const std::size_t N = geo.size();
  Field e(N);
  for (std::size_t n = 0; n < N; ++n) e[n] = geo.H[n] - params.c0;
  const sph::GridDerivatives d = sph::synthesize_derivatives(sph::analyze(e, geo.grd()), geo.grd(), false);
  HybridStress T;
  T.tan.resize(N);
  T.nor.resize(N);
  const double kap = params.kappa;
  for (std::size_t n = 0; n < N; ++n) {
    const Sym2& gi = geo.g_inv[n];
    const Sym2 kup = raise(geo.k[n], gi);
    const double h = e[n];
    T.tan[n] = {kap * (0.5 * h * h * gi.tt - h * kup.tt), kap * (0.5 * h * h * gi.tp - h * kup.tp),
                kap * (0.5 * h * h * gi.pp - h * kup.pp)};
    T.nor[n] = -kap * Eigen::Vector2d(gi.tt * d.f_t[n] + gi.tp * d.f_p[n], gi.tp * d.f_t[n] + gi.pp * d.f_p[n]);
  }
  return T;
}

HybridStress fluid_stress(const GeometryCache& geo, const SurfaceVelocity& vel, std::span<const double> q,
                          double mu) {
  require_size(q.size(), geo.size(), "surface pressure");
  const std::vector<Sym2> D = rate_of_strain(geo, vel);
  HybridStress T;
  T.tan.resize(geo.size());
  T.nor.assign(geo.size(), Eigen::Vector2d::Zero());
  for (std::size_t n = 0; n < geo.size(); ++n) {
    const Sym2& gi = geo.g_inv[n];
    const Sym2 Du = raise(D[n], gi);
    T.tan[n] = {-q[n] * gi.tt + 2 * mu * Du.tt, -q[n] * gi.tp + 2 * mu * Du.tp, -q[n] * gi.pp + 2 * mu * Du.pp};
  }
  return T;
}

HybridStress operator+(const HybridStress& a, const HybridStress& b) {
  HybridStress c = a;
  for (std::size_t n = 0; n < c.tan.size(); ++n) {
    c.tan[n].tt += b.tan[n].tt;
    c.tan[n].tp += b.tan[n].tp;
    c.tan[n].pp += b.tan[n].pp;
    c.nor[n] += b.nor[n];
  }
  return c;
}

VecField hybrid_div(const GeometryCache& geo, const HybridStress& T) {
  const std::size_t N = geo.size();
  require_size(T.tan.size(), N, "stress");
  std::vector<Eigen::Matrix3d> M(N);
  VecField nvec(N);
  for (std::size_t n = 0; n < N; ++n) {
    const Sym2& t = T.tan[n];
    const Vec3& xt = geo.x_t[n];
    const Vec3& xp = geo.x_p[n];
    M[n] = t.tt * xt * xt.transpose() + t.tp * (xt * xp.transpose() + xp * xt.transpose()) + t.pp * xp * xp.transpose();
    nvec[n] = T.nor[n][0] * xt + T.nor[n][1] * xp;
  }
  const VecField divM = tensor_div(geo, M);
  const Field divN = tangential_div(geo, nvec);
  VecField out(N);
  for (std::size_t n = 0; n < N; ++n) {
    const Vec3& nu = geo.nu[n];
    const Vec3 tan_part = divM[n] - nu.dot(divM[n]) * nu;
    const Sym2& t = T.tan[n];
    const Sym2& k = geo.k[n];
    const double tk = t.tt * k.tt + 2.0 * t.tp * k.tp + t.pp * k.pp;
    const Eigen::Vector2d kn = geo.shape_op[n].transpose() * T.nor[n];
    out[n] = tan_part + (tk + divN[n]) * nu - (kn[0] * geo.x_t[n] + kn[1] * geo.x_p[n]);
  }
  return out;
}

StressDivergence div_total_stress(const GeometryCache& geo, const SurfaceVelocity& vel, std::span<const double> q,
                                  const MaterialParams& params) {
  const std::size_t N = geo.size();
  require_size(q.size(), N, "surface pressure");
  require_size(vel.w.size(), N, "normal velocity");
  const double mu = params.mu;
  const VecDerivatives dv = differentiate(geo, vel.v);

  // ∇v as an ambient tensor (P ∂_β V) ⊗ X^β and w k^{αβ} X_α ⊗ X_β
  std::vector<Eigen::Matrix3d> grad_v(N), wk(N);
  Field wH(N), vk(N);
  for (std::size_t n = 0; n < N; ++n) {
    const Vec3& nu = geo.nu[n];
    const Sym2& gi = geo.g_inv[n];
    const Vec3 pt = dv.f_t[n] - nu.dot(dv.f_t[n]) * nu;
    const Vec3 pp = dv.f_p[n] - nu.dot(dv.f_p[n]) * nu;
    const Vec3 up_t = gi.tt * geo.x_t[n] + gi.tp * geo.x_p[n];
    const Vec3 up_p = gi.tp * geo.x_t[n] + gi.pp * geo.x_p[n];
    grad_v[n] = pt * up_t.transpose() + pp * up_p.transpose();
    const Sym2 ku = raise(geo.k[n], gi);
    const Vec3& xt = geo.x_t[n];
    const Vec3& xp = geo.x_p[n];
    wk[n] = vel.w[n] * (ku.tt * xt * xt.transpose() + ku.tp * (xt * xp.transpose() + xp * xt.transpose()) +
                        ku.pp * xp * xp.transpose());
    wH[n] = vel.w[n] * geo.H[n];
    // v_{α;β} k^{αβ} with v_{α;β} = ∂_β V · X_α
    const Sym2& k = ku;
    vk[n] = dv.f_t[n].dot(xt) * k.tt + (dv.f_t[n].dot(xp) + dv.f_p[n].dot(xt)) * k.tp + dv.f_p[n].dot(xp) * k.pp;
  }
  const VecField lap_v = tensor_div(geo, grad_v);
  const VecField div_wk = tensor_div(geo, wk);
  const VecField grad_q = surface_gradient(geo, q);
  const VecField grad_wH = surface_gradient(geo, wH);
  const Field gF = grad_l2_F(geo, params);

  StressDivergence out;
  out.tangential.resize(N);
  out.normal.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    const Vec3& nu = geo.nu[n];
    const double H = geo.H[n], K = geo.K[n];
    Vec3 t = -grad_q[n] + mu * (lap_v[n] + grad_wH[n] + K * vel.v[n] - 2.0 * div_wk[n]);
    out.tangential[n] = t - nu.dot(t) * nu;
    out.normal[n] = -q[n] * H + 2.0 * mu * (vk[n] - vel.w[n] * (H * H - 2.0 * K)) - gF[n];
  }
  return out;
}

ReynoldsNumbers reynolds_numbers(const MaterialParams& params, double L_typ, double T_typ) {
  if (!(L_typ > 0) || !(T_typ > 0) || !(params.mu_b > 0) || !(params.mu > 0) || params.rho_b < 0 || params.rho < 0)
    throw Error(ErrorKind::InvalidParameter, "Reynolds numbers need positive length, time and viscosities");
  return {params.rho_b * L_typ * L_typ / (params.mu_b * T_typ), params.rho * L_typ * L_typ / (params.mu * T_typ)};
}

void write_shape(std::ostream& os, const SurfaceShape& shape) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", shape.domain().a, shape.domain().r_outer, shape.lmax());
  os << buf;
  sph::write_coeffs(os, shape.h());
}

SurfaceShape read_shape(std::istream& is, double tubular_radius) {
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto p = line.find_first_not_of(" \t\r");
    if (p != std::string::npos && line[p] != '#') break;
  }
  std::istringstream hs(line);
  DomainSpec dom;
  int lmax = 0;
  std::string extra;
  if (!(hs >> dom.a >> dom.r_outer >> lmax) || (hs >> extra))
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected header 'a r_outer lmax'");
  if (lmax < 0) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": negative lmax");
  dom.tubular_radius = tubular_radius > 0 ? tubular_radius : DomainSpec::default_tubular_radius(dom.a, dom.r_outer);
  std::vector<std::string> rest;
  for (std::string l; std::getline(is, l);) rest.push_back(l);
  return SurfaceShape(dom, sph::parse_coeffs(rest, lmax, line_no + 1));
}

}  // namespace vesicle
