#include "vesicle/stokes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "vesicle/error.hpp"

namespace vesicle {

namespace {

constexpr double kPi = std::numbers::pi;
const double kY00 = 1.0 / std::sqrt(4.0 * kPi);

constexpr int kIn = 0;
constexpr int kOut = 1;

}  // namespace

std::string to_string(Region r) { return r == Region::Inner ? "inner" : "outer"; }
std::string to_string(System s) { return s == System::S1 ? "s1" : "s2"; }

// ---------------------------------------------------------------- Radial

Radial::Radial(std::initializer_list<Mono> terms) {
  for (const Mono& t : terms) add(t.n, t.c);
}

void Radial::add(int n, double c) {
  if (c == 0.0) return;
  auto it = std::lower_bound(t_.begin(), t_.end(), n, [](const Mono& a, int k) { return a.n < k; });
  if (it != t_.end() && it->n == n) {
    it->c += c;
    if (it->c == 0.0) t_.erase(it);
  } else {
    t_.insert(it, Mono{n, c});
  }
}

Radial& Radial::operator+=(const Radial& o) {
  for (const Mono& t : o.t_) add(t.n, t.c);
  return *this;
}

Radial& Radial::operator*=(double s) {
  if (s == 0.0) {
    t_.clear();
    return *this;
  }
  for (Mono& t : t_) t.c *= s;
  return *this;
}

double Radial::operator()(double s) const {
  double v = 0.0;
  for (const Mono& t : t_) v += t.c * std::pow(s, t.n);
  return v;
}

Radial Radial::derivative() const {
  Radial d;
  for (const Mono& t : t_) d.add(t.n - 1, t.c * t.n);
  return d;
}

Radial Radial::shifted(int k) const {
  Radial d = *this;
  for (Mono& t : d.t_) t.n += k;
  return d;
}

Radial Radial::product(const Radial& o) const {
  Radial p;
  for (const Mono& x : t_)
    for (const Mono& y : o.t_) p.add(x.n + y.n, x.c * y.c);
  return p;
}

double Radial::integral(Region region, double R) const {
  double v = 0.0;
  for (const Mono& t : t_) {
    if (region == Region::Inner) {
      if (t.n <= -1) throw Error(ErrorKind::InvalidParameter, "radial integrand not integrable at r = 0");
      v += t.c / (t.n + 1);
    } else if (t.n == -1) {
      v += t.c * std::log(R);
    } else {
      v += t.c * (std::pow(R, t.n + 1) - 1.0) / (t.n + 1);
    }
  }
  return v;
}

// ---------------------------------------------------------------- data

StokesData::StokesData(int lmax_)
    : lmax(lmax_),
      f3_s(lmax_, sph::CoeffKind::Spheroidal),
      f3_t(lmax_, sph::CoeffKind::Toroidal),
      f3_nu(lmax_),
      f4(lmax_),
      f5(lmax_) {}

namespace {

// Scaled per-mode data.
struct ModeInput {
  std::array<Radial, 2> f1r, f1s, f1t, f2;
  double S = 0, Tt = 0, f3 = 0, f4 = 0, f5 = 0;
};

struct Units {
  double a, R, mu_b, mu;  // mu = μ/(μ_b a)
};

Units units_of(const MaterialParams& params, const DomainSpec& domain) {
  return {domain.a, domain.r_outer / domain.a, params.mu_b, params.mu / (params.mu_b * domain.a)};
}

double coeff_or_zero(const sph::ShCoeffs& c, int l, int m) {
  return (c.lmax() >= l) ? c(l, m) : 0.0;
}

std::vector<ModeInput> scaled_inputs(const StokesData& d, const Units& u) {
  const int L = d.lmax;
  std::vector<ModeInput> in(sph::ShCoeffs::count(L));
  auto put = [&](const std::vector<RadialTerm>& terms, auto member, int shift, double factor) {
    for (const RadialTerm& t : terms) {
      if (t.l < 0 || t.l > L || std::abs(t.m) > t.l)
        throw Error(ErrorKind::ShapeError, "bulk datum index (" + std::to_string(t.l) + ", " +
                                               std::to_string(t.m) + ") outside band limit");
      if (t.region == Region::Inner && t.p < 0)
        throw Error(ErrorKind::InvalidParameter, "inner-region exponents must be >= 0");
      const double c = t.value * std::pow(u.a, t.p + shift) * factor;
      (in[sph::ShCoeffs::index(t.l, t.m)].*member)[static_cast<int>(t.region)].add(t.p, c);
    }
  };
  put(d.f1_r, &ModeInput::f1r, 2, 1.0 / u.mu_b);
  put(d.f1_s, &ModeInput::f1s, 2, 1.0 / u.mu_b);
  put(d.f1_t, &ModeInput::f1t, 2, 1.0 / u.mu_b);
  put(d.f2, &ModeInput::f2, 1, 1.0);
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      ModeInput& x = in[sph::ShCoeffs::index(l, m)];
      x.S = coeff_or_zero(d.f3_s, l, m) / u.mu_b;
      x.Tt = coeff_or_zero(d.f3_t, l, m) / u.mu_b;
      x.f3 = coeff_or_zero(d.f3_nu, l, m) * u.a / u.mu_b;
      x.f4 = coeff_or_zero(d.f4, l, m) * u.a;
      x.f5 = coeff_or_zero(d.f5, l, m);
    }
  for (int g = 0; g < 2; ++g)
    if (!in[0].f1s[g].empty() || !in[0].f1t[g].empty())
      throw Error(ErrorKind::InvalidParameter, "tangential bulk force has no l = 0 component");
  for (const auto* c : {&d.f3_s, &d.f3_t, &d.f3_nu, &d.f4, &d.f5})
    if (c->lmax() > L) throw Error(ErrorKind::ShapeError, "surface datum exceeds data band limit");
  return in;
}

[[noreturn]] void resonant(int l, int p) {
  throw Error(ErrorKind::SolverDegenerate, "monomial forcing r^" + std::to_string(p) + " resonates with a homogeneous solution at l = " +
                                               std::to_string(l));
}

// Particular solution for the scaled forcing of one region (μ_b = 1):
// ΔU_r − P̃' = f1r, ΔV_s − P̃/s = f1s, ΔT = f1t, div u = f2, π = P̃ + f2.
RadialField particular(const ModeInput& in, int g, int l) {
  const double L = l * (l + 1.0);
  RadialField f;
  if (l == 0) {
    for (const Mono& t : in.f1r[g].terms()) {
      if (t.n == -1) resonant(l, t.n);
      f.P.add(t.n + 1, -t.c / (t.n + 1));
    }
    for (const Mono& t : in.f2[g].terms()) {
      if (t.n == -3) resonant(l, t.n);
      f.U.add(t.n + 1, t.c / (t.n + 3));
      f.P.add(t.n, 2.0 * t.c);
    }
    return f;
  }
  auto solve3 = [&](const Eigen::Matrix3d& A, const Eigen::Vector3d& b, int p) {
    Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
    if (!lu.isInvertible()) resonant(l, p);
    return Eigen::Vector3d(lu.solve(b));
  };
  auto forced = [&](int p, double alpha, double beta) {
    const double k = p + 2.0;
    Eigen::Matrix3d A;
    A << p + 4.0, -L, 0.0,
        k * (k + 1.0) - (2.0 + L), 2.0 * L, -(p + 1.0),
        2.0, k * (k + 1.0) - L, -1.0;
    const Eigen::Vector3d x = solve3(A, Eigen::Vector3d(0.0, alpha, beta), p);
    f.U.add(p + 2, x(0));
    f.V.add(p + 2, x(1));
    f.P.add(p + 1, x(2));
  };
  for (const Mono& t : in.f1r[g].terms()) forced(t.n, t.c, 0.0);
  for (const Mono& t : in.f1s[g].terms()) forced(t.n, 0.0, t.c);
  for (const Mono& t : in.f1t[g].terms()) {
    const double k = t.n + 2.0;
    const double den = k * (k + 1.0) - L;
    if (den == 0.0) resonant(l, t.n);
    f.T.add(t.n + 2, t.c / den);
  }
  for (const Mono& t : in.f2[g].terms()) {
    const int p = t.n;
    const double k = p + 1.0;
    Eigen::Matrix3d A;
    A << p + 3.0, -L, 0.0,
        k * (k + 1.0) - (2.0 + L), 2.0 * L, -static_cast<double>(p),
        2.0, k * (k + 1.0) - L, -1.0;
    const Eigen::Vector3d x = solve3(A, Eigen::Vector3d(t.c, 0.0, 0.0), p);
    f.U.add(p + 1, x(0));
    f.V.add(p + 1, x(1));
    f.P.add(p, x(2) + t.c);
  }
  return f;
}

RadialField potential_solution(int n) {
  RadialField f;
  f.U.add(n - 1, n);
  f.V.add(n - 1, 1.0);
  return f;
}

RadialField pressure_solution(int n) {
  const double A = (n + 3.0) / (2.0 * (n + 1.0) * (2.0 * n + 3.0));
  const double B = -n / ((n + 1.0) * (2.0 * n + 3.0));
  RadialField f;
  f.P.add(n, 1.0);
  f.U.add(n + 1, A * n + B);
  f.V.add(n + 1, A);
  return f;
}

RadialField toroidal_solution(int n) {
  RadialField f;
  f.T.add(n, 1.0);
  return f;
}

RadialField scaled(RadialField f, double s) {
  f.U *= s;
  f.V *= s;
  f.T *= s;
  f.P *= s;
  return f;
}

RadialField& operator+=(RadialField& a, const RadialField& b) {
  a.U += b.U;
  a.V += b.V;
  a.T += b.T;
  a.P += b.P;
  return a;
}

using Fields = std::array<RadialField, 2>;

double d1(const Radial& f, double s) { return f.derivative()(s); }

double traction_s(const RadialField& f, double s) { return d1(f.V, s) - f.V(s) / s + f.U(s) / s; }
double traction_t(const RadialField& f, double s) { return d1(f.T, s) - f.T(s) / s; }
double traction_r(const RadialField& f) { return -f.P(1.0) + 2.0 * d1(f.U, 1.0); }

// Poloidal interface rows: continuity of U and V, outer no-slip for U and V,
// surface incompressibility, tangential balance, normal balance (s1) or
// prescribed normal velocity (s2).
std::array<double, 7> poloidal_rows(const Fields& f, double q, int l, const Units& u, System sys) {
  const double L = l * (l + 1.0);
  const RadialField& in = f[kIn];
  const RadialField& out = f[kOut];
  const double Ui = in.U(1.0), Vi = in.V(1.0);
  const double div_s = -L * Vi + 2.0 * Ui;
  std::array<double, 7> r{};
  r[0] = out.U(1.0) - Ui;
  r[1] = out.V(1.0) - Vi;
  r[2] = out.U(u.R);
  r[3] = out.V(u.R);
  r[4] = div_s;
  r[5] = -q + u.mu * ((2.0 - 2.0 * L) * Vi + 2.0 * Ui) + traction_s(out, 1.0) - traction_s(in, 1.0);
  r[6] = sys == System::S1 ? 2.0 * q - 2.0 * u.mu * div_s + traction_r(out) - traction_r(in) : Ui;
  return r;
}

std::array<double, 7> poloidal_rhs(const ModeInput& x, System sys) {
  return {0.0, 0.0, 0.0, 0.0, x.f4, x.S, sys == System::S1 ? x.f3 : x.f5};
}

std::array<double, 3> toroidal_rows(const Fields& f, int l, const Units& u) {
  const double L = l * (l + 1.0);
  return {f[kOut].T(1.0) - f[kIn].T(1.0), f[kOut].T(u.R),
          u.mu * (2.0 - L) * f[kIn].T(1.0) + traction_t(f[kOut], 1.0) - traction_t(f[kIn], 1.0)};
}

// l = 0 rows: continuity of U, outer no-slip, incompressibility, normal
// balance (s1) or prescribed normal velocity (s2).
std::array<double, 4> radial_rows(const Fields& f, double q, const Units& u, System sys) {
  const double Ui = f[kIn].U(1.0);
  return {f[kOut].U(1.0) - Ui, f[kOut].U(u.R), 2.0 * Ui,
          sys == System::S1 ? 2.0 * q - 4.0 * u.mu * Ui + traction_r(f[kOut]) - traction_r(f[kIn]) : Ui};
}

template <int N>
Eigen::Matrix<double, N, 1> to_vec(const std::array<double, N>& a) {
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = a[i];
  return v;
}

struct Column {
  int region;
  RadialField f;
  bool is_q = false;
  double scale = 1.0;
};

// Solves the square system whose columns are basis fields (or q), adding the
// solution to `base` and `q`; returns the smallest singular value of the
// equilibrated matrix relative to the largest.
template <int N, class Rows>
double solve_block(Fields& base, double& q, std::vector<Column> cols, const std::array<double, N>& rhs,
                   Rows rows, int l, int m) {
  using Mat = Eigen::Matrix<double, N, N>;
  using Vec = Eigen::Matrix<double, N, 1>;
  Mat A;
  for (int j = 0; j < N; ++j) {
    Fields f;
    double qq = 0.0;
    if (cols[j].is_q)
      qq = 1.0;
    else
      f[cols[j].region] = cols[j].f;
    Vec c = to_vec<N>(rows(f, qq));
    const double s = c.cwiseAbs().maxCoeff();
    if (s > 0) cols[j].scale = 1.0 / s;
    A.col(j) = c * cols[j].scale;
  }
  const Vec b = to_vec<N>(rhs) - to_vec<N>(rows(base, q));
  Vec rs = A.rowwise().template lpNorm<Eigen::Infinity>();
  for (int i = 0; i < N; ++i)
    if (rs(i) == 0) rs(i) = 1.0;
  const Mat Ae = rs.cwiseInverse().asDiagonal() * A;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(Ae)};
  const auto& sv = svd.singularValues();
  const double smin = sv(N - 1) / sv(0);
  if (!(smin > 1e-14))
    throw Error(ErrorKind::SolverDegenerate, "mode (" + std::to_string(l) + ", " + std::to_string(m) +
                                                 ") singular, smallest singular value " + std::to_string(sv(N - 1)));
  const Vec x = Eigen::FullPivLU<Mat>(Ae).solve(rs.cwiseInverse().asDiagonal() * b);
  for (int j = 0; j < N; ++j) {
    const double c = x(j) * cols[j].scale;
    if (cols[j].is_q)
      q += c;
    else
      base[cols[j].region] += scaled(cols[j].f, c);
  }
  return smin;
}

ModeSolution solve_mode(const ModeInput& x, int l, int m, const Units& u, System sys) {
  ModeSolution sol;
  sol.l = l;
  sol.m = m;
  Fields& f = sol.field;
  f[kIn] = particular(x, kIn, l);
  f[kOut] = particular(x, kOut, l);
  if (l == 0) {
    RadialField c;
    c.U.add(-2, f[kIn].U(1.0) - f[kOut].U(1.0));
    f[kOut] += c;
    if (sys == System::S1) {
      const double r = radial_rows(f, 0.0, u, sys)[3];
      f[kIn].P.add(0, x.f3 - r);
    }
    sol.sigma_min = 1.0;
    return sol;
  }
  const int n = l, k = -l - 1;
  std::vector<Column> pol = {
      {kIn, potential_solution(n)},  {kIn, pressure_solution(n)},  {kOut, potential_solution(n)},
      {kOut, potential_solution(k)}, {kOut, pressure_solution(n)}, {kOut, pressure_solution(k)},
  };
  pol.push_back({kIn, RadialField{}, true});
  const double s1 = solve_block<7>(
      f, sol.q, pol, poloidal_rhs(x, sys), [&](const Fields& ff, double qq) { return poloidal_rows(ff, qq, l, u, sys); },
      l, m);
  std::vector<Column> tor = {{kIn, toroidal_solution(n)}, {kOut, toroidal_solution(n)}, {kOut, toroidal_solution(k)}};
  double qdummy = 0.0;
  const double s2 = solve_block<3>(
      f, qdummy, tor, {0.0, 0.0, x.Tt}, [&](const Fields& ff, double) { return toroidal_rows(ff, l, u); }, l, m);
  sol.sigma_min = std::min(s1, s2);
  return sol;
}

void refresh_surface(StokesSolution& s) {
  const int L = s.lmax;
  const double a = s.domain.a, mu_b = s.params.mu_b;
  s.w = sph::ShCoeffs(L);
  s.phi = sph::ShCoeffs(L, sph::CoeffKind::Spheroidal);
  s.psi = sph::ShCoeffs(L, sph::CoeffKind::Toroidal);
  s.q = sph::ShCoeffs(L);
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      const ModeSolution& md = s.mode(l, m);
      const RadialField& in = md.field[kIn];
      s.w(l, m) = in.U(1.0);
      if (l > 0) {
        s.phi(l, m) = a * in.V(1.0);
        s.psi(l, m) = a * in.T(1.0);
      }
      s.q(l, m) = mu_b * md.q;
    }
  for (int g = 0; g < 2; ++g) {
    double c0 = 0.0;
    for (const Mono& t : s.modes[0].field[g].P.terms())
      if (t.n == 0) c0 = t.c;
    s.pi_const[g] = mu_b / a * c0 * kY00;
  }
}

StokesSolution solve_system(const StokesData& data, const MaterialParams& params, const DomainSpec& domain,
                            System sys) {
  params.validate();
  domain.validate();
  const CompatReport rep = check_compat(data, sys, domain);
  if (!rep.passed)
    throw Error(ErrorKind::CompatibilityError,
                "data violate the compatibility conditions (comp1 " + std::to_string(rep.comp1) + ", comp2 " +
                    std::to_string(rep.comp2) + ", comp3 " + std::to_string(rep.comp3_flux) + " / " +
                    std::to_string(rep.comp3_div) + ")");
  const Units u = units_of(params, domain);
  const std::vector<ModeInput> in = scaled_inputs(data, u);
  StokesSolution s;
  s.system = sys;
  s.params = params;
  s.domain = domain;
  s.lmax = data.lmax;
  s.modes.resize(in.size());
  // Modes are independent; solved in canonical order.
  for (int l = 0; l <= data.lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const std::size_t i = sph::ShCoeffs::index(l, m);
      s.modes[i] = solve_mode(in[i], l, m, u, sys);
    }
  refresh_surface(s);
  apply_gauge(s);
  return s;
}

double flux_integral(const std::vector<ModeInput>& in, int g, const Units& u) {
  // ∫ f2 dx over one region, physical (1/time · length³); scaled f2 = a·f2.
  const double a = u.a;
  return in[0].f2[g].shifted(2).integral(static_cast<Region>(g), u.R) * a * a / kY00;
}

}  // namespace

CompatReport check_compat(const StokesData& data, System system, const DomainSpec& domain) {
  domain.validate();
  MaterialParams unit;
  const Units u = units_of(unit, domain);
  const std::vector<ModeInput> in = scaled_inputs(data, u);
  const double a = domain.a;
  const double area = 4.0 * kPi * a * a;
  const double H = -2.0 / a;
  const double f4_00 = coeff_or_zero(data.f4, 0, 0) * kY00;
  const double f5_00 = coeff_or_zero(data.f5, 0, 0) * kY00;
  const double flux_in = flux_integral(in, kIn, u);
  const double flux_out = flux_integral(in, kOut, u);
  CompatReport r;
  r.comp2 = flux_in + flux_out;
  if (system == System::S1) {
    r.comp1 = f4_00 * area / H + flux_in;
  } else {
    r.comp3_flux = flux_in - f5_00 * area;
    r.comp3_div = (f4_00 + f5_00 * H) * area;
  }
  // Nondimensional: fluxes relative to a³ times the largest datum rate.
  double rate = 0.0;
  for (const auto* c : {&data.f4, &data.f5}) rate = std::max(rate, c->max_abs() / (c == &data.f5 ? a : 1.0));
  for (const RadialTerm& t : data.f2) {
    const double rr = t.region == Region::Inner ? a : domain.r_outer;
    rate = std::max(rate, std::abs(t.value) * std::pow(rr, t.p));
  }
  const double scale = std::max(rate, 1e-300) * a * a * a;
  for (double d : {r.comp1, r.comp2, r.comp3_flux, r.comp3_div})
    if (std::abs(d) > 1e-10 * scale) r.passed = false;
  return r;
}

StokesSolution solve_s1(const StokesData& data, const MaterialParams& params, const DomainSpec& domain) {
  return solve_system(data, params, domain, System::S1);
}

StokesSolution solve_s2(const StokesData& data, const MaterialParams& params, const DomainSpec& domain) {
  return solve_system(data, params, domain, System::S2);
}

StokesSolution velocity_field(std::vector<ModeSolution> modes, int lmax, const MaterialParams& params,
                              const DomainSpec& domain) {
  if (modes.size() != sph::ShCoeffs::count(lmax)) throw Error(ErrorKind::ShapeError, "mode count mismatch");
  StokesSolution s;
  s.params = params;
  s.domain = domain;
  s.lmax = lmax;
  s.modes = std::move(modes);
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      ModeSolution& md = s.modes[sph::ShCoeffs::index(l, m)];
      md.l = l;
      md.m = m;
    }
  refresh_surface(s);
  return s;
}

// ---------------------------------------------------------------- accessors

double StokesSolution::U(Region g, int l, int m, double r) const {
  return mode(l, m).field[static_cast<int>(g)].U(r / domain.a);
}
double StokesSolution::V(Region g, int l, int m, double r) const {
  return mode(l, m).field[static_cast<int>(g)].V(r / domain.a);
}
double StokesSolution::T(Region g, int l, int m, double r) const {
  return mode(l, m).field[static_cast<int>(g)].T(r / domain.a);
}
double StokesSolution::pressure(Region g, int l, int m, double r) const {
  return params.mu_b / domain.a * mode(l, m).field[static_cast<int>(g)].P(r / domain.a);
}

double StokesSolution::pressure_integral(Region g) const {
  const double a = domain.a;
  const Radial& P = modes[0].field[static_cast<int>(g)].P;
  return params.mu_b * a * a * P.shifted(2).integral(g, domain.r_outer / a) / kY00;
}

// ---------------------------------------------------------------- gauge

void shift_pressures(StokesSolution& sol, double s_in, double s_out, double s_q) {
  const double a = sol.domain.a, mu_b = sol.params.mu_b;
  sol.modes[0].field[kIn].P.add(0, s_in * a / mu_b / kY00);
  sol.modes[0].field[kOut].P.add(0, s_out * a / mu_b / kY00);
  sol.modes[0].q += s_q / mu_b / kY00;
  refresh_surface(sol);
}

void apply_gauge(StokesSolution& sol) {
  const double a = sol.domain.a, R = sol.domain.r_outer;
  const double v_in = 4.0 * kPi * a * a * a / 3.0;
  const double v_out = 4.0 * kPi * (R * R * R - a * a * a) / 3.0;
  const double area = 4.0 * kPi * a * a;
  const double H = -2.0 / a;
  const double I_in = sol.pressure_integral(Region::Inner);
  const double I_out = sol.pressure_integral(Region::Outer);
  const double Q = sol.q(0, 0) / kY00 * a * a;
  if (sol.system == System::S2) {
    shift_pressures(sol, -I_in / v_in, -I_out / v_out, -Q / area);
    return;
  }
  // Kernel of the normal balance: π_in += α + βH, π_out += α, q += β.
  Eigen::Matrix2d A;
  A << v_in + v_out, H * v_in, v_in, area / H + H * v_in;
  const Eigen::Vector2d b(-(I_in + I_out), -(Q / H + I_in));
  const Eigen::Vector2d x = A.fullPivLu().solve(b);
  shift_pressures(sol, x(0) + x(1) * H, x(0), x(1));
}

// ---------------------------------------------------------------- energies

namespace {

// Bilinear angular/radial integrands in internal units; each returns the
// integral over one region of the per-mode density times s².
double strain_pair(const RadialField& f, const RadialField& h, int l, Region g, double R) {
  const double L = l * (l + 1.0);
  auto sd = [](const Radial& x) { return x.derivative().shifted(1); };
  const Radial as_f = sd(f.V) + (-1.0) * f.V + f.U;
  const Radial as_h = sd(h.V) + (-1.0) * h.V + h.U;
  const Radial at_f = sd(f.T) + (-1.0) * f.T;
  const Radial at_h = sd(h.T) + (-1.0) * h.T;
  Radial d = sd(f.U).product(sd(h.U));
  d += (0.5 * L) * (as_f.product(as_h) + at_f.product(at_h));
  d += (L * L - L) * f.V.product(h.V);
  d += (-L) * (f.U.product(h.V) + h.U.product(f.V));
  d += 2.0 * f.U.product(h.U);
  d += (0.5 * L * (L - 2.0)) * f.T.product(h.T);
  return d.integral(g, R);
}

double grad_pair(const RadialField& f, const RadialField& h, int l, Region g, double R) {
  const double L = l * (l + 1.0);
  auto sd = [](const Radial& x) { return x.derivative().shifted(1); };
  Radial d = sd(f.U).product(sd(h.U));
  d += L * (sd(f.V).product(sd(h.V)) + sd(f.T).product(sd(h.T)));
  d += (L + 2.0) * f.U.product(h.U);
  d += (-2.0 * L) * (f.U.product(h.V) + h.U.product(f.V));
  d += (L * L) * (f.V.product(h.V) + f.T.product(h.T));
  return d.integral(g, R);
}

double surface_strain_pair(const RadialField& f, const RadialField& h, int l) {
  const double L = l * (l + 1.0);
  const double U1 = f.U(1.0), V1 = f.V(1.0), T1 = f.T(1.0);
  const double U2 = h.U(1.0), V2 = h.V(1.0), T2 = h.T(1.0);
  return (L * L - L) * V1 * V2 + 0.5 * L * (L - 2.0) * T1 * T2 - L * (V1 * U2 + U1 * V2) + 2.0 * U1 * U2;
}

void require_compatible(const StokesSolution& a, const StokesSolution& b) {
  if (a.lmax != b.lmax || a.domain.a != b.domain.a || a.domain.r_outer != b.domain.r_outer)
    throw Error(ErrorKind::ShapeError, "fields live on different discretizations");
}

}  // namespace

double dissipation_pair(const StokesSolution& u1, const StokesSolution& u2) {
  require_compatible(u1, u2);
  const Units u = units_of(u1.params, u1.domain);
  double bulk = 0.0, surf = 0.0;
  for (std::size_t i = 0; i < u1.modes.size(); ++i) {
    const ModeSolution& a = u1.modes[i];
    const ModeSolution& b = u2.modes[i];
    for (int g = 0; g < 2; ++g) bulk += strain_pair(a.field[g], b.field[g], a.l, static_cast<Region>(g), u.R);
    surf += surface_strain_pair(a.field[kIn], b.field[kIn], a.l);
  }
  return 2.0 * u.mu_b * u.a * (bulk + u.mu * surf);
}

double dissipation(const StokesSolution& sol) { return dissipation_pair(sol, sol); }

double gradient_norm2(const StokesSolution& s) {
  const double R = s.domain.r_outer / s.domain.a;
  double v = 0.0;
  for (const ModeSolution& md : s.modes)
    for (int g = 0; g < 2; ++g) v += grad_pair(md.field[g], md.field[g], md.l, static_cast<Region>(g), R);
  return s.domain.a * v;
}

double strain_norm2(const StokesSolution& s) {
  const double R = s.domain.r_outer / s.domain.a;
  double v = 0.0;
  for (const ModeSolution& md : s.modes)
    for (int g = 0; g < 2; ++g) v += strain_pair(md.field[g], md.field[g], md.l, static_cast<Region>(g), R);
  return s.domain.a * v;
}

double load_functional(const StokesData& data, const StokesSolution& phi) {
  const Units u = units_of(phi.params, phi.domain);
  const std::vector<ModeInput> in = scaled_inputs(data, u);
  if (data.lmax > phi.lmax) throw Error(ErrorKind::ShapeError, "test field band below data band");
  double v = 0.0;
  for (int l = 0; l <= data.lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const ModeInput& x = in[sph::ShCoeffs::index(l, m)];
      const ModeSolution& md = phi.mode(l, m);
      const double L = l * (l + 1.0);
      const RadialField& s = md.field[kIn];
      v += x.f3 * s.U(1.0) + L * (x.S * s.V(1.0) + x.Tt * s.T(1.0));
      for (int g = 0; g < 2; ++g) {
        const RadialField& f = md.field[g];
        Radial d = x.f1r[g].product(f.U) + L * (x.f1s[g].product(f.V) + x.f1t[g].product(f.T));
        v += d.shifted(2).integral(static_cast<Region>(g), u.R);
      }
    }
  return -u.mu_b * u.a * v;
}

// ---------------------------------------------------------------- residuals

double strong_residual(const StokesSolution& sol, const StokesData& data) {
  const Units u = units_of(sol.params, sol.domain);
  const std::vector<ModeInput> in = scaled_inputs(data, u);
  if (data.lmax != sol.lmax) throw Error(ErrorKind::ShapeError, "data and solution band limits differ");
  double scale = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const ModeSolution& md = sol.modes[i];
    for (double v : {in[i].S, in[i].Tt, in[i].f3, in[i].f4, in[i].f5, md.q}) scale = std::max(scale, std::abs(v));
    for (int g = 0; g < 2; ++g) {
      const RadialField& f = md.field[g];
      for (double v : {f.U(1.0), f.V(1.0), f.T(1.0), f.P(1.0)}) scale = std::max(scale, std::abs(v));
    }
  }
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  auto note = [&](double resid, double size) { worst = std::max(worst, std::abs(resid) / std::max(size, scale)); };
  const std::array<std::vector<double>, 2> samples = {
      std::vector<double>{0.25, 0.5, 0.75, 1.0},
      std::vector<double>{1.0, 1.0 + 0.25 * (u.R - 1.0), 0.5 * (1.0 + u.R), u.R}};
  for (std::size_t i = 0; i < in.size(); ++i) {
    const ModeSolution& md = sol.modes[i];
    const ModeInput& x = in[i];
    const int l = md.l;
    const double L = l * (l + 1.0);
    for (int g = 0; g < 2; ++g) {
      const RadialField& f = md.field[g];
      const Radial Pt = f.P + (-1.0) * x.f2[g];
      const Radial U1 = f.U.derivative(), U2 = U1.derivative();
      const Radial V1 = f.V.derivative(), V2 = V1.derivative();
      const Radial T1 = f.T.derivative(), T2 = T1.derivative();
      const Radial P1 = Pt.derivative();
      for (double s : samples[g]) {
        const double U = f.U(s), V = f.V(s), T = f.T(s);
        const std::array<double, 6> er = {U2(s), 2 * U1(s) / s, -(2 + L) * U / (s * s), 2 * L * V / (s * s), -P1(s),
                                          -x.f1r[g](s)};
        const std::array<double, 5> es = {V2(s), 2 * V1(s) / s, -L * V / (s * s), 2 * U / (s * s), -Pt(s) / s};
        const std::array<double, 4> et = {T2(s), 2 * T1(s) / s, -L * T / (s * s), -x.f1t[g](s)};
        const std::array<double, 4> ed = {U1(s), 2 * U / s, -L * V / s, -x.f2[g](s)};
        auto sum = [](const auto& e) {
          double a = 0, b = 0;
          for (double v : e) a += v, b += std::abs(v);
          return std::pair{a, b};
        };
        auto [r1, s1] = sum(er);
        auto [r2, s2] = sum(es);
        r2 -= x.f1s[g](s);
        s2 += std::abs(x.f1s[g](s));
        auto [r3, s3] = sum(et);
        auto [r4, s4] = sum(ed);
        note(r1, s1);
        if (l > 0) note(r2, s2), note(r3, s3);
        note(r4, s4);
      }
    }
    if (l == 0) {
      const auto r = radial_rows(md.field, md.q, u, sol.system);
      const std::array<double, 4> rhs = {0.0, 0.0, x.f4, sol.system == System::S1 ? x.f3 : x.f5};
      for (int k = 0; k < 4; ++k) note(r[k] - rhs[k], 0.0);
    } else {
      const auto r = poloidal_rows(md.field, md.q, l, u, sol.system);
      const auto rhs = poloidal_rhs(x, sol.system);
      for (int k = 0; k < 7; ++k) note(r[k] - rhs[k], 0.0);
      const auto t = toroidal_rows(md.field, l, u);
      const std::array<double, 3> trhs = {0.0, 0.0, x.Tt};
      for (int k = 0; k < 3; ++k) note(t[k] - trhs[k], 0.0);
    }
  }
  return worst;
}

// ---------------------------------------------------------------- inf-sup

namespace {

// Legendre values and derivatives P_k(x), P_k'(x) for k ≤ n.
void legendre_table(int n, double x, std::vector<double>& p, std::vector<double>& dp) {
  p.assign(n + 1, 0.0);
  dp.assign(n + 1, 0.0);
  p[0] = 1.0;
  if (n >= 1) p[1] = x, dp[1] = 1.0;
  for (int k = 1; k < n; ++k) {
    p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
    dp[k + 1] = dp[k - 1] + (2 * k + 1) * p[k];
  }
}

Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& C, int n) {
  if (C.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd{C, Eigen::ComputeFullV};
  const int r = static_cast<int>((svd.singularValues().array() > 1e-12 * svd.singularValues()(0)).count());
  return svd.matrixV().rightCols(n - r);
}

}  // namespace

InfSupReport infsup_mode(int l, const MaterialParams& params, const DomainSpec& domain, int degree, bool gauge) {
  params.validate();
  domain.validate();
  if (l < 0 || degree < 1) throw Error(ErrorKind::InvalidParameter, "infsup_mode needs l >= 0 and degree >= 1");
  const double R = domain.r_outer / domain.a;
  const double L = l * (l + 1.0);
  const bool has_v = l > 0;
  const int kp = degree, ku = degree + 2;
  const int nu1 = ku + 1, np1 = kp + 1;
  // Velocity unknowns: [U_in, V_in, U_out, V_out] Legendre coefficients.
  const int nvel = (has_v ? 4 : 2) * nu1;
  const int npr = 2 * np1 + 1;
  auto ucol = [&](int g, int comp) { return (has_v ? (2 * g + comp) : g) * nu1; };
  auto pcol = [&](int g) { return g * np1; };
  const int qcol = 2 * np1;

  std::vector<double> xg, wg;
  sph::gauss_legendre(ku + 8, xg, wg);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nvel, nvel);
  Eigen::MatrixXd Bm = Eigen::MatrixXd::Zero(npr, nvel);
  Eigen::MatrixXd Mz = Eigen::MatrixXd::Zero(npr, npr);
  std::vector<double> p, dp;
  for (int g = 0; g < 2; ++g) {
    const double lo = g == 0 ? 0.0 : 1.0, hi = g == 0 ? 1.0 : R;
    const double jac = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < xg.size(); ++i) {
      const double s = lo + jac * (xg[i] + 1.0), w = wg[i] * jac;
      legendre_table(ku, xg[i], p, dp);
      // Row vectors giving U, U', V, V' at s.
      Eigen::RowVectorXd U = Eigen::RowVectorXd::Zero(nvel), dU = U, V = U, dV = U;
      for (int k = 0; k < nu1; ++k) {
        U(ucol(g, 0) + k) = p[k];
        dU(ucol(g, 0) + k) = dp[k] / jac;
        if (has_v) V(ucol(g, 1) + k) = p[k], dV(ucol(g, 1) + k) = dp[k] / jac;
      }
      // ∫|∇u|² dΩ · s².
      G += w * (s * s * (dU.transpose() * dU + L * dV.transpose() * dV) + (L + 2) * U.transpose() * U -
                2 * L * (U.transpose() * V + V.transpose() * U) + L * L * V.transpose() * V);
      const Eigen::RowVectorXd div = s * s * dU + 2 * s * U - L * s * V;
      for (int k = 0; k < np1; ++k) {
        Bm.row(pcol(g) + k) += w * p[k] * div;
        for (int j = 0; j < np1; ++j) Mz(pcol(g) + k, pcol(g) + j) += w * s * s * p[k] * p[j];
      }
    }
  }
  // Traces at s = 1 (inner side) and boundary rows.
  auto trace = [&](int g, int comp, double x) {
    legendre_table(ku, x, p, dp);
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nvel);
    for (int k = 0; k < nu1; ++k) r(ucol(g, comp) + k) = p[k];
    return r;
  };
  const Eigen::RowVectorXd U1 = trace(0, 0, 1.0);
  const Eigen::RowVectorXd V1 = has_v ? trace(0, 1, 1.0) : Eigen::RowVectorXd::Zero(nvel);
  G += 2 * ((L * L - L) * V1.transpose() * V1 - L * (V1.transpose() * U1 + U1.transpose() * V1) +
            2 * U1.transpose() * U1) +
       L * V1.transpose() * V1 + U1.transpose() * U1;
  Bm.row(qcol) += -L * V1 + 2 * U1;
  Mz(qcol, qcol) = 1.0;

  const int ncons = has_v ? 4 : 2;
  Eigen::MatrixXd C(ncons, nvel);
  C.row(0) = trace(1, 0, -1.0) - U1;
  C.row(1) = trace(1, 0, 1.0);
  if (has_v) {
    C.row(2) = trace(1, 1, -1.0) - V1;
    C.row(3) = trace(1, 1, 1.0);
  }
  const Eigen::MatrixXd Nv = kernel_basis(C, nvel);

  // Pressure normalization of the round sphere: ∫π dx = 0, ∫q/H dA = −∫_{Ω¹}π dx.
  Eigen::MatrixXd Cp(0, npr);
  if (gauge && l == 0) {
    Eigen::RowVectorXd inner = Eigen::RowVectorXd::Zero(npr), all = inner;
    for (int g = 0; g < 2; ++g) {
      const double lo = g == 0 ? 0.0 : 1.0, hi = g == 0 ? 1.0 : R;
      const double jac = 0.5 * (hi - lo);
      for (std::size_t i = 0; i < xg.size(); ++i) {
        const double s = lo + jac * (xg[i] + 1.0), w = wg[i] * jac;
        legendre_table(kp, xg[i], p, dp);
        for (int k = 0; k < np1; ++k) {
          all(pcol(g) + k) += w * s * s * p[k];
          if (g == 0) inner(pcol(g) + k) += w * s * s * p[k];
        }
      }
    }
    Eigen::RowVectorXd qrow = -inner;
    qrow(qcol) += 1.0 / 2.0;  // ∫q/H dA with H = −2 moved to the left
    Cp.resize(2, npr);
    Cp.row(0) = all;
    Cp.row(1) = qrow;
  }
  const Eigen::MatrixXd Np = kernel_basis(Cp, npr);

  const Eigen::MatrixXd A = Nv.transpose() * G * Nv;
  const Eigen::MatrixXd M = Np.transpose() * Mz * Np;
  const Eigen::MatrixXd B = Np.transpose() * Bm * Nv;
  const Eigen::LLT<Eigen::MatrixXd> la(A), lm(M);
  if (la.info() != Eigen::Success || lm.info() != Eigen::Success)
    throw Error(ErrorKind::SolverDegenerate, "inf-sup Gram matrices are not positive definite");
  const Eigen::MatrixXd LAinvT = la.matrixL().solve(Eigen::MatrixXd::Identity(A.rows(), A.cols())).transpose();
  const Eigen::MatrixXd K = lm.matrixL().solve(B * LAinvT);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd{K};
  const Eigen::VectorXd sv = svd.singularValues();
  InfSupReport rep;
  rep.beta = sv(sv.size() - 1);
  rep.null_dim = static_cast<int>((sv.array() < 1e-10 * sv(0)).count());
  // Rows beyond the velocity dimension are null by counting.
  rep.null_dim += std::max<int>(0, static_cast<int>(K.rows()) - static_cast<int>(K.cols()));
  return rep;
}


// ---------------------------------------------------------------- NtD, metric

sph::ShCoeffs ntd_apply(const sph::ShCoeffs& psi, const MaterialParams& params, const DomainSpec& domain) {
  StokesData d(std::max(psi.lmax(), 1));
  d.f3_nu = psi.resized(d.lmax);
  return solve_s1(d, params, domain).w.resized(psi.lmax());
}

double mobility(int l, const MaterialParams& params, const DomainSpec& domain) {
  if (l < 1) throw Error(ErrorKind::InvalidParameter, "mobility is defined for l >= 1");
  const Units u = units_of(params, domain);
  ModeInput x;
  x.f3 = u.a / u.mu_b;
  return -solve_mode(x, l, 0, u, System::S1).field[kIn].U(1.0);
}

double metric_V(const sph::ShCoeffs& w1, const sph::ShCoeffs& w2, const MaterialParams& params,
                const DomainSpec& domain) {
  const int L = std::max({w1.lmax(), w2.lmax(), 1});
  auto solve = [&](const sph::ShCoeffs& w) {
    const double n = std::sqrt(w.norm2());
    if (std::abs(w(0, 0)) > 1e-10 * std::max(n, 1e-300) && w(0, 0) != 0.0)
      throw Error(ErrorKind::NotInTangentSpace, "normal velocity changes the enclosed volume (l = 0 coefficient " +
                                                    std::to_string(w(0, 0)) + ")");
    StokesData d(L);
    d.f5 = w.resized(L);
    d.f5(0, 0) = 0.0;
    return solve_s2(d, params, domain);
  };
  return dissipation_pair(solve(w1), solve(w2));
}

}  // namespace vesicle
