#include "vesicle/sphharm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "vesicle/error.hpp"

namespace vesicle::sph {

namespace {
constexpr double kPi = std::numbers::pi;
}  // namespace

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    // descending x = ascending θ
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

namespace {

// Normalized associated Legendre values P̄_l^m(cos θ) for one θ, m ≤ l ≤ lmax,
// stored in triangular order.
void legendre_row(int lmax, double x, double s, std::vector<double>& p) {
  auto tri = [](int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); };
  p.assign(tri(lmax, lmax) + 1, 0.0);
  p[0] = std::sqrt(1.0 / (4.0 * kPi));
  for (int m = 1; m <= lmax; ++m)
    p[tri(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[tri(m - 1, m - 1)];
  for (int m = 0; m < lmax; ++m)
    p[tri(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * p[tri(m, m)];
  for (int m = 0; m <= lmax; ++m) {
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
    }
  }
}

// dP̄_l^m/dθ from neighbouring orders.
double dlegendre(const std::vector<double>& p, int l, int m) {
  auto at = [&](int mm) { return p[static_cast<std::size_t>(l * (l + 1) / 2 + mm)]; };
  if (m == 0) return l == 0 ? 0.0 : -std::sqrt(l * (l + 1.0)) * at(1);
  double d = 0.5 * std::sqrt((l + m) * (l - m + 1.0)) * at(m - 1);
  if (m < l) d -= 0.5 * std::sqrt((l - m) * (l + m + 1.0)) * at(m + 1);
  return d;
}

void check_field(std::span<const double> field, const SphGrid& grid) {
  if (field.size() != grid.size())
    throw Error(ErrorKind::ShapeError, "field has " + std::to_string(field.size()) +
                                           " samples, grid has " + std::to_string(grid.size()));
}

}  // namespace

ShCoeffs::ShCoeffs(int lmax, CoeffKind kind) : lmax_(lmax), kind_(kind), c_(count(lmax), 0.0) {}

void ShCoeffs::set_kind(CoeffKind kind) {
  kind_ = kind;
  if (kind != CoeffKind::Scalar && !c_.empty()) c_[0] = 0.0;
}

ShCoeffs ShCoeffs::resized(int lmax) const {
  ShCoeffs out(lmax, kind_);
  const int l_copy = std::min(lmax, lmax_);
  for (int l = 0; l <= l_copy; ++l)
    for (int m = -l; m <= l; ++m) out(l, m) = (*this)(l, m);
  return out;
}

double ShCoeffs::norm2() const {
  double s = 0.0;
  for (double v : c_) s += v * v;
  return s;
}

double ShCoeffs::max_abs() const {
  double s = 0.0;
  for (double v : c_) s = std::max(s, std::abs(v));
  return s;
}

ShCoeffs& ShCoeffs::operator+=(const ShCoeffs& o) {
  if (o.lmax_ > lmax_) *this = resized(o.lmax_);
  for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

ShCoeffs& ShCoeffs::operator-=(const ShCoeffs& o) {
  if (o.lmax_ > lmax_) *this = resized(o.lmax_);
  for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

ShCoeffs& ShCoeffs::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

SphGrid build_grid(int lmax) {
  if (lmax < 2) throw Error(ErrorKind::InvalidBandLimit, "lmax must be >= 2, got " + std::to_string(lmax));
  SphGrid g;
  g.lmax_ = lmax;
  g.n_theta_ = lmax + 1;
  g.n_phi_ = 2 * lmax + 2;
  g.dphi_ = 2.0 * kPi / g.n_phi_;
  gauss_legendre(g.n_theta_, g.x_, g.w_);
  g.theta_.resize(g.n_theta_);
  g.s_.resize(g.n_theta_);
  for (int j = 0; j < g.n_theta_; ++j) {
    g.theta_[j] = std::acos(g.x_[j]);
    g.s_[j] = std::sqrt((1.0 - g.x_[j]) * (1.0 + g.x_[j]));
  }
  const std::size_t ntri = SphGrid::tri(lmax, lmax) + 1;
  g.p_.assign(ntri * g.n_theta_, 0.0);
  g.dp_.assign(ntri * g.n_theta_, 0.0);
  std::vector<double> row;
  for (int j = 0; j < g.n_theta_; ++j) {
    legendre_row(lmax + 1, g.x_[j], g.s_[j], row);
    for (int l = 0; l <= lmax; ++l)
      for (int m = 0; m <= l; ++m) {
        const std::size_t t = SphGrid::tri(l, m);
        g.p_[t * g.n_theta_ + j] = row[t];
        g.dp_[t * g.n_theta_ + j] = dlegendre(row, l, m);
      }
  }
  g.cosm_.resize(static_cast<std::size_t>(lmax + 1) * g.n_phi_);
  g.sinm_.resize(static_cast<std::size_t>(lmax + 1) * g.n_phi_);
  for (int m = 0; m <= lmax; ++m)
    for (int k = 0; k < g.n_phi_; ++k) {
      g.cosm_[static_cast<std::size_t>(m) * g.n_phi_ + k] = std::cos(m * g.dphi_ * k);
      g.sinm_[static_cast<std::size_t>(m) * g.n_phi_ + k] = std::sin(m * g.dphi_ * k);
    }
  return g;
}

int dealiased_band(int lmax) { return std::max((3 * lmax + 1) / 2, lmax + 40); }

ShCoeffs analyze(std::span<const double> field, const SphGrid& grid, int lmax_out) {
  check_field(field, grid);
  const int L = grid.lmax();
  const int lout = lmax_out < 0 ? L : std::min(lmax_out, L);
  ShCoeffs c(lout);
  const int nt = grid.n_theta(), np = grid.n_phi();
  std::vector<double> a(lout + 1), b(lout + 1);
  for (int j = 0; j < nt; ++j) {
    const double* row = field.data() + grid.node(j, 0);
    for (int m = 0; m <= lout; ++m) {
      double sc = 0.0, ss = 0.0;
      for (int k = 0; k < np; ++k) {
        sc += row[k] * grid.cos_m_phi(m, k);
        ss += row[k] * grid.sin_m_phi(m, k);
      }
      const double f = m == 0 ? 1.0 : std::numbers::sqrt2;
      a[m] = f * sc * grid.weight(j);
      b[m] = f * ss * grid.weight(j);
    }
    for (int l = 0; l <= lout; ++l) {
      c(l, 0) += a[0] * grid.plm(l, 0, j);
      for (int m = 1; m <= l; ++m) {
        const double p = grid.plm(l, m, j);
        c(l, m) += a[m] * p;
        c(l, -m) += b[m] * p;
      }
    }
  }
  return c;
}

GridDerivatives synthesize_derivatives(const ShCoeffs& coeffs, const SphGrid& grid, bool second_order) {
  if (coeffs.lmax() > grid.lmax())
    throw Error(ErrorKind::ShapeError, "coefficient band limit " + std::to_string(coeffs.lmax()) +
                                           " exceeds grid band limit " + std::to_string(grid.lmax()));
  const int L = coeffs.lmax();
  const int nt = grid.n_theta(), np = grid.n_phi();
  GridDerivatives d;
  d.f.assign(grid.size(), 0.0);
  d.f_t.assign(grid.size(), 0.0);
  d.f_p.assign(grid.size(), 0.0);
  if (second_order) {
    d.f_tt.assign(grid.size(), 0.0);
    d.f_tp.assign(grid.size(), 0.0);
    d.f_pp.assign(grid.size(), 0.0);
  }
  // Per row: A_m = Σ_l c_lm P̄, B_m = Σ_l c_l,-m P̄ and their θ-derivatives.
  std::vector<double> A(L + 1), B(L + 1), At(L + 1), Bt(L + 1), Att(L + 1), Btt(L + 1);
  for (int j = 0; j < nt; ++j) {
    const double s = grid.sin_theta(j), x = grid.cos_theta(j);
    const double cot = x / s;
    for (int m = 0; m <= L; ++m) {
      double a = 0, b = 0, at = 0, bt = 0, att = 0, btt = 0;
      for (int l = m; l <= L; ++l) {
        const double p = grid.plm(l, m, j), dp = grid.dplm(l, m, j);
        const double ca = coeffs(l, m), cb = m > 0 ? coeffs(l, -m) : 0.0;
        a += ca * p;
        b += cb * p;
        at += ca * dp;
        bt += cb * dp;
        // Legendre ODE in θ.
        const double ddp = -cot * dp - (l * (l + 1.0) - m * m / (s * s)) * p;
        att += ca * ddp;
        btt += cb * ddp;
      }
      const double f = m == 0 ? 1.0 : std::numbers::sqrt2;
      A[m] = f * a; B[m] = f * b; At[m] = f * at; Bt[m] = f * bt; Att[m] = f * att; Btt[m] = f * btt;
    }
    for (int k = 0; k < np; ++k) {
      double v = 0, vt = 0, vp = 0, vtt = 0, vtp = 0, vpp = 0;
      for (int m = 0; m <= L; ++m) {
        const double c = grid.cos_m_phi(m, k), sn = grid.sin_m_phi(m, k);
        v += A[m] * c + B[m] * sn;
        vt += At[m] * c + Bt[m] * sn;
        vp += m * (-A[m] * sn + B[m] * c);
        if (second_order) {
          vtt += Att[m] * c + Btt[m] * sn;
          vtp += m * (-At[m] * sn + Bt[m] * c);
          vpp += -static_cast<double>(m) * m * (A[m] * c + B[m] * sn);
        }
      }
      const std::size_t n = grid.node(j, k);
      d.f[n] = v;
      d.f_t[n] = vt;
      d.f_p[n] = vp;
      if (second_order) {
        d.f_tt[n] = vtt;
        d.f_tp[n] = vtp;
        d.f_pp[n] = vpp;
      }
    }
  }
  return d;
}

Field synthesize(const ShCoeffs& coeffs, const SphGrid& grid) {
  if (coeffs.lmax() > grid.lmax())
    throw Error(ErrorKind::ShapeError, "coefficient band limit " + std::to_string(coeffs.lmax()) +
                                           " exceeds grid band limit " + std::to_string(grid.lmax()));
  const int L = coeffs.lmax();
  Field f(grid.size(), 0.0);
  std::vector<double> A(L + 1), B(L + 1);
  for (int j = 0; j < grid.n_theta(); ++j) {
    for (int m = 0; m <= L; ++m) {
      double a = 0, b = 0;
      for (int l = m; l <= L; ++l) {
        const double p = grid.plm(l, m, j);
        a += coeffs(l, m) * p;
        if (m > 0) b += coeffs(l, -m) * p;
      }
      const double fm = m == 0 ? 1.0 : std::numbers::sqrt2;
      A[m] = fm * a;
      B[m] = fm * b;
    }
    for (int k = 0; k < grid.n_phi(); ++k) {
      double v = 0;
      for (int m = 0; m <= L; ++m) v += A[m] * grid.cos_m_phi(m, k) + B[m] * grid.sin_m_phi(m, k);
      f[grid.node(j, k)] = v;
    }
  }
  return f;
}

ShCoeffs laplace_beltrami_unit(const ShCoeffs& coeffs) {
  ShCoeffs out = coeffs;
  for (int l = 0; l <= coeffs.lmax(); ++l)
    for (int m = -l; m <= l; ++m) out(l, m) *= -l * (l + 1.0);
  return out;
}

double integrate(std::span<const double> field, std::span<const double> weight, const SphGrid& grid) {
  check_field(field, grid);
  check_field(weight, grid);
  double total = 0.0;
  for (int j = 0; j < grid.n_theta(); ++j) {
    double row = 0.0;
    for (int k = 0; k < grid.n_phi(); ++k) {
      const std::size_t n = grid.node(j, k);
      row += field[n] * weight[n];
    }
    total += row * grid.weight(j);
  }
  return total;
}

double integrate(std::span<const double> field, const SphGrid& grid) {
  check_field(field, grid);
  double total = 0.0;
  for (int j = 0; j < grid.n_theta(); ++j) {
    double row = 0.0;
    for (int k = 0; k < grid.n_phi(); ++k) row += field[grid.node(j, k)];
    total += row * grid.weight(j);
  }
  return total;
}

double real_ylm(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  std::vector<double> p;
  legendre_row(l, std::cos(theta), std::sin(theta), p);
  const double v = p[static_cast<std::size_t>(l * (l + 1) / 2 + am)];
  if (m == 0) return v;
  return std::numbers::sqrt2 * v * (m > 0 ? std::cos(am * phi) : std::sin(am * phi));
}

double evaluate(const ShCoeffs& coeffs, double theta, double phi) {
  const int L = coeffs.lmax();
  std::vector<double> p;
  legendre_row(std::max(L, 1), std::cos(theta), std::sin(theta), p);
  double v = 0.0;
  for (int l = 0; l <= L; ++l) {
    v += coeffs(l, 0) * p[static_cast<std::size_t>(l * (l + 1) / 2)];
    for (int m = 1; m <= l; ++m) {
      const double pm = std::numbers::sqrt2 * p[static_cast<std::size_t>(l * (l + 1) / 2 + m)];
      v += pm * (coeffs(l, m) * std::cos(m * phi) + coeffs(l, -m) * std::sin(m * phi));
    }
  }
  return v;
}

void write_coeffs(std::ostream& os, const ShCoeffs& coeffs) {
  char buf[128];
  for (int l = 0; l <= coeffs.lmax(); ++l)
    for (int m = -l; m <= l; ++m) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g 0\n", l, m, coeffs(l, m));
      os << buf;
    }
}

ShCoeffs parse_coeffs(std::span<const std::string> lines, int lmax, int first_line, CoeffKind kind) {
  ShCoeffs c(lmax, kind);
  int line_no = first_line;
  for (const std::string& raw : lines) {
    const int this_line = line_no++;
    std::string line = raw.substr(0, raw.find('#'));
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream is(line);
    int l = 0, m = 0;
    double re = 0.0, im = 0.0;
    std::string extra;
    if (!(is >> l >> m >> re >> im) || (is >> extra))
      throw Error(ErrorKind::ParseError, "line " + std::to_string(this_line) +
                                             ": expected 'l m re im', got '" + raw + "'");
    if (l < 0 || std::abs(m) > l || l > lmax)
      throw Error(ErrorKind::ParseError, "line " + std::to_string(this_line) + ": index (" +
                                             std::to_string(l) + ", " + std::to_string(m) +
                                             ") outside band limit " + std::to_string(lmax));
    if (im != 0.0)
      throw Error(ErrorKind::ParseError, "line " + std::to_string(this_line) +
                                             ": real basis requires im = 0");
    if (kind != CoeffKind::Scalar && l == 0 && re != 0.0)
      throw Error(ErrorKind::ParseError, "line " + std::to_string(this_line) +
                                             ": tangential potentials have no l = 0 entry");
    c(l, m) = re;
  }
  return c;
}

}  // namespace vesicle::sph
