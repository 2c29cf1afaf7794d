#pragma once

// Real spherical-harmonic transforms on a Gauss-Legendre x equispaced grid.
//
// Basis convention (used by every module and every test):
//
//   Y_l^0(θ,φ)  =      P̄_l^0(cos θ)
//   Y_l^m(θ,φ)  = √2 · P̄_l^m(cos θ) cos(mφ)     m > 0
//   Y_l^m(θ,φ)  = √2 · P̄_l^|m|(cos θ) sin(|m|φ)  m < 0
//
// with P̄_l^m = sqrt((2l+1)/(4π) (l-m)!/(l+m)!) P_l^m and P_l^m the associated
// Legendre function *without* the Condon-Shortley phase. The set is
// orthonormal on the unit sphere: ∫ Y_l^m Y_l'^m' dΩ = δ_ll' δ_mm', so the
// (0,0) coefficient of a constant c is c·√(4π).

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace vesicle::sph {

/// Samples of a scalar field on the nodes of an SphGrid, θ-major.
using Field = std::vector<double>;

enum class CoeffKind { Scalar, Spheroidal, Toroidal };

class ShCoeffs {
 public:
  ShCoeffs() = default;
  explicit ShCoeffs(int lmax, CoeffKind kind = CoeffKind::Scalar);

  static constexpr std::size_t index(int l, int m) {
    return static_cast<std::size_t>(l * l + l + m);
  }
  static constexpr std::size_t count(int lmax) {
    return static_cast<std::size_t>((lmax + 1) * (lmax + 1));
  }

  int lmax() const { return lmax_; }
  CoeffKind kind() const { return kind_; }
  void set_kind(CoeffKind kind);

  double& operator()(int l, int m) { return c_[index(l, m)]; }
  double operator()(int l, int m) const { return c_[index(l, m)]; }

  std::span<double> data() { return c_; }
  std::span<const double> data() const { return c_; }

  /// Truncates or zero-pads to a new band limit.
  ShCoeffs resized(int lmax) const;

  /// Sum of squared coefficients (= ∫ f² dΩ by Parseval).
  double norm2() const;
  double max_abs() const;

  ShCoeffs& operator+=(const ShCoeffs& o);
  ShCoeffs& operator-=(const ShCoeffs& o);
  ShCoeffs& operator*=(double s);

  friend ShCoeffs operator+(ShCoeffs a, const ShCoeffs& b) { return a += b; }
  friend ShCoeffs operator-(ShCoeffs a, const ShCoeffs& b) { return a -= b; }
  friend ShCoeffs operator*(ShCoeffs a, double s) { return a *= s; }
  friend ShCoeffs operator*(double s, ShCoeffs a) { return a *= s; }

 private:
  int lmax_ = -1;
  CoeffKind kind_ = CoeffKind::Scalar;
  std::vector<double> c_;
};

/// Gauss-Legendre in cos θ (n_theta = lmax+1 nodes) times an equispaced
/// longitude grid (n_phi = 2·lmax+2). Exact quadrature for products of two
/// band-limited fields of degree ≤ lmax.
class SphGrid {
 public:
  int lmax() const { return lmax_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t size() const { return static_cast<std::size_t>(n_theta_) * n_phi_; }
  std::size_t node(int j, int k) const { return static_cast<std::size_t>(j) * n_phi_ + k; }

  double theta(int j) const { return theta_[j]; }
  double cos_theta(int j) const { return x_[j]; }
  double sin_theta(int j) const { return s_[j]; }
  double phi(int k) const { return dphi_ * k; }
  double dphi() const { return dphi_; }
  /// Gauss-Legendre weight of row j (sums to 2).
  double gl_weight(int j) const { return w_[j]; }
  /// Full quadrature weight of a node on row j.
  double weight(int j) const { return w_[j] * dphi_; }

  /// P̄_l^m(cos θ_j) and dP̄_l^m/dθ for 0 ≤ m ≤ l ≤ lmax.
  double plm(int l, int m, int j) const { return p_[tri(l, m) * n_theta_ + j]; }
  double dplm(int l, int m, int j) const { return dp_[tri(l, m) * n_theta_ + j]; }

  double cos_m_phi(int m, int k) const { return cosm_[static_cast<std::size_t>(m) * n_phi_ + k]; }
  double sin_m_phi(int m, int k) const { return sinm_[static_cast<std::size_t>(m) * n_phi_ + k]; }

  friend SphGrid build_grid(int lmax);

 private:
  static std::size_t tri(int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); }

  int lmax_ = 0;
  int n_theta_ = 0;
  int n_phi_ = 0;
  double dphi_ = 0.0;
  std::vector<double> theta_, x_, s_, w_;
  std::vector<double> p_, dp_;
  std::vector<double> cosm_, sinm_;
};

/// n-point Gauss-Legendre rule on [-1,1], nodes descending.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

/// Throws Error(InvalidBandLimit) for lmax < 2.
SphGrid build_grid(int lmax);

/// Band limit of the grid used for nonlinear products of fields of band lmax:
/// at least the 3/2 rule, and never fewer than 40 extra degrees so that
/// curvature expressions of smooth shapes are resolved to round-off.
int dealiased_band(int lmax);

/// Quadrature projection onto the basis up to the grid band limit (or the
/// smaller lmax_out when given).
ShCoeffs analyze(std::span<const double> field, const SphGrid& grid, int lmax_out = -1);

Field synthesize(const ShCoeffs& coeffs, const SphGrid& grid);

/// Field and its θ/φ partial derivatives up to second order.
struct GridDerivatives {
  Field f, f_t, f_p, f_tt, f_tp, f_pp;
};

GridDerivatives synthesize_derivatives(const ShCoeffs& coeffs, const SphGrid& grid,
                                       bool second_order = true);

/// Unit-sphere Laplace-Beltrami: coefficient (l,m) scaled by -l(l+1).
ShCoeffs laplace_beltrami_unit(const ShCoeffs& coeffs);

double integrate(std::span<const double> field, std::span<const double> weight,
                 const SphGrid& grid);
double integrate(std::span<const double> field, const SphGrid& grid);

/// Pointwise evaluation of a basis function (the single definition of the
/// convention above; the grid tables reproduce it).
double real_ylm(int l, int m, double theta, double phi);

/// Pointwise evaluation of an expansion and of its first θ/φ derivatives.
double evaluate(const ShCoeffs& coeffs, double theta, double phi);

/// Repo-wide text format: one "l m re im" line per entry, sorted by (l, m).
/// The basis is real, so `im` is always written as 0.
void write_coeffs(std::ostream& os, const ShCoeffs& coeffs);

/// Parses "l m re im" lines until EOF or a line that does not start with a
/// number. Throws Error(ParseError) naming the offending line; `first_line`
/// offsets the reported line numbers.
ShCoeffs parse_coeffs(std::span<const std::string> lines, int lmax, int first_line = 1,
                      CoeffKind kind = CoeffKind::Scalar);

}  // namespace vesicle::sph
