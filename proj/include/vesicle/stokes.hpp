#pragma once

// Exact per-mode Stokes solver for a round membrane of radius a inside a
// concentric ball of radius r_outer.
//
// Bulk fields are expanded as
//   u = U(r) Y r̂ + V(r) ∇₁Y + T(r) r̂ × ∇₁Y,   π = P(r) Y
// with ∇₁ the unit-sphere gradient. Radial profiles are finite sums of
// monomials in s = r/a. Jumps across the membrane are outer minus inner.
// Internally lengths are in units of a and stresses in units of μ_b·velocity/a;
// all accessors below return physical values.

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "vesicle/sphharm.hpp"
#include "vesicle/surface.hpp"

namespace vesicle {

enum class Region { Inner = 0, Outer = 1 };
enum class System { S1, S2 };

std::string to_string(Region r);
std::string to_string(System s);

/// One radial monomial c·s^n.
struct Mono {
  int n = 0;
  double c = 0.0;
};

/// Sum of monomials, kept sorted by exponent with no repeated exponents.
class Radial {
 public:
  Radial() = default;
  Radial(std::initializer_list<Mono> terms);

  const std::vector<Mono>& terms() const { return t_; }
  bool empty() const { return t_.empty(); }

  void add(int n, double c);
  Radial& operator+=(const Radial& o);
  Radial& operator*=(double s);
  friend Radial operator+(Radial a, const Radial& b) { return a += b; }
  friend Radial operator*(double s, Radial a) { return a *= s; }

  double operator()(double s) const;
  Radial derivative() const;
  /// Multiplies by s^k.
  Radial shifted(int k) const;
  Radial product(const Radial& o) const;
  /// ∫ over [0,1] (inner) or [1,R] (outer).
  double integral(Region region, double R) const;

 private:
  std::vector<Mono> t_;
};

/// Radial profiles of one (l,m) mode in one region; P is the full bulk pressure π.
struct RadialField {
  Radial U, V, T, P;
};

/// A monomial bulk datum c·r^p Y_l^m in one region (physical units).
struct RadialTerm {
  Region region = Region::Inner;
  int l = 0, m = 0, p = 0;
  double value = 0.0;
};

struct StokesData {
  StokesData() = default;
  explicit StokesData(int lmax);

  int lmax = 0;
  /// Bulk force components along r̂ Y, ∇₁Y and r̂ × ∇₁Y.
  std::vector<RadialTerm> f1_r, f1_s, f1_t;
  std::vector<RadialTerm> f2;
  /// Tangential surface force grad_g S + ν × grad_g T as potentials S, T.
  sph::ShCoeffs f3_s, f3_t;
  sph::ShCoeffs f3_nu, f4, f5;
};

struct CompatReport {
  double comp1 = 0, comp2 = 0;
  /// ∫_{Ω¹} f2 dx − ∫_Γ f5 dA and ∫_Γ (f4 + f5 H) dA.
  double comp3_flux = 0, comp3_div = 0;
  bool passed = true;
};

/// Mode solution in internal units.
struct ModeSolution {
  int l = 0, m = 0;
  std::array<RadialField, 2> field;
  double q = 0.0;
  double sigma_min = 0.0;
};

struct StokesSolution {
  System system = System::S1;
  MaterialParams params;
  DomainSpec domain;
  int lmax = 0;
  std::vector<ModeSolution> modes;  // index l*l + l + m

  /// Surface outputs: v = grad_g Φ + ν × grad_g Ψ, normal velocity w, tension q.
  sph::ShCoeffs w, phi, psi, q;
  /// Constant parts of the bulk pressure in each region.
  std::array<double, 2> pi_const{0.0, 0.0};

  const ModeSolution& mode(int l, int m) const { return modes[sph::ShCoeffs::index(l, m)]; }
  /// Physical radial profiles at radius r.
  double U(Region g, int l, int m, double r) const;
  double V(Region g, int l, int m, double r) const;
  double T(Region g, int l, int m, double r) const;
  double pressure(Region g, int l, int m, double r) const;
  /// ∫ π dx over one region.
  double pressure_integral(Region g) const;
};

CompatReport check_compat(const StokesData& data, System system, const DomainSpec& domain);

StokesSolution solve_s1(const StokesData& data, const MaterialParams& params, const DomainSpec& domain);
StokesSolution solve_s2(const StokesData& data, const MaterialParams& params, const DomainSpec& domain);

/// Velocity-only field container for test fields in the weak form.
StokesSolution velocity_field(std::vector<ModeSolution> modes, int lmax, const MaterialParams& params,
                              const DomainSpec& domain);

/// B(u1,u2) = 2μ_b∫⟨Du1,Du2⟩dx + 2μ∫⟨𝒟u1,𝒟u2⟩_g dA.
double dissipation_pair(const StokesSolution& u1, const StokesSolution& u2);
double dissipation(const StokesSolution& sol);
/// ∫_{Ω∖Γ} |∇u|² dx and ∫_{Ω∖Γ} |Du|² dx.
double gradient_norm2(const StokesSolution& u);
double strain_norm2(const StokesSolution& u);
/// F(φ) = −∫_Ω f1·φ dx − ∫_Γ f3·φ dA.
double load_functional(const StokesData& data, const StokesSolution& phi);

/// Largest relative residual over the bulk equations and all interface rows.
double strong_residual(const StokesSolution& sol, const StokesData& data);

/// Adds constants to π in each region and to q (physical units).
void shift_pressures(StokesSolution& sol, double s_in, double s_out, double s_q);
/// Projects (π, q) onto the normalized representative of sol.system.
void apply_gauge(StokesSolution& sol);

double metric_V(const sph::ShCoeffs& w1, const sph::ShCoeffs& w2, const MaterialParams& params,
                const DomainSpec& domain);
sph::ShCoeffs ntd_apply(const sph::ShCoeffs& psi, const MaterialParams& params, const DomainSpec& domain);
/// M_l with w_lm = −M_l ψ_lm.
double mobility(int l, const MaterialParams& params, const DomainSpec& domain);

struct InfSupReport {
  double beta = 0.0;
  int null_dim = 0;
};

/// Discrete inf-sup constant of the constraint operator (div, Div) for one
/// degree, on polynomial spaces of the given radial degree.
InfSupReport infsup_mode(int l, const MaterialParams& params, const DomainSpec& domain, int degree = 32,
                         bool gauge = true);

/// Data files: "lmax N", optional "system s1|s2", then blocks headed by
/// f1_r, f1_s, f1_t, f2 ("region l m p re im") and f3_s, f3_t, f3_nu, f4, f5
/// ("l m re im").
struct DataFile {
  StokesData data;
  System system = System::S1;
};
DataFile read_data(std::istream& is);
void write_data(std::ostream& os, const StokesData& data, System system);
void write_solution(std::ostream& os, const StokesSolution& sol);

}  // namespace vesicle
