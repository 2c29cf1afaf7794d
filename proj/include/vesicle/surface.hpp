#pragma once

// Geometry of star-shaped membranes r = a + h(ω) and the surface stress
// calculus built on it.
//
// Sign convention: ν is the outward normal and ν_{,α} = -k_α^β X_β, so the
// second fundamental form is k_{αβ} = ν·X_{,αβ}. A round sphere of radius a
// has k = -g/a, H = -2/a, K = 1/a².
//
// Tangential fields are carried as Cartesian samples on the shape's working
// grid; covariant operations are done by projecting Cartesian derivatives.

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "vesicle/sphharm.hpp"

namespace vesicle {

using Vec3 = Eigen::Vector3d;
using VecField = std::vector<Vec3>;

struct MaterialParams {
  double kappa = 1.0;
  double kappa_g = 0.0;
  double c0 = 0.0;
  double mu_b = 1.0;
  double mu = 0.01;
  double rho_b = 0.0;
  double rho = 0.0;

  /// Throws Error(InvalidParameter).
  void validate() const;
};

struct DomainSpec {
  double a = 1.0;
  double r_outer = 4.0;
  double tubular_radius = 0.5;

  void validate() const;
  /// Half of the largest admissible tubular radius.
  static double default_tubular_radius(double a, double r_outer);
};

/// Height coefficients over the reference sphere plus the working grid on
/// which nonlinear quantities are formed (band ⌈3·lmax/2⌉).
class SurfaceShape {
 public:
  SurfaceShape() = default;
  SurfaceShape(const DomainSpec& domain, sph::ShCoeffs h);
  SurfaceShape(const DomainSpec& domain, sph::ShCoeffs h, std::shared_ptr<const sph::SphGrid> grid);

  const DomainSpec& domain() const { return domain_; }
  const sph::ShCoeffs& h() const { return h_; }
  int lmax() const { return h_.lmax(); }
  const sph::SphGrid& grid() const { return *grid_; }
  std::shared_ptr<const sph::SphGrid> grid_ptr() const { return grid_; }

  /// Radius ρ = a + h as coefficients.
  sph::ShCoeffs radius_coeffs() const;
  double max_abs_h() const;

  SurfaceShape with_h(sph::ShCoeffs h) const { return SurfaceShape(domain_, std::move(h), grid_); }

 private:
  DomainSpec domain_;
  sph::ShCoeffs h_;
  std::shared_ptr<const sph::SphGrid> grid_;
};

/// Node-wise geometry. Symmetric 2-tensors are stored as (θθ, θφ, φφ).
struct Sym2 {
  double tt = 0, tp = 0, pp = 0;
};

struct GeometryCache {
  std::shared_ptr<const sph::SphGrid> grid;
  sph::Field rho, rho_t, rho_p;
  VecField omega;  // unit radial direction
  VecField position, x_t, x_p, x_tt, x_tp, x_pp;
  VecField nu;
  std::vector<Sym2> g, g_inv, k;
  /// Mixed components k_α^β, indexed [α][β].
  std::vector<Eigen::Matrix2d> shape_op;
  /// Γ^γ_{αβ} for γ = θ and γ = φ.
  std::vector<Sym2> chris_t, chris_p;
  sph::Field sqrt_g;        // |X_θ × X_φ|
  sph::Field area_density;  // dA / dΩ
  sph::Field H, K;

  const sph::SphGrid& grd() const { return *grid; }
  std::size_t size() const { return H.size(); }
  double integrate(std::span<const double> f) const { return sph::integrate(f, area_density, *grid); }
};

/// Throws Error(ShapeOutOfTubularNeighborhood) when max |h| ≥ tubular_radius.
void check_admissible(const SurfaceShape& shape);
GeometryCache build_geometry(const SurfaceShape& shape);

struct EnergyReport {
  double F_bend = 0, F_gauss = 0, area = 0, volume = 0, sigma = 0;
};

EnergyReport energy_ch(const GeometryCache& geo, const MaterialParams& params);
EnergyReport energy_ch(const SurfaceShape& shape, const MaterialParams& params);

/// Surface gradient of a scalar given its θ/φ partials.
VecField surface_gradient(const GeometryCache& geo, std::span<const double> f_t, std::span<const double> f_p);
/// Surface gradient of a scalar sample field (spectral differentiation).
VecField surface_gradient(const GeometryCache& geo, std::span<const double> f);
/// Δ_g of a scalar sample field.
sph::Field laplace_beltrami(const GeometryCache& geo, std::span<const double> f);

sph::Field grad_l2_F(const GeometryCache& geo, const MaterialParams& params);

struct SurfaceVelocity {
  VecField v;    // tangential part, Cartesian
  sph::Field w;  // normal part
};

/// v = grad_g Φ + ν × grad_g Ψ from potentials.
VecField tangent_from_potentials(const GeometryCache& geo, const sph::ShCoeffs& phi, const sph::ShCoeffs& psi);
/// Splits an ambient field U into U - (U·ν)ν and U·ν.
SurfaceVelocity decompose(const GeometryCache& geo, const VecField& u);

sph::Field surface_div(const GeometryCache& geo, const SurfaceVelocity& vel);
/// div_g of a tangent field.
sph::Field tangential_div(const GeometryCache& geo, const VecField& v);

/// Covariant components (D u)_{αβ}.
std::vector<Sym2> rate_of_strain(const GeometryCache& geo, const SurfaceVelocity& vel);
/// g^{αγ} g^{βδ} A_{αβ} B_{γδ}.
double contract(const Sym2& a, const Sym2& b, const Sym2& g_inv);
/// g^{αβ} A_{αβ}.
double trace(const Sym2& a, const Sym2& g_inv);

/// Hybrid tensor T^i_α = tT^{αβ}-part plus normal part, in contravariant
/// components: tangential tT^{αβ}, normal nT^α.
struct HybridStress {
  std::vector<Sym2> tan;
  std::vector<Eigen::Vector2d> nor;
};

HybridStress helfrich_stress(const GeometryCache& geo, const MaterialParams& params);
/// -q g^{αβ} + 2μ (D u)^{αβ}, no normal part.
HybridStress fluid_stress(const GeometryCache& geo, const SurfaceVelocity& vel, std::span<const double> q,
                          double mu);
HybridStress operator+(const HybridStress& a, const HybridStress& b);

/// Surface divergence of a hybrid tensor by the four-term decomposition.
VecField hybrid_div(const GeometryCache& geo, const HybridStress& T);

struct StressDivergence {
  VecField tangential;
  sph::Field normal;
};

/// Total surface stress divergence for an incompressible surface flow.
StressDivergence div_total_stress(const GeometryCache& geo, const SurfaceVelocity& vel,
                                  std::span<const double> q, const MaterialParams& params);

struct ReynoldsNumbers {
  double bulk = 0, surface = 0;
};

ReynoldsNumbers reynolds_numbers(const MaterialParams& params, double L_typ, double T_typ);

/// Componentwise spectral derivatives of a Cartesian field.
struct VecDerivatives {
  VecField f_t, f_p;
};
VecDerivatives differentiate(const GeometryCache& geo, const VecField& f);
/// Surface divergence g^{αβ} ∂_α A · X_β of an ambient 3x3 field.
VecField tensor_div(const GeometryCache& geo, const std::vector<Eigen::Matrix3d>& A);

/// Shape files: "a r_outer lmax" then "l m re im" lines.
void write_shape(std::ostream& os, const SurfaceShape& shape);
SurfaceShape read_shape(std::istream& is, double tubular_radius = -1.0);

}  // namespace vesicle
