#pragma once

// Constrained relaxational dynamics of a near-spherical membrane with the
// frozen-sphere mobility: the normal velocity is
//   w = −M J (grad F + λ1 + λ2 H)
// where M acts mode-wise with the sphere mobilities M_l, J = dA/(a² dΩ)
// converts the L²(dA) gradient to chart coefficients, and (λ1, λ2) keep the
// enclosed volume and the area fixed to first order.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vesicle/stokes.hpp"
#include "vesicle/surface.hpp"

namespace vesicle {

struct ModeTable {
  MaterialParams params;
  DomainSpec domain;
  std::vector<int> l;
  std::vector<double> M, gamma, second_variation;

  double M_of(int deg) const;
  double gamma_of(int deg) const;
};

/// Second variation of F at the round sphere along h = ε Y_l^0, per unit
/// ∫h² dA, with the enclosed volume held fixed.
double second_variation(int l, const MaterialParams& params, const DomainSpec& domain, int lmax = -1);

/// M_l, E''_l and γ_l = M_l E''_l for l_min ≤ l ≤ l_max.
ModeTable spectrum(const MaterialParams& params, const DomainSpec& domain, int l_min, int l_max);

/// Mode-wise mobility used by the flow. The l = 0 entry is M_2 so that the
/// volume multiplier acts; with pinned translations the l = 1 entry is 0.
struct Mobility {
  std::vector<double> M;  // indexed by l
  double a = 1.0;

  static Mobility frozen_sphere(const ModeTable& table, int lmax, bool pin_translations);
  sph::ShCoeffs apply(const sph::ShCoeffs& f) const;
};

struct Projection {
  sph::ShCoeffs w;
  double lambda1 = 0, lambda2 = 0;
  bool degenerate = false;
};

/// Relative CMC defect ‖H − H̄‖/(|H̄| √A) below which the area constraint is
/// treated as dependent on the volume constraint.
inline constexpr double kCmcTolerance = 1e-2;

/// Returns w − M J (λ1 + λ2 H) with ∫w' dA = ∫w' H dA = 0.
Projection project_constraints(const GeometryCache& geo, const sph::ShCoeffs& w, const Mobility& mob,
                               double cmc_tol = kCmcTolerance);

struct HelfrichFit {
  double lambda1 = 0, lambda2 = 0, residual = 0;
  bool reduced = false;
};

/// Least-squares fit of grad F + λ1 + λ2 H = 0 in L²(dA), with grad F and H
/// restricted to degrees ≤ band (band < 0: the full working grid).
HelfrichFit helfrich_multipliers(const GeometryCache& geo, const MaterialParams& params, const DomainSpec& domain,
                                 int band = -1);
HelfrichFit helfrich_multipliers(const SurfaceShape& shape, const MaterialParams& params);

enum class Stepper { Euler, RK4, ImexExponential };
std::string to_string(Stepper s);
Stepper parse_stepper(const std::string& s);

struct FlowConfig {
  double dt_init = 1e-3;
  double t_end = 1.0;
  Stepper stepper = Stepper::Euler;
  double tol_constraint = 1e-8;
  bool pin_translations = true;

  void validate() const;
};

struct FlowState {
  double t = 0;
  SurfaceShape shape;
  EnergyReport report;
  double lambda1 = 0, lambda2 = 0;
  double last_dissipation = 0;
  /// Step size actually taken to reach this state.
  double dt = 0;
  bool degenerate = false;

  double energy() const { return report.F_bend + report.F_gauss; }
};

FlowState initial_state(const SurfaceShape& shape, const MaterialParams& params);

/// One accepted step of size ≤ config.dt_init (halved while F increases or
/// the constraint drift exceeds tol_constraint). Throws Error(BlowUpDetected)
/// after 20 halvings.
FlowState step(const FlowState& state, const FlowConfig& config, const MaterialParams& params,
               const ModeTable& table, double dt);
FlowState step(const FlowState& state, const FlowConfig& config, const MaterialParams& params,
               const ModeTable& table);

struct MonitorRow {
  double t, F, area, volume, sigma, dissipation, lambda1, lambda2, max_h, helfrich_residual;
};

MonitorRow monitor(const FlowState& s, const MaterialParams& params);
void write_monitor_header(std::ostream& os);
void write_monitor_row(std::ostream& os, const MonitorRow& r);

struct FlowRun {
  std::vector<MonitorRow> rows;
  std::vector<FlowState> snapshots;
  FlowState final;
  bool blew_up = false;
  bool degenerate_seen = false;
  std::string message;
};

/// Integrates to config.t_end. Snapshots are kept every `snapshot_every`
/// accepted steps (0: none) plus the final state.
FlowRun run(const FlowConfig& config, const MaterialParams& params, const DomainSpec& domain,
            const SurfaceShape& init, int snapshot_every = 0, const ModeTable* table = nullptr);

}  // namespace vesicle
