#pragma once

// Normal advection of star-shaped surfaces and finite-difference checks of
// the material-derivative formulas.

#include <map>
#include <string>

#include "vesicle/surface.hpp"

namespace vesicle {

/// One explicit Euler step ρ += dt·w/(ω̂·ν). The result is projected to
/// `lmax_out` (default: the input band). Throws Error(StepTooLarge) when the
/// result leaves the tubular neighbourhood.
SurfaceShape advect(const SurfaceShape& shape, const GeometryCache& geo, std::span<const double> w, double dt,
                    int lmax_out = -1);
SurfaceShape advect(const SurfaceShape& shape, std::span<const double> w, double dt, int lmax_out = -1);

/// Velocity of a fixed chart point when the graph moves with normal speed w:
/// (w/(ω̂·ν)) ω̂, split into tangential and normal parts.
SurfaceVelocity chart_velocity(const GeometryCache& geo, std::span<const double> w);

struct TransportReport {
  double dt = 0;
  double darea_fd = 0, darea_exact = 0, err_area = 0;
  double dvolume_fd = 0, dvolume_exact = 0, err_volume = 0;
  double err_density = 0;
  double err_H = 0;
  /// max |dH/dt| of the analytic field (scale for err_H)
  double dH_scale = 0;

  std::map<std::string, double> to_map() const;
};

/// Centered differences (advect by ±dt) against the analytic rates
///   d/dt area   = -∫ w H dA
///   d/dt volume =  ∫ w dA
///   d/dt dA     = (div_g v - w H) dA
///   d/dt H      = Δ_g w + w (H² - 2K) + dH(v)
/// where v is the chart velocity. dt <= 0 selects 1e-5·a/‖w‖∞.
TransportReport check_transport(const SurfaceShape& shape, std::span<const double> w, double dt = 0.0);

}  // namespace vesicle
