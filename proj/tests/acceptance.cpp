// Acceptance suite: one PASS/FAIL line per criterion.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "stokes_support.hpp"
#include "support.hpp"
#include "vesicle/flow.hpp"
#include "vesicle/verify.hpp"

using namespace vesicle;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

double max_rel(std::span<const double> f, double want) {
  double m = 0;
  for (double v : f) m = std::max(m, std::abs(v - want) / std::abs(want));
  return m;
}

Outcome sphere_exactness() {
  const DomainSpec dom{1.3, 5.0, 0.4};
  const GeometryCache geo = build_geometry(SurfaceShape(dom, sph::ShCoeffs(16)));
  const EnergyReport r = energy_ch(geo, MaterialParams{});
  const double a = dom.a;
  const double e = std::max({max_rel(geo.H, -2 / a), max_rel(geo.K, 1 / (a * a)),
                             std::abs(r.area / (4 * kPi * a * a) - 1), std::abs(r.volume / (4 * kPi * a * a * a / 3) - 1)});
  return {e <= 1e-10, fmt("max relative error %.2e (tol 1e-10)", e)};
}

Outcome energy_values() {
  MaterialParams p;
  p.kappa = 2.5;
  const DomainSpec dom;
  const double fb = energy_ch(SurfaceShape(dom, sph::ShCoeffs(16)), p).F_bend;
  const double e_bend = std::abs(fb / (8 * kPi * p.kappa) - 1);
  std::mt19937_64 rng(2);
  double e_gb = 0;
  for (int k = 0; k < 10; ++k) {
    const GeometryCache geo = build_geometry(testsupport::random_shape(dom, 16, 0.3 * dom.a, rng));
    e_gb = std::max(e_gb, std::abs(geo.integrate(geo.K) - 4 * kPi) / (4 * kPi));
  }
  return {e_bend <= 1e-10 && e_gb <= 1e-8,
          fmt("sphere F_bend error %.2e (tol 1e-10), Gauss-Bonnet error %.2e over 10 shapes (tol 1e-8)", e_bend, e_gb)};
}

Outcome divergence_form() {
  double worst = 0;
  for (std::uint64_t seed : {0, 1, 2}) {
    MaterialParams p;
    p.c0 = 0.5;
    worst = std::max(worst, check_divft(p, DomainSpec{}, 32, seed).defect);
  }
  return {worst <= 1e-5, fmt("max relative defect %.2e over 9 shapes, lmax 32 (tol 1e-5)", worst)};
}

Outcome gradient_consistency() {
  std::mt19937_64 rng(4);
  const DomainSpec dom;
  MaterialParams p;
  p.c0 = 0.4;
  const SurfaceShape s = testsupport::random_shape(dom, 12, 0.05 * dom.a, rng);
  const GeometryCache geo = build_geometry(s);
  const sph::Field g = grad_l2_F(geo, p);
  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    sph::ShCoeffs d = testsupport::random_coeffs(12, rng, 1.0, 0.6);
    d *= 1.0 / std::sqrt(d.norm2());
    const double eps = 1e-4 * dom.a;
    auto F = [&](double t) {
      const EnergyReport r = energy_ch(s.with_h(s.h() + t * d), p);
      return r.F_bend + r.F_gauss;
    };
    const double fd = (8 * (F(eps) - F(-eps)) - (F(2 * eps) - F(-2 * eps))) / (12 * eps);
    const sph::Field dr = sph::synthesize(d, geo.grd());
    sph::Field pair(geo.size());
    for (std::size_t n = 0; n < pair.size(); ++n) pair[n] = g[n] * dr[n] * geo.omega[n].dot(geo.nu[n]);
    const double an = geo.integrate(pair);
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  return {worst <= 1e-5, fmt("max relative error %.2e over 10 directions (tol 1e-5)", worst)};
}

Outcome solver_exactness() {
  std::mt19937_64 rng(17);
  double res = 0, orc = 0;
  for (int trial = 0; trial < 10; ++trial) {
    MaterialParams pm;
    pm.mu_b = trial % 2 ? 1.0 : 1.7;
    pm.mu = trial % 3 ? 0.01 : 0.3;
    const DomainSpec dom{trial % 2 ? 1.0 : 1.2, trial % 2 ? 4.0 : 3.3, 0.3};
    const StokesData d = testsupport::random_stokes_data(5, rng, trial % 2 == 0);
    const StokesSolution s = solve_s1(d, pm, dom);
    res = std::max(res, strong_residual(s, d));
    orc = std::max(orc, testsupport::oracle_defect(s, d, false));
  }
  return {res <= 1e-10 && orc <= 1e-8,
          fmt("strong residual %.2e (tol 1e-10), oracle disagreement %.2e (tol 1e-8), 10 data sets", res, orc)};
}

Outcome variational_coherence() {
  const MaterialParams p;
  const DomainSpec d;
  double du = 0, wd = 0, gp = 0;
  for (int L : {16, 32}) {
    du = std::max(du, check_du_identity(p, d, L, 0).defect);
    wd = std::max(wd, check_weak_duality(p, d, L, 0).defect);
    gp = std::max(gp, check_gradient_pairing(p, d, L, 0).defect);
  }
  return {du <= 1e-9 && wd <= 1e-9 && gp <= 1e-6,
          fmt("strain identity %.2e (1e-9), weak duality %.2e (1e-9), gradient pairing %.2e (1e-6)", du, wd, gp)};
}

// The 500-step Euler run from sphere + 1e-3 Y_2^0 shared by criteria 7-9.
struct Y2Run {
  FlowRun run;
  double gamma2 = 0;
};

const Y2Run& y2_run() {
  static const Y2Run r = [] {
    const MaterialParams p;
    const DomainSpec dom;
    const ModeTable table = spectrum(p, dom, 1, 8);
    Y2Run out;
    out.gamma2 = table.gamma_of(2);
    FlowConfig cfg;
    cfg.stepper = Stepper::Euler;
    cfg.dt_init = 1e-3 / out.gamma2;
    cfg.t_end = 500 * cfg.dt_init;
    sph::ShCoeffs h(8);
    h(2, 0) = 1e-3;
    out.run = run(cfg, p, dom, SurfaceShape(dom, h), 1, &table);
    return out;
  }();
  return r;
}

Outcome conservation() {
  const FlowRun& r = y2_run().run;
  double da = 0, dv = 0;
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    da = std::max(da, std::abs(r.rows[i].area - r.rows[i - 1].area) / r.rows[i - 1].area);
    dv = std::max(dv, std::abs(r.rows[i].volume - r.rows[i - 1].volume) / r.rows[i - 1].volume);
  }
  const bool ok = !r.blew_up && r.rows.size() == 501 && da <= 1e-8 && dv <= 1e-8;
  return {ok, fmt("%zu steps, max per-step drift: area %.2e, volume %.2e (tol 1e-8)", r.rows.size() - 1, da, dv)};
}

Outcome dissipation_identity() {
  const FlowRun& r = y2_run().run;
  double sum = 0;
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    sum += std::abs(r.rows[i].F - r.rows[i - 1].F + (r.rows[i].t - r.rows[i - 1].t) * r.rows[i].dissipation);
  const double drop = r.rows.front().F - r.rows.back().F;
  const double ratio = sum / drop;
  return {drop > 0 && ratio <= 0.01, fmt("sum |dF + dt <w,w>_V| / energy drop = %.2e (tol 1e-2)", ratio)};
}

Outcome linear_relaxation() {
  const Y2Run& y = y2_run();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(y.run.snapshots.size());
  for (const FlowState& s : y.run.snapshots) {
    const double x = s.t, v = std::log(s.shape.h()(2, 0));
    sx += x, sy += v, sxx += x * x, sxy += x * v;
  }
  const double rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double e = std::abs(rate / y.gamma2 - 1);
  return {e <= 0.02, fmt("fitted rate %.6f vs gamma_2 %.6f, relative error %.2e (tol 2e-2)", rate, y.gamma2, e)};
}

Outcome ntd_order() {
  const ModeTable t = spectrum(MaterialParams{}, DomainSpec{}, 8, 32);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(t.l.size());
  for (std::size_t i = 0; i < t.l.size(); ++i) {
    const double x = std::log(t.l[i]), y = std::log(t.gamma[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {std::abs(slope - 3) <= 0.3, fmt("slope of log gamma_l over l in [8,32] = %.4f (3 +- 0.3)", slope)};
}

Outcome equilibrium_structure() {
  std::ifstream in(fs::path(VESICLE_DATA_DIR) / "relax_l2.cfg");
  const cli::ScenarioConfig c = cli::parse_scenario(in);
  const FlowRun r = run(c.flow, c.material, c.domain, c.initial_shape());
  const double res = r.rows.back().helfrich_residual;
  const double sig = std::abs(r.rows.back().sigma - 1);
  const CheckResult eq = check_equilibrium(c.material, c.domain, c.lmax, c.seed);
  return {!r.blew_up && res <= 1e-6 && sig <= 1e-6 && eq.passed,
          fmt("relaxed residual %.2e (1e-6), |sigma-1| %.1e, solver vs fitted multipliers %.2e (1e-6)", res, sig,
              eq.defect)};
}

Outcome reynolds() {
  MaterialParams p;
  p.rho_b = 1e3;
  p.mu_b = 1e-3;
  p.rho = 1e-5;
  p.mu = 1e-9;
  const ReynoldsNumbers r = reynolds_numbers(p, 1e-6, 1e-3);
  const double eb = std::abs(r.bulk / 1e-3 - 1), es = std::abs(r.surface / 1e-5 - 1);
  return {eb <= 1e-14 && es <= 1e-14, fmt("bulk %.17g, surface %.17g", r.bulk, r.surface)};
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "vesicle_acceptance";
  fs::remove_all(base);
  std::string json[2];
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = base / std::to_string(k);
    std::ostringstream out, err;
    codes[k] = cli::run({"verify", "--config", (fs::path(VESICLE_DATA_DIR) / "default.cfg").string(), "--seed", "0",
                         "--out", dir.string()},
                        out, err);
    std::ifstream is(dir / "verify.json", std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    json[k] = ss.str();
  }
  fs::remove_all(base);
  const bool same = !json[0].empty() && json[0] == json[1];
  return {same && codes[0] == 0 && codes[1] == 0,
          fmt("%zu-byte JSON, identical: %s, exit codes %d %d", json[0].size(), same ? "yes" : "no", codes[0],
              codes[1])};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"sphere exactness", sphere_exactness},
      {"bending energy and Gauss-Bonnet", energy_values},
      {"divergence-form identity", divergence_form},
      {"gradient consistency", gradient_consistency},
      {"Stokes solver exactness", solver_exactness},
      {"weak and variational coherence", variational_coherence},
      {"conservation along flow", conservation},
      {"dissipation identity", dissipation_identity},
      {"linear relaxation rate", linear_relaxation},
      {"NtD order", ntd_order},
      {"equilibrium structure", equilibrium_structure},
      {"Reynolds diagnostics", reynolds},
      {"determinism", determinism},
  };
  int failed = 0, i = 0;
  for (const auto& [name, f] : criteria) {
    ++i;
    Outcome o{false, ""};
    try {
      o = f();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", i, name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
