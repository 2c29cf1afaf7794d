#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles/collocation.hpp"
#include "support.hpp"
#include "vesicle/stokes.hpp"

namespace testsupport {

using namespace vesicle;

inline bool resonant_f1(int l, int p) {
  const int k = p + 2;
  if (l == 0) return p == -1;
  return k == l - 1 || k == l + 1 || k == -l || k == -l - 2;
}

inline bool resonant_f1t(int l, int p) { return p + 2 == l || p + 2 == -l - 1; }

// Random s1 data with f2 = 0 and compatible l = 0 content.
inline StokesData random_stokes_data(int lmax, std::mt19937_64& rng, bool with_bulk) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 2);
  StokesData d(lmax);
  d.f3_nu = testsupport::random_coeffs(lmax, rng, 1.0, 0.7);
  d.f3_s = testsupport::random_coeffs(lmax, rng, 0.5, 0.7, 1);
  d.f3_s.set_kind(sph::CoeffKind::Spheroidal);
  d.f3_t = testsupport::random_coeffs(lmax, rng, 0.5, 0.7, 1);
  d.f3_t.set_kind(sph::CoeffKind::Toroidal);
  d.f4 = testsupport::random_coeffs(lmax, rng, 0.3, 0.7, 1);
  if (!with_bulk) return d;
  const int inner_p[] = {0, 1, 2};
  const int outer_p[] = {-5, -4, 1};
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m)
      for (int g = 0; g < 2; ++g) {
        const Region reg = static_cast<Region>(g);
        const int p = g == 0 ? inner_p[pick(rng)] : outer_p[pick(rng)];
        if (!resonant_f1(l, p)) d.f1_r.push_back({reg, l, m, p, 0.3 * n(rng)});
        if (l > 0 && !resonant_f1(l, p + 1)) d.f1_s.push_back({reg, l, m, p + 1, 0.3 * n(rng)});
        if (l > 0 && !resonant_f1t(l, p)) d.f1_t.push_back({reg, l, m, p, 0.3 * n(rng)});
      }
  return d;
}

inline oracle::ModeProblem oracle_problem(const StokesData& d, int l, int m, const MaterialParams& pm,
                                   const DomainSpec& dom, bool prescribed) {
  const double a = dom.a, mu_b = pm.mu_b;
  oracle::ModeProblem pb;
  pb.l = l;
  pb.R = dom.r_outer / a;
  pb.mu = pm.mu / (mu_b * a);
  pb.prescribed_normal = prescribed;
  pb.S = d.f3_s(l, m) / mu_b;
  pb.Tt = d.f3_t(l, m) / mu_b;
  pb.f3 = d.f3_nu(l, m) * a / mu_b;
  pb.f4 = d.f4(l, m) * a;
  pb.f5 = d.f5(l, m);
  auto put = [&](const std::vector<RadialTerm>& terms, std::array<oracle::Monos, 2>& dst) {
    for (const RadialTerm& t : terms)
      if (t.l == l && t.m == m)
        dst[static_cast<int>(t.region)].push_back({t.p, t.value * std::pow(a, t.p + 2) / mu_b});
  };
  put(d.f1_r, pb.f1r);
  put(d.f1_s, pb.f1s);
  put(d.f1_t, pb.f1t);
  return pb;
}

// Largest oracle disagreement over all l ≥ 1 modes, relative to the largest
// output magnitude of the same kind.
inline double oracle_defect(const StokesSolution& s, const StokesData& d, bool prescribed) {
  const double a = s.domain.a;
  double worst = 0.0;
  double scales[4] = {s.w.max_abs(), s.phi.max_abs() / a, s.psi.max_abs() / a, s.q.max_abs()};
  const double all = std::max({scales[0], scales[1], scales[2], scales[3], 1e-300});
  for (double& x : scales) x = std::max(x, 1e-3 * all);
  for (int l = 1; l <= s.lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const oracle::ModeAnswer o = oracle::collocate(oracle_problem(d, l, m, s.params, s.domain, prescribed));
      const double got[4] = {s.w(l, m), s.phi(l, m) / a, s.psi(l, m) / a, s.q(l, m)};
      const double want[4] = {o.w, o.V, o.T, o.q * s.params.mu_b};
      for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(got[k] - want[k]) / scales[k]);
    }
  return worst;
}

}  // namespace testsupport
