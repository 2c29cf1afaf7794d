#pragma once

// Scenario files and command dispatch for the `vesicle` executable.
//
// Scenario grammar (INI): optional top-level `seed = N`, then sections
//   [geometry] a r_outer lmax tubular_radius
//   [material] kappa kappa_g c0 mu_b mu rho_b rho
//   [flow]     dt_init t_end stepper tol_constraint pin_translations mobility
//   [init]     h = l m re im        (repeatable)
//   [spectrum] l_min l_max
//   [verify]   lmax = L1 L2 ...
//   [output]   dir monitor snapshot_every
// Comments start with '#' or ';' on their own line. Unknown keys are errors.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vesicle/flow.hpp"

namespace vesicle::cli {

enum ExitCode { kOk = 0, kInputError = 2, kBlowUp = 3, kVerifyFailed = 4 };

struct ScenarioConfig {
  DomainSpec domain;
  int lmax = 8;
  MaterialParams material;
  FlowConfig flow;
  sph::ShCoeffs init_h;
  int spectrum_l_min = 1, spectrum_l_max = -1;
  std::vector<int> verify_lmax{16, 32};
  std::string out_dir = ".";
  std::string monitor = "monitor.csv";
  int snapshot_every = 0;
  std::uint64_t seed = 0;

  SurfaceShape initial_shape() const { return SurfaceShape(domain, init_h); }
};

/// Throws Error(ParseError) or Error(InvalidParameter).
ScenarioConfig parse_scenario(std::istream& is);
ScenarioConfig load_scenario(const std::string& path);

/// Runs one command line (args exclude the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vesicle::cli
