#pragma once

// Named numerical checks of the identities the model rests on. Each check is
// deterministic for a given seed and reports a defect against a fixed
// tolerance; failures are results, not exceptions.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vesicle/surface.hpp"

namespace vesicle {

struct CheckResult {
  std::string name;
  double defect = 0, tolerance = 0;
  bool passed = false;
  /// The relation being tested, in words.
  std::string identity;
  std::map<std::string, double> context;
};

CheckResult check_du_identity(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_weak_duality(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_gradient_pairing(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_divft(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_transport(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_gauss_bonnet(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_conservation(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_equilibrium(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_ntd_symmetry_scaling(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);
CheckResult check_infsup(const MaterialParams& p, const DomainSpec& d, int lmax, std::uint64_t seed);

/// Every check at each band limit, in name order within each band.
std::vector<CheckResult> check_all(const MaterialParams& params, const DomainSpec& domain, std::uint64_t seed,
                                   const std::vector<int>& lmaxes = {16, 32});

std::string to_json(const std::vector<CheckResult>& results);

}  // namespace vesicle
