#include "doctest.h"
#include "vesicle/verify.hpp"

using namespace vesicle;

namespace {

void check_suite(const std::vector<CheckResult>& rs, std::size_t expected) {
  CHECK(rs.size() == expected);
  for (const CheckResult& r : rs) {
    INFO(r.name << " lmax=" << r.context.at("lmax") << " defect=" << r.defect);
    CHECK(r.passed);
    CHECK(r.passed == (r.defect <= r.tolerance));
    CHECK_FALSE(r.identity.empty());
  }
}

}  // namespace

TEST_CASE("verification suite passes at default parameters") {
  const auto rs = check_all(MaterialParams{}, DomainSpec{}, 0);
  check_suite(rs, 20);
  for (std::size_t i = 1; i < 10; ++i) CHECK(rs[i - 1].name < rs[i].name);
}

TEST_CASE("verification suite is robust to a tenfold surface viscosity") {
  MaterialParams pm;
  pm.mu *= 10;
  check_suite(check_all(pm, DomainSpec{}, 0, {16}), 10);
}

TEST_CASE("verification suite passes over several seeds") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) check_suite(check_all(MaterialParams{}, DomainSpec{}, seed, {16}), 10);
}

TEST_CASE("verification output is deterministic") {
  const MaterialParams pm;
  const DomainSpec dom;
  CHECK(to_json(check_all(pm, dom, 3, {16})) == to_json(check_all(pm, dom, 3, {16})));
  CHECK(to_json(check_all(pm, dom, 3, {16})) != to_json(check_all(pm, dom, 4, {16})));
}
