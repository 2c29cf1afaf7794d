#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "vesicle/error.hpp"
#include "vesicle/stokes.hpp"

namespace vesicle {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + msg);
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

const char* const kRadialBlocks[] = {"f1_r", "f1_s", "f1_t", "f2"};
const char* const kSurfaceBlocks[] = {"f3_s", "f3_t", "f3_nu", "f4", "f5"};

std::vector<RadialTerm>& radial_block(StokesData& d, const std::string& name) {
  if (name == "f1_r") return d.f1_r;
  if (name == "f1_s") return d.f1_s;
  if (name == "f1_t") return d.f1_t;
  return d.f2;
}

sph::ShCoeffs& surface_block(StokesData& d, const std::string& name) {
  if (name == "f3_s") return d.f3_s;
  if (name == "f3_t") return d.f3_t;
  if (name == "f3_nu") return d.f3_nu;
  if (name == "f4") return d.f4;
  return d.f5;
}

bool is_one_of(const std::string& s, const auto& names) {
  for (const char* n : names)
    if (s == n) return true;
  return false;
}

}  // namespace

DataFile read_data(std::istream& is) {
  DataFile out;
  bool have_lmax = false;
  std::string block;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = raw.substr(0, raw.find('#'));
    if (blank(line)) continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    std::string extra;
    if (head == "lmax") {
      int L = -1;
      if (have_lmax || !(ls >> L) || L < 1 || (ls >> extra)) fail(line_no, "expected a single 'lmax N' with N >= 1");
      out.data = StokesData(L);
      have_lmax = true;
      continue;
    }
    if (head == "system") {
      std::string s;
      if (!(ls >> s) || (s != "s1" && s != "s2") || (ls >> extra)) fail(line_no, "expected 'system s1' or 'system s2'");
      out.system = s == "s1" ? System::S1 : System::S2;
      continue;
    }
    if (is_one_of(head, kRadialBlocks) || is_one_of(head, kSurfaceBlocks)) {
      if (!have_lmax) fail(line_no, "'lmax' must precede data blocks");
      if (ls >> extra) fail(line_no, "unexpected text after block name");
      block = head;
      continue;
    }
    if (block.empty()) fail(line_no, "unknown keyword '" + head + "'");
    if (is_one_of(block, kRadialBlocks)) {
      std::istringstream rs(line);
      std::string region;
      RadialTerm t;
      double im = 0.0;
      if (!(rs >> region >> t.l >> t.m >> t.p >> t.value >> im) || (rs >> extra))
        fail(line_no, "expected 'region l m p re im', got '" + raw + "'");
      if (region == "inner")
        t.region = Region::Inner;
      else if (region == "outer")
        t.region = Region::Outer;
      else
        fail(line_no, "region must be 'inner' or 'outer'");
      if (t.l < 0 || std::abs(t.m) > t.l || t.l > out.data.lmax) fail(line_no, "index outside band limit");
      if (im != 0.0) fail(line_no, "real basis requires im = 0");
      if (t.region == Region::Inner && t.p < 0) fail(line_no, "inner-region exponents must be >= 0");
      if ((block == "f1_s" || block == "f1_t") && t.l == 0) fail(line_no, "tangential bulk force has no l = 0 entry");
      radial_block(out.data, block).push_back(t);
    } else {
      sph::ShCoeffs& c = surface_block(out.data, block);
      const std::vector<std::string> one{raw};
      const sph::ShCoeffs e = sph::parse_coeffs(one, out.data.lmax, line_no, c.kind());
      c += e;
    }
  }
  if (!have_lmax) fail(line_no, "missing 'lmax'");
  return out;
}

void write_data(std::ostream& os, const StokesData& data, System system) {
  os << "lmax " << data.lmax << "\nsystem " << to_string(system) << "\n";
  for (const char* name : kRadialBlocks) {
    const auto& terms = radial_block(const_cast<StokesData&>(data), name);
    if (terms.empty()) continue;
    os << name << "\n";
    for (const RadialTerm& t : terms)
      os << to_string(t.region) << " " << t.l << " " << t.m << " " << t.p << " " << fmt(t.value) << " 0\n";
  }
  for (const char* name : kSurfaceBlocks) {
    const sph::ShCoeffs& c = surface_block(const_cast<StokesData&>(data), name);
    if (c.max_abs() == 0.0) continue;
    os << name << "\n";
    sph::write_coeffs(os, c);
  }
}

void write_solution(std::ostream& os, const StokesSolution& sol) {
  const double a = sol.domain.a, mu_b = sol.params.mu_b;
  os << "system " << to_string(sol.system) << "\n";
  os << "a " << fmt(a) << " r_outer " << fmt(sol.domain.r_outer) << " lmax " << sol.lmax << "\n";
  os << "pi_const inner " << fmt(sol.pi_const[0]) << "\n";
  os << "pi_const outer " << fmt(sol.pi_const[1]) << "\n";
  os << "w\n";
  sph::write_coeffs(os, sol.w);
  os << "phi\n";
  sph::write_coeffs(os, sol.phi);
  os << "psi\n";
  sph::write_coeffs(os, sol.psi);
  os << "q\n";
  sph::write_coeffs(os, sol.q);
  // Bulk profiles as physical coefficients of r^n.
  os << "bulk\n";
  for (const ModeSolution& md : sol.modes)
    for (int g = 0; g < 2; ++g) {
      const RadialField& f = md.field[g];
      const std::pair<const char*, const Radial*> parts[] = {{"U", &f.U}, {"V", &f.V}, {"T", &f.T}, {"P", &f.P}};
      for (const auto& [name, r] : parts) {
        const double unit = name[0] == 'P' ? mu_b / a : 1.0;
        for (const Mono& t : r->terms())
          os << to_string(static_cast<Region>(g)) << " " << md.l << " " << md.m << " " << name << " " << t.n << " "
             << fmt(unit * t.c * std::pow(a, -t.n)) << "\n";
      }
    }
}

}  // namespace vesicle
