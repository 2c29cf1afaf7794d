#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "vesicle/error.hpp"
#include "vesicle/verify.hpp"

namespace vesicle::cli {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void parse_fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::ParseError, key + ": " + msg);
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) parse_fail(key, "expected a number, got '" + s + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) parse_fail(key, "expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  parse_fail(key, "expected true or false, got '" + s + "'");
}

const std::string& single(const std::string& key, const std::vector<std::string>& v) {
  if (v.size() != 1) parse_fail(key, "expected one value, got " + std::to_string(v.size()));
  return v[0];
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorKind::ParseError, "cannot write " + p.string());
  os << text;
}

void banner(std::ostream& os, const std::string& cmd, const ScenarioConfig& c) {
  const MaterialParams& p = c.material;
  const double a = c.domain.a;
  const double T = p.mu_b * a * a * a / p.kappa;
  const ReynoldsNumbers re = reynolds_numbers(p, a, T);
  os << "# vesicle " << cmd << "\n"
     << "# geometry: a = " << fmt(a) << " m, r_outer = " << fmt(c.domain.r_outer)
     << " m, lmax = " << c.lmax << ", tubular_radius = " << fmt(c.domain.tubular_radius) << " m\n"
     << "# material: kappa = " << fmt(p.kappa) << " J, kappa_g = " << fmt(p.kappa_g) << " J, c0 = " << fmt(p.c0)
     << " 1/m, mu_b = " << fmt(p.mu_b) << " Pa s, mu = " << fmt(p.mu) << " Pa s m\n"
     << "# Saffman-Delbrueck length mu/mu_b = " << fmt(p.mu / p.mu_b) << " m (" << fmt(p.mu / (p.mu_b * a))
     << " a)\n"
     << "# Reynolds numbers at L = a, T = mu_b a^3/kappa = " << fmt(T) << " s: bulk " << fmt(re.bulk)
     << ", surface " << fmt(re.surface) << "\n";
}

int solve_cmd(const ScenarioConfig& c, const std::string& data_path, const fs::path& out, std::ostream& os,
              std::ostream& err) {
  if (data_path.empty()) throw Error(ErrorKind::ParseError, "solve needs --data");
  std::ifstream in(data_path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + data_path);
  const DataFile df = read_data(in);
  const CompatReport rep = check_compat(df.data, df.system, c.domain);
  std::ostringstream cs;
  cs << "comp1 " << fmt(rep.comp1) << "\ncomp2 " << fmt(rep.comp2) << "\ncomp3_flux " << fmt(rep.comp3_flux)
     << "\ncomp3_div " << fmt(rep.comp3_div) << "\npassed " << (rep.passed ? "true" : "false") << "\n";
  write_file(out / "compat.txt", cs.str());
  os << cs.str();
  if (!rep.passed) {
    err << "error: data violate the compatibility conditions\n";
    return kInputError;
  }
  const StokesSolution sol =
      df.system == System::S1 ? solve_s1(df.data, c.material, c.domain) : solve_s2(df.data, c.material, c.domain);
  std::ostringstream ss;
  write_solution(ss, sol);
  write_file(out / "solution.txt", ss.str());
  os << "strong residual " << fmt(strong_residual(sol, df.data)) << "\n";
  return kOk;
}

int flow_cmd(const ScenarioConfig& c, const fs::path& out, std::ostream& os, std::ostream& err) {
  const ModeTable table = spectrum(c.material, c.domain, 1, std::max(c.lmax, 2));
  const FlowRun r = vesicle::run(c.flow, c.material, c.domain, c.initial_shape(), c.snapshot_every, &table);
  std::ostringstream csv;
  write_monitor_header(csv);
  for (const MonitorRow& row : r.rows) write_monitor_row(csv, row);
  write_file(out / c.monitor, csv.str());
  for (std::size_t i = 0; i < r.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%05zu.shape", i);
    std::ostringstream ss;
    write_shape(ss, r.snapshots[i].shape);
    write_file(out / name, ss.str());
  }
  std::ostringstream fin;
  write_shape(fin, r.final.shape);
  write_file(out / "final.shape", fin.str());
  if (r.degenerate_seen)
    err << "warning: shape is near constant mean curvature; area multiplier dropped (volume-only projection)\n";
  const MonitorRow& last = r.rows.back();
  os << "steps " << r.rows.size() - 1 << ", t = " << fmt(last.t) << ", F = " << fmt(last.F)
     << ", helfrich_residual = " << fmt(last.helfrich_residual) << "\n";
  if (r.blew_up) {
    err << "error: " << r.message << "\n";
    return kBlowUp;
  }
  return kOk;
}

int verify_cmd(const ScenarioConfig& c, const fs::path& out, std::ostream& os) {
  const std::vector<CheckResult> rs = check_all(c.material, c.domain, c.seed, c.verify_lmax);
  write_file(out / "verify.json", to_json(rs));
  bool ok = true;
  for (const CheckResult& r : rs) {
    char line[160];
    std::snprintf(line, sizeof line, "%-4s %-28s lmax %2d  defect %.3e  tol %.1e\n", r.passed ? "ok" : "FAIL",
                  r.name.c_str(), static_cast<int>(r.context.count("lmax") ? r.context.at("lmax") : 0), r.defect,
                  r.tolerance);
    os << line;
    ok = ok && r.passed;
  }
  return ok ? kOk : kVerifyFailed;
}

int spectrum_cmd(const ScenarioConfig& c, const fs::path& out, std::ostream& os) {
  const int hi = c.spectrum_l_max < 0 ? c.lmax : c.spectrum_l_max;
  const ModeTable t = spectrum(c.material, c.domain, c.spectrum_l_min, hi);
  std::ostringstream csv;
  csv << "l,M_l,gamma_l\n";
  for (std::size_t i = 0; i < t.l.size(); ++i) csv << t.l[i] << "," << fmt(t.M[i]) << "," << fmt(t.gamma[i]) << "\n";
  write_file(out / "spectrum.csv", csv.str());
  os << csv.str();
  return kOk;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& is) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(is);
  } catch (const CLI::Error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  ScenarioConfig c;
  bool tubular_set = false;
  std::vector<std::array<double, 4>> h_entries;

  using Setter = std::function<void(const std::string&, const std::vector<std::string>&)>;
  auto num = [](double& dst) -> Setter {
    return [&dst](const std::string& k, const std::vector<std::string>& v) { dst = to_double(k, single(k, v)); };
  };
  auto integer = [](int& dst, int lo) -> Setter {
    return [&dst, lo](const std::string& k, const std::vector<std::string>& v) {
      const long long x = to_int(k, single(k, v));
      if (x < lo || x > 1000000) parse_fail(k, "value out of range");
      dst = static_cast<int>(x);
    };
  };
  auto text = [](std::string& dst) -> Setter {
    return [&dst](const std::string& k, const std::vector<std::string>& v) { dst = single(k, v); };
  };
  const std::map<std::string, Setter> keys{
      {"seed",
       [&](const std::string& k, const std::vector<std::string>& v) {
         const long long s = to_int(k, single(k, v));
         if (s < 0) parse_fail(k, "must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"geometry.a", num(c.domain.a)},
      {"geometry.r_outer", num(c.domain.r_outer)},
      {"geometry.lmax", integer(c.lmax, 1)},
      {"geometry.tubular_radius",
       [&](const std::string& k, const std::vector<std::string>& v) {
         c.domain.tubular_radius = to_double(k, single(k, v));
         tubular_set = true;
       }},
      {"material.kappa", num(c.material.kappa)},
      {"material.kappa_g", num(c.material.kappa_g)},
      {"material.c0", num(c.material.c0)},
      {"material.mu_b", num(c.material.mu_b)},
      {"material.mu", num(c.material.mu)},
      {"material.rho_b", num(c.material.rho_b)},
      {"material.rho", num(c.material.rho)},
      {"flow.dt_init", num(c.flow.dt_init)},
      {"flow.t_end", num(c.flow.t_end)},
      {"flow.stepper",
       [&](const std::string& k, const std::vector<std::string>& v) {
         try {
           c.flow.stepper = parse_stepper(single(k, v));
         } catch (const Error& e) {
           parse_fail(k, e.what());
         }
       }},
      {"flow.tol_constraint", num(c.flow.tol_constraint)},
      {"flow.pin_translations",
       [&](const std::string& k, const std::vector<std::string>& v) {
         c.flow.pin_translations = to_bool(k, single(k, v));
       }},
      {"flow.mobility",
       [&](const std::string& k, const std::vector<std::string>& v) {
         if (single(k, v) != "frozen-sphere") parse_fail(k, "only 'frozen-sphere' is implemented");
       }},
      {"init.h",
       [&](const std::string& k, const std::vector<std::string>& v) {
         if (v.empty() || v.size() % 4 != 0) parse_fail(k, "expected groups of 'l m re im'");
         for (std::size_t i = 0; i < v.size(); i += 4)
           h_entries.push_back({static_cast<double>(to_int(k, v[i])), static_cast<double>(to_int(k, v[i + 1])),
                                to_double(k, v[i + 2]), to_double(k, v[i + 3])});
       }},
      {"spectrum.l_min", integer(c.spectrum_l_min, 0)},
      {"spectrum.l_max", integer(c.spectrum_l_max, 0)},
      {"verify.lmax",
       [&](const std::string& k, const std::vector<std::string>& v) {
         if (v.empty()) parse_fail(k, "expected at least one band limit");
         c.verify_lmax.clear();
         for (const std::string& s : v) {
           const long long L = to_int(k, s);
           if (L < 8 || L > 128) parse_fail(k, "band limits must lie in [8, 128]");
           c.verify_lmax.push_back(static_cast<int>(L));
         }
       }},
      {"output.dir", text(c.out_dir)},
      {"output.monitor", text(c.monitor)},
      {"output.snapshot_every", integer(c.snapshot_every, 0)},
  };

  for (const CLI::ConfigItem& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    std::string key;
    for (const std::string& p : it.parents) key += p + ".";
    key += it.name;
    const auto f = keys.find(key);
    if (f == keys.end()) parse_fail(key, "unknown key");
    f->second(key, it.inputs);
  }

  if (!tubular_set) c.domain.tubular_radius = DomainSpec::default_tubular_radius(c.domain.a, c.domain.r_outer);
  c.domain.validate();
  c.material.validate();
  c.flow.validate();
  if (c.spectrum_l_max >= 0 && c.spectrum_l_max < c.spectrum_l_min)
    throw Error(ErrorKind::InvalidParameter, "spectrum.l_max must be >= spectrum.l_min");
  c.init_h = sph::ShCoeffs(c.lmax);
  for (const auto& [l, m, re, im] : h_entries) {
    if (l < 0 || l > c.lmax || std::abs(m) > l) parse_fail("init.h", "index outside the band limit");
    if (im != 0.0) parse_fail("init.h", "real basis requires im = 0");
    c.init_h(static_cast<int>(l), static_cast<int>(m)) += re;
  }
  check_admissible(c.initial_shape());
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::ParseError, "cannot open " + path);
  try {
    return parse_scenario(is);
  } catch (const Error& e) {
    const std::string what = e.what(), prefix = std::string(to_string(e.kind())) + ": ";
    throw Error(e.kind(), path + ": " + what.substr(what.rfind(prefix, 0) == 0 ? prefix.size() : 0));
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasi-spherical vesicle hydrodynamics"};
  app.require_subcommand(1);
  std::string config_path, data_path, out_dir;
  std::int64_t seed = -1;
  app.add_option("--config", config_path, "scenario file")->check(CLI::ExistingFile);
  app.add_option("--data", data_path, "Stokes data file (solve)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--seed", seed, "random seed (overrides seed)")->check(CLI::NonNegativeNumber);
  for (const char* name : {"solve", "flow", "verify", "spectrum"}) app.add_subcommand(name)->fallthrough();
  app.get_subcommand("solve")->description("solve one Stokes system for a data file");
  app.get_subcommand("flow")->description("relax a shape by the constrained gradient flow");
  app.get_subcommand("verify")->description("run the identity checks and write JSON");
  app.get_subcommand("spectrum")->description("write the mode table l, M_l, gamma_l");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    std::istringstream empty;
    ScenarioConfig c = config_path.empty() ? parse_scenario(empty) : load_scenario(config_path);
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    const fs::path dir = out_dir.empty() ? fs::path(c.out_dir) : fs::path(out_dir);
    fs::create_directories(dir);
    banner(out, cmd, c);
    if (cmd == "solve") return solve_cmd(c, data_path, dir, out, err);
    if (cmd == "flow") return flow_cmd(c, dir, out, err);
    if (cmd == "verify") return verify_cmd(c, dir, out);
    return spectrum_cmd(c, dir, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::BlowUpDetected ? kBlowUp : kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace vesicle::cli
