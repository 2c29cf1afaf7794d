#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "oracles/collocation.hpp"
#include "vesicle/error.hpp"

using namespace vesicle;
namespace fs = std::filesystem;

namespace {

const fs::path kData = VESICLE_DATA_DIR;

struct Tmp {
  fs::path dir;
  explicit Tmp(const std::string& name) : dir(fs::temp_directory_path() / ("vesicle_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Tmp() { fs::remove_all(dir); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Blocks "name" followed by "l m re im" lines, keyed by name and index.
std::map<std::string, std::map<std::pair<int, int>, double>> coefficient_blocks(const std::string& text) {
  std::map<std::string, std::map<std::pair<int, int>, double>> out;
  std::istringstream is(text);
  std::string line, block;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int l, m;
    double re, im;
    if (ls >> l >> m >> re >> im) {
      if (!block.empty()) out[block][{l, m}] = re;
    } else {
      block = line == "w" || line == "phi" || line == "psi" || line == "q" ? line : "";
    }
  }
  return out;
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::vector<double> r;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("solve: zero data gives a zero dump") {
  Tmp t("zero");
  const fs::path data = t.write("zero.dat", "lmax 3\nsystem s1\n");
  const Result r = invoke({"solve", "--data", data.string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kOk);
  for (const auto& [name, coeffs] : coefficient_blocks(slurp(t.dir / "solution.txt")))
    for (const auto& [lm, v] : coeffs) CHECK(v == 0.0);
  CHECK(slurp(t.dir / "compat.txt").find("passed true") != std::string::npos);
}

TEST_CASE("solve: mode2_force reproduces the oracle golden file") {
  Tmp t("mode2");
  const Result r = invoke({"solve", "--data", (kData / "mode2_force.dat").string(), "--out", t.dir.string()});
  REQUIRE(r.code == cli::kOk);
  const auto got = coefficient_blocks(slurp(t.dir / "solution.txt"));
  const auto want = coefficient_blocks(slurp(kData / "mode2_force.golden"));
  REQUIRE(want.size() == 4);
  for (const auto& [name, coeffs] : want) {
    REQUIRE(got.count(name));
    for (const auto& [lm, v] : coeffs) CHECK(std::abs(got.at(name).at(lm) - v) <= 1e-10);
  }
}

TEST_CASE("golden file agrees with a fresh collocation solve") {
  std::ifstream in(kData / "mode2_force.dat");
  const DataFile df = read_data(in);
  const auto want = coefficient_blocks(slurp(kData / "mode2_force.golden"));
  for (int l = 1; l <= 2; ++l)
    for (int m = -l; m <= l; ++m) {
      oracle::ModeProblem pb;
      pb.l = l;
      pb.S = df.data.f3_s(l, m);
      pb.Tt = df.data.f3_t(l, m);
      pb.f3 = df.data.f3_nu(l, m);
      const oracle::ModeAnswer o = oracle::collocate(pb);
      CHECK(std::abs(want.at("w").at({l, m}) - o.w) < 1e-12);
      CHECK(std::abs(want.at("phi").at({l, m}) - o.V) < 1e-12);
      CHECK(std::abs(want.at("psi").at({l, m}) - o.T) < 1e-12);
      CHECK(std::abs(want.at("q").at({l, m}) - o.q) < 1e-12);
    }
}

TEST_CASE("solve: a malformed coefficient line is an input error naming the line") {
  Tmp t("bad");
  const fs::path data = t.write("bad.dat", "lmax 2\nf3_nu\n2 0 1.0 0\n2 x 1.0 0\n");
  const Result r = invoke({"solve", "--data", data.string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find("line 4") != std::string::npos);
}

TEST_CASE("solve: incompatible s2 data are rejected") {
  Tmp t("compat");
  const fs::path data = t.write("c.dat", "lmax 2\nsystem s2\nf5\n0 0 1.0 0\n");
  const Result r = invoke({"solve", "--data", data.string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kInputError);
  CHECK(slurp(t.dir / "compat.txt").find("passed false") != std::string::npos);
}

TEST_CASE("flow: sphere gives constant rows and t_end = 0 a single row") {
  Tmp t("flow");
  const fs::path cfg = t.write("s.cfg", "[geometry]\nlmax = 6\n[flow]\ndt_init = 1e-3\nt_end = 4e-3\n");
  Result r = invoke({"flow", "--config", cfg.string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kOk);
  auto rows = csv_rows(slurp(t.dir / "monitor.csv"));
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) {
    CHECK(std::abs(row[1] - rows[0][1]) < 1e-13);
    CHECK(row[8] < 1e-14);
  }
  CHECK(r.err.find("warning") != std::string::npos);

  const fs::path cfg0 = t.write("z.cfg", "[flow]\nt_end = 0\n[init]\nh = 2 0 1e-3 0\n");
  r = invoke({"flow", "--config", cfg0.string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kOk);
  CHECK(csv_rows(slurp(t.dir / "monitor.csv")).size() == 1);
}

TEST_CASE("flow: relax_l2 relaxes to a Helfrich equilibrium") {
  Tmp t("relax");
  const Result r = invoke({"flow", "--config", (kData / "relax_l2.cfg").string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kOk);
  const auto rows = csv_rows(slurp(t.dir / "monitor.csv"));
  REQUIRE(rows.size() > 100);
  CHECK(rows.back()[9] <= 1e-6);
  CHECK(std::abs(rows.back()[4] - 1.0) <= 1e-6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] <= rows[i - 1][1] * (1 + 1e-12));
  CHECK(fs::exists(t.dir / "final.shape"));
  CHECK(fs::exists(t.dir / "snapshot_00001.shape"));
  std::ifstream fin(t.dir / "final.shape");
  CHECK(read_shape(fin).lmax() == 8);
}

TEST_CASE("flow: an unattainable constraint tolerance is a blow-up with partial output") {
  Tmp t("blowup");
  const fs::path cfg = t.write("b.cfg",
                               "[flow]\nstepper = euler\ndt_init = 10\nt_end = 100\ntol_constraint = 1e-12\n"
                               "[init]\nh = 2 0 0.2 0\nh = 3 1 0.1 0\n");
  const Result r = invoke({"flow", "--config", cfg.string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kBlowUp);
  CHECK(r.err.find("blow-up") != std::string::npos);
  CHECK(csv_rows(slurp(t.dir / "monitor.csv")).size() == 1);
}

TEST_CASE("spectrum: rows for l = 1..4 with a neutral translation mode") {
  Tmp t("spec");
  const fs::path cfg = t.write("s.cfg", "[spectrum]\nl_min = 1\nl_max = 4\n");
  const Result r = invoke({"spectrum", "--config", cfg.string(), "--out", t.dir.string()});
  CHECK(r.code == cli::kOk);
  const std::string csv = slurp(t.dir / "spectrum.csv");
  CHECK(csv.rfind("l,M_l,gamma_l\n", 0) == 0);
  const auto rows = csv_rows(csv);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][0] == 1);
  CHECK(std::abs(rows[0][2]) < 1e-10 * rows[1][2]);
}

TEST_CASE("scenario parsing") {
  SUBCASE("full scenario") {
    std::istringstream is(
        "seed = 7\n[geometry]\na = 2\nr_outer = 7\nlmax = 10\n[material]\nc0 = 0.5\nmu = 0.1\n"
        "[flow]\nstepper = rk4\npin_translations = off\n[init]\nh = 2 0 0.01 0\nh = 3 -1 0.02 0\n"
        "[verify]\nlmax = 16\n[output]\ndir = out\nsnapshot_every = 5\n");
    const cli::ScenarioConfig c = cli::parse_scenario(is);
    CHECK(c.seed == 7);
    CHECK(c.domain.a == 2.0);
    CHECK(c.domain.tubular_radius == DomainSpec::default_tubular_radius(2.0, 7.0));
    CHECK(c.lmax == 10);
    CHECK(c.material.c0 == 0.5);
    CHECK(c.flow.stepper == Stepper::RK4);
    CHECK_FALSE(c.flow.pin_translations);
    CHECK(c.init_h(3, -1) == 0.02);
    CHECK(c.verify_lmax == std::vector<int>{16});
    CHECK(c.snapshot_every == 5);
  }
  auto kind_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      cli::parse_scenario(is);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidBandLimit;
  };
  CHECK(kind_of("[geometry]\nradius = 1\n") == ErrorKind::ParseError);
  CHECK(kind_of("[geometry]\na = one\n") == ErrorKind::ParseError);
  CHECK(kind_of("[geometry]\na = 1 # comment\n") == ErrorKind::ParseError);
  CHECK(kind_of("[flow]\nmobility = exact\n") == ErrorKind::ParseError);
  CHECK(kind_of("[init]\nh = 9 0 0.1 0\n") == ErrorKind::ParseError);
  CHECK(kind_of("[geometry]\nr_outer = 0.5\n") == ErrorKind::InvalidParameter);
  CHECK(kind_of("[init]\nh = 2 0 0.8 0\n") == ErrorKind::ShapeOutOfTubularNeighborhood);
}

TEST_CASE("command line errors") {
  CHECK(invoke({}).code == cli::kInputError);
  CHECK(invoke({"launch"}).code == cli::kInputError);
  CHECK(invoke({"solve"}).code == cli::kInputError);
  CHECK(invoke({"flow", "--config", "/nonexistent.cfg"}).code == cli::kInputError);
  CHECK(invoke({"--help"}).code == cli::kOk);
}
