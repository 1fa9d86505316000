#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <clocale>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"

using namespace nhm::cli;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& yaml, const std::string& command = "bands") {
  try {
    Config c = Config::from_string(yaml, "job.yaml");
    prepare(command, c);
    std::set<std::string> known;
    for (const auto& k : config_schema()) known.insert(k.key);
    c.reject_unknown(known);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("nhm_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("float formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-HUGE_VAL) == "-inf");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, double(i % 40 - 20));
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  }
  // a comma locale must not leak into the output
  if (std::setlocale(LC_ALL, "de_DE.UTF-8") || std::setlocale(LC_ALL, "fr_FR.UTF-8")) {
    CHECK(format_double(1.25) == "1.25");
    std::setlocale(LC_ALL, "C");
  }
}

TEST_CASE("tables") {
  Table t{"t", {"a", "b"}, {}};
  t.add({1.5, 2});
  t.add({std::string("x"), 0.1});
  CHECK(t.csv() == "a,b\n1.5,2\nx,0.10000000000000001\n");
  CHECK_THROWS_AS(t.add({1.0}), std::logic_error);
}

TEST_CASE("config errors carry file and line") {
  CHECK(config_error("lattice:\n  type: square\n  a_over_lambda: abc\n") ==
        "job.yaml:3:18: lattice.a_over_lambda: expected a number, got 'abc'");
  CHECK(config_error("lattice:\n  a_over_lambda: -0.2\n").rfind("job.yaml:2:", 0) == 0);
  CHECK(config_error("sweep:\n  grid: 2\n").find("sweep.grid: must lie in 3..4001") != std::string::npos);
  CHECK(config_error("lattice:\n  type: hexagonal\n").rfind("job.yaml:2:9: lattice.type: unknown lattice", 0) == 0);
  CHECK(config_error("lattice:\n  etaa: 1.1\n") == "job.yaml:2:9: unknown key 'lattice.etaa'");
  CHECK(config_error("lattice: [1, 2\n").rfind("job.yaml:", 0) == 0);
  CHECK(config_error("- 1\n- 2\n").find("top level must be a mapping") != std::string::npos);
  CHECK(config_error("lattice:\n  type: square\n") == "");
}

TEST_CASE("overrides") {
  Config c = Config::from_string("lattice:\n  eta: 1.05\n", "job.yaml");
  std::string a = "NHM_LATTICE__ETA=1.1", b = "NHM_RIBBON__LENGTH=40", d = "OTHER_X=1";
  char* env[] = {a.data(), b.data(), d.data(), nullptr};
  c.apply_env("NHM_", env);
  CHECK(c.get_double("lattice.eta") == 1.1);
  CHECK(c.get_int("ribbon.length") == 40);
  c.apply_assignment("lattice.eta=1.2", "--set lattice.eta=1.2");
  CHECK(c.get_double("lattice.eta") == 1.2);
  CHECK_THROWS_AS(c.apply_assignment("novalue", "--set novalue"), ConfigError);
  CHECK_THROWS_AS(c.apply_assignment("a..b=1", "--set a..b=1"), ConfigError);
  // an override is reported at its origin
  c.apply_assignment("ribbon.length=x", "--set ribbon.length=x");
  try {
    c.get_int("ribbon.length");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("--set ribbon.length=x: ribbon.length:", 0) == 0);
  }
}

TEST_CASE("config hash") {
  auto hash_of = [](const std::string& yaml, const std::string& cmd = "bands") {
    Config c = Config::from_string(yaml);
    prepare(cmd, c);
    return c.hash(cmd);
  };
  const std::string h = hash_of("lattice:\n  a_over_lambda: 0.2\n");
  CHECK(h.size() == 64);
  // defaults and equivalent spellings resolve to the same values
  CHECK(hash_of("") == h);
  CHECK(hash_of("lattice:\n  a_over_lambda: 0.20\n") == h);
  CHECK(hash_of("lattice:\n  a_over_lambda: 0.21\n") != h);
  CHECK(hash_of("", "fermi-arcs") != h);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("commands") {
  CHECK(command_names().size() == 12);
  for (const auto& name : command_names()) CHECK(module_of(name) != "cli");
  CHECK(module_of("ribbon-skin") == "ribbon");
  CHECK_THROWS_AS(prepare("nope", Config()), ConfigError);
}

TEST_CASE("deterministic output and check mode") {
  const fs::path d1 = scratch("a"), d2 = scratch("b");
  Config c = Config::from_string("lattice:\n  type: rectangular\n  eta: 1.1\nsweep:\n  grid: 9\n", "job.yaml");
  Job job = prepare("bands", c);
  const std::string hash = c.hash("bands");
  RunInfo info{"bands", "job.yaml", hash, c.echo(), 1, 0.0};
  write_job(d1, info, job());
  write_job(d2, info, prepare("bands", c)());
  const std::string csv = slurp(d1 / "bands.csv");
  CHECK(csv.rfind("kx,ky,ReE1,ImE1,ReE2,ImE2,detV_abs\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 82);
  CHECK(csv == slurp(d2 / "bands.csv"));

  const auto side = nlohmann::json::parse(slurp(d1 / "bands.json"));
  CHECK(side["config_hash"] == hash);
  CHECK(side["inputs"]["lattice.eta"] == 1.1);
  CHECK(side["outputs"][0]["sha256"] == sha256_hex(csv));

  CHECK(check_job(d1, "bands", hash).ok);
  CHECK(!check_job(d1, "bands", std::string(64, '0')).ok);
  CHECK(!check_job(d1, "fermi-arcs", hash).ok);
  {
    std::ofstream f(d1 / "bands.csv", std::ios::app);
    f << "tampered\n";
  }
  const CheckResult r = check_job(d1, "bands", hash);
  CHECK(!r.ok);
  REQUIRE(r.problems.size() == 1);
  CHECK(r.problems[0].find("data file changed") != std::string::npos);
  fs::remove_all(d1);
  fs::remove_all(d2);
}
