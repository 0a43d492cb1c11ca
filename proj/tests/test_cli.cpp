#include <doctest.h>

#include "ndef/cli.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ndef;
using namespace ndef::cli;
using nlohmann::json;

namespace {

std::string scenario_dir() {
  const char* dir = std::getenv("NDEF_SCENARIO_DIR");
  return dir ? dir : NDEF_DEFAULT_SCENARIO_DIR;
}

std::string scenario_path(const std::string& name) { return scenario_dir() + "/" + name + ".json"; }

const CheckReport& find(const Report& r, std::string_view check) {
  for (const auto& c : r.checks)
    if (c.check == check) return c;
  FAIL("check missing from report: " << check);
  throw std::logic_error("unreachable");
}

Report without_timing(Report r) {
  for (auto& c : r.checks) c.elapsed_ms = 0.0;
  return r;
}

int run_cli(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const char* cli = std::getenv("NDEF_CLI");
  const std::string command = std::string(cli ? cli : NDEF_DEFAULT_CLI) + " " + args + " > " + stdout_path + " 2>/dev/null";
  const int status = std::system(command.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json minimal() {
  return json::parse(R"json({
    "name": "minimal",
    "chart": {"bounds": [[0, 1], [0, 1], [0, 1]], "grid": 3},
    "ambient": "so(3)",
    "subgroup": "so2_in_so3",
    "h": [["cos(x1)", "sin(x1)", "0"], ["-sin(x1)", "cos(x1)", "0"], ["0", "0", "1"]],
    "connection": "zero",
    "checks": ["deform"]
  })json");
}

}  // namespace

TEST_CASE("status matches residual against tolerance") {
  for (const auto& name : builtin_names()) {
    Report r = run_scenario(builtin_scenario(name));
    CHECK(r.version == std::string(kVersion));
    for (const auto& c : r.checks) {
      CAPTURE(name);
      CAPTURE(c.check);
      CHECK((c.status == "pass") == (c.residual <= c.tolerance));
      if (c.status == "error") CHECK_FALSE(c.message.empty());
    }
    CHECK(exit_code(r) == (r.passed() ? 0 : 2));
  }
}

TEST_CASE("bundled scenario files match the catalog") {
  for (const auto& name : {"conformal_so3", "constant_su2", "off_normaliser", "su2_diag_break"}) {
    Scenario file = load_scenario(scenario_path(name));
    CHECK(scenario_to_json(file) == scenario_to_json(builtin_scenario(name)));
    CHECK(scenario_digest(file) == scenario_digest(builtin_scenario(name)));
  }
}

TEST_CASE("conformal scenario") {
  Report r = run_scenario(load_scenario(scenario_path("conformal_so3")));
  CHECK(r.passed());
  CHECK(r.checks.size() == 7);
  const CheckReport& zeta = find(r, "zeta");
  CHECK(zeta.details["dlog_phi_match"]["value"].get<double>() <= 1e-10);
  CHECK(zeta.details["pr_g_maurer_cartan"]["value"].get<double>() <= 1e-10);
  // ζ = d log φ · 1 with φ = 1 + x1²: only the dx1 row is non-zero.
  const json& table = zeta.details["table"];
  REQUIRE(table.size() == 3);
  CHECK(table[0]["component"] == "dx1");
  Expr entry = parse_expression(table[0]["entries"][1][1].get<std::string>(), 3);
  for (double x1 : {0.0, 0.3, 1.0}) {
    std::vector<double> p{x1, 0.2, 0.7};
    CHECK(evaluate(entry, p) == doctest::Approx(2 * x1 / (1 + x1 * x1)).epsilon(1e-14));
  }
  CHECK(table[1]["entries"][0][0] == "0");
  CHECK(table[0]["entries"][0][1] == "0");
  const CheckReport& deform = find(r, "deform");
  CHECK(deform.details["conformal_coincidence"]["value"].get<double>() <= 1e-10);
  CHECK(find(r, "metric-compat").residual <= 1e-9);
  CHECK(find(r, "torsion-change").details["torsion_free"] == true);
}

TEST_CASE("constant su(2) scenario") {
  Report r = run_scenario(load_scenario(scenario_path("constant_su2")));
  CHECK(r.passed());
  CHECK(find(r, "zeta").residual == 0.0);
  const CheckReport& inst = find(r, "instanton");
  CHECK(inst.details["before"]["instanton"] == true);
  CHECK(inst.details["after"]["instanton"] == true);
  CHECK(inst.details["verdict_preserved"] == true);
  CHECK(find(r, "admissibility").details["constant"] == true);
}

TEST_CASE("off-normaliser scenario fails admissibility and gates the rest") {
  Report r = run_scenario(load_scenario(scenario_path("off_normaliser")));
  CHECK_FALSE(r.passed());
  CHECK(exit_code(r) == 2);
  const CheckReport& adm = find(r, "admissibility");
  CHECK(adm.status == "fail");
  CHECK(adm.residual >= 1e-3);
  const CheckReport& deform = find(r, "deform");
  CHECK(deform.status == "error");
  CHECK(deform.message.find("prerequisite failed") != std::string::npos);
}

TEST_CASE("diagonal break scenario") {
  Report r = run_scenario(builtin_scenario("su2_diag_break"));
  const CheckReport& phi = find(r, "phi");
  CHECK(phi.status == "fail");
  CHECK(phi.residual == doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(1e-12));
  CHECK(find(r, "admissibility").status == "fail");
}

TEST_CASE("trivial structure group: torsion is the whole connection") {
  Report r = run_scenario(builtin_scenario("trivial_frame"));
  CHECK(r.passed());
  CHECK(find(r, "torsion").details["expected_match"]["value"].get<double>() <= 1e-12);
  CHECK(find(r, "torsion").details["norm"]["value"].get<double>() > 1.0);
}

TEST_CASE("central scenario keeps the connection") {
  Report r = run_scenario(builtin_scenario("central_su2"));
  CHECK(r.passed());
  CHECK(find(r, "admissibility").details["centraliser_valued"] == true);
  CHECK(find(r, "instanton").details["verdict_preserved"] == true);
}

TEST_CASE("reports: formats, round trip and determinism") {
  Scenario s = builtin_scenario("conformal_so3");
  Report a = run_scenario(s);
  Report b = run_scenario(s);
  CHECK(emit_report(without_timing(a), "json") == emit_report(without_timing(b), "json"));
  CHECK(emit_report(without_timing(a), "csv") == emit_report(without_timing(b), "csv"));

  std::string text = emit_report(a, "json");
  CHECK(text.find("\"status\": \"pass\"") != std::string::npos);
  CHECK(report_from_json(json::parse(text)) == a);
  // Keys come out sorted.
  json j = json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [key, value] : j.items()) keys.push_back(key);
  CHECK(std::is_sorted(keys.begin(), keys.end()));

  std::string csv = emit_report(a, "csv");
  CHECK(csv.rfind("check,status,residual,point,elapsed_ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(a.checks.size()) + 1);

  Report failing = run_scenario(builtin_scenario("off_normaliser"));
  CHECK(report_from_json(json::parse(emit_report(failing, "json"))) == failing);
  CHECK_THROWS_AS(emit_report(a, "xml"), ScenarioError);
}

TEST_CASE("options override tolerance, grid and checks") {
  Scenario s = builtin_scenario("trivial_frame");
  RunOptions strict;
  strict.tolerance = 0.0;
  Report r = run_scenario(s, strict);
  CHECK(find(r, "torsion").status == "fail");
  for (const auto& c : r.checks) CHECK(c.tolerance == 0.0);

  RunOptions coarse;
  coarse.grid = 2;
  coarse.checks = std::vector{CheckKind::Zeta};
  Report z = run_scenario(s, coarse);
  REQUIRE(z.checks.size() == 2);
  CHECK(z.checks[0].check == "admissibility");
  CHECK(z.checks[1].check == "zeta");

  json j = scenario_to_json(s);
  j["tolerances"] = {{"torsion", 0.0}};
  CHECK(find(run_scenario(parse_scenario(j)), "torsion").status == "fail");
}

TEST_CASE("scenario parsing rejects malformed input") {
  CHECK_NOTHROW(parse_scenario(minimal()));
  auto broken = [](auto edit) {
    json j = minimal();
    edit(j);
    return j;
  };
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["colour"] = "red"; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j.erase("h"); })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["checks"] = {"curvature"}; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["ambient"] = "e8"; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["h"][0][0] = "cos(x1"; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["h"][0][0] = "x4"; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["h"] = {{"1", "0"}, {"0", "1"}}; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["connection"] = {{{"0"}}}; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["subgroup"] = "so(4)"; })), ScenarioError);
  CHECK_THROWS_AS(parse_scenario(broken([](json& j) { j["tolerances"] = {{"deform", -1.0}}; })), ScenarioError);
  CHECK_THROWS_AS(load_scenario(scenario_dir() + "/missing.json"), ScenarioError);
  CHECK_THROWS_AS(builtin_scenario("nope"), ScenarioError);
  try {
    builtin_scenario("nope");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("conformal_so3") != std::string::npos);
  }

  json explicit_basis = minimal();
  explicit_basis["subgroup"] = {{"name", "rot12"}, {"basis", {{{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}}}}};
  Report r = run_scenario(parse_scenario(explicit_basis));
  CHECK(r.passed());
}

TEST_CASE("connection outside the structure algebra is an error, not a pass") {
  json j = minimal();
  j["connection"] = json::array();
  for (int i = 0; i < 3; ++i) j["connection"].push_back({{"0", "0", "x1"}, {"0", "0", "0"}, {"-x1", "0", "0"}});
  Report r = run_scenario(parse_scenario(j));
  const CheckReport& deform = find(r, "deform");
  CHECK(deform.status != "pass");
  CHECK(exit_code(r) == 2);
}

TEST_CASE("executable exit codes") {
  namespace fs = std::filesystem;
  CHECK(run_cli("check " + scenario_path("conformal_so3")) == 0);
  CHECK(run_cli("check " + scenario_path("constant_su2") + " --format csv") == 0);
  CHECK(run_cli("check " + scenario_path("off_normaliser")) == 2);
  CHECK(run_cli("instanton builtin:su2_diag_break") == 2);
  CHECK(run_cli("check " + scenario_dir() + "/missing.json") == 1);
  CHECK(run_cli("check builtin:conformal_so3 --format yaml") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("catalog") == 0);
  CHECK(run_cli("catalog unknown") == 1);

  const fs::path out = fs::temp_directory_path() / "ndef_cli_report.csv";
  fs::remove(out);
  CHECK(run_cli("zeta builtin:conformal_so3 --format csv --grid 3 --output " + out.string()) == 0);
  std::string csv = read_file(out.string());
  CHECK(csv.rfind("check,status,residual,point,elapsed_ms\n", 0) == 0);
  CHECK(csv.find("zeta,pass,") != std::string::npos);
  fs::remove(out);

  const fs::path listing = fs::temp_directory_path() / "ndef_cli_catalog.txt";
  CHECK(run_cli("catalog", listing.string()) == 0);
  std::string names = read_file(listing.string());
  for (const auto& n : builtin_names()) CHECK(names.find(n) != std::string::npos);
  fs::remove(listing);
}

TEST_CASE("defining section is transported by h") {
  json j = minimal();
  j["checks"] = {"admissibility"};
  j["representation"] = {{"kind", "standard"}, {"tau0", {0.0, 0.0, 1.0}}};
  Report r = run_scenario(parse_scenario(j));
  REQUIRE(r.passed());
  auto tau = find(r, "admissibility").details["deformed_tau_at_center"].get<std::vector<double>>();
  REQUIRE(tau.size() == 3);
  CHECK(std::abs(tau[0]) + std::abs(tau[1]) <= 1e-15);
  CHECK(tau[2] == doctest::Approx(1.0));

  // e1 is not fixed by rotations in the 1-2 plane.
  j["representation"]["tau0"] = {1.0, 0.0, 0.0};
  CHECK(find(run_scenario(parse_scenario(j)), "admissibility").status == "error");
  j["representation"]["kind"] = "spinor";
  CHECK_THROWS_AS(parse_scenario(j), ScenarioError);
}
