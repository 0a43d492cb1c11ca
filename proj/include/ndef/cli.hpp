#pragma once

// Scenario files, the check runner and report emission behind ndef-cli.

#include "ndef/instanton.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ndef::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed or inconsistent scenario; maps to exit code 1.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Listed in execution order.
enum class CheckKind { Admissibility, Deform, Zeta, Torsion, TorsionChange, Phi, Instanton, MetricCompat };

const std::vector<CheckKind>& all_checks();
std::string_view check_name(CheckKind kind);
std::optional<CheckKind> parse_check(std::string_view name);
double default_tolerance(CheckKind kind);

using StringMatrix = std::vector<std::vector<std::string>>;

/// A catalog algebra name, or an explicit basis under a display name.
struct AlgebraChoice {
  std::string name;
  std::vector<Matrix> basis;  // empty: resolve `name` in the catalog
};

/// A 1-form given by one expression matrix per coordinate, or a keyword:
/// "levi-civita" (of the scenario frame) or "zero".
struct FormInput {
  std::string keyword;
  std::vector<StringMatrix> components;
};

struct Scenario {
  std::string name;
  std::vector<std::pair<double, double>> bounds;
  std::vector<int> grid;
  AlgebraChoice ambient;
  AlgebraChoice subgroup;
  StringMatrix h;
  std::optional<FormInput> connection;
  std::optional<FormInput> reference;
  std::optional<FormInput> reference_prime;
  std::optional<StringMatrix> frame;
  std::optional<std::string> representation;
  std::optional<std::vector<double>> tau0;
  std::vector<CheckKind> checks;
  std::map<std::string, double> tolerances;
  std::optional<std::vector<StringMatrix>> expected_zeta;
  std::optional<std::vector<StringMatrix>> expected_torsion;
};

/// Strict: unknown keys, unknown check names and shape mismatches throw.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
nlohmann::json scenario_to_json(const Scenario& s);
/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string scenario_digest(const Scenario& s);

std::vector<std::string> builtin_names();
/// Throws ScenarioError listing the available names.
Scenario builtin_scenario(std::string_view name);

struct CheckReport {
  std::string check;
  std::string status;  // pass | fail | error
  double residual = 0.0;
  double tolerance = 0.0;
  Point point;
  double elapsed_ms = 0.0;
  std::string message;
  nlohmann::json details = nlohmann::json::object();

  bool operator==(const CheckReport&) const = default;
};

struct Report {
  std::string scenario;
  std::string digest;
  std::string version = kVersion;
  std::vector<CheckReport> checks;

  bool passed() const;
  bool operator==(const Report&) const = default;
};

struct RunOptions {
  std::optional<double> tolerance;
  std::optional<int> grid;
  /// Replaces the scenario's check list when set.
  std::optional<std::vector<CheckKind>> checks;
};

/// Gated checks pull in admissibility and report "error" with
/// "prerequisite failed" when it fails.
Report run_scenario(const Scenario& s, const RunOptions& options = {});

nlohmann::json report_to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);
/// "json" or "csv"; throws ScenarioError otherwise.
std::string emit_report(const Report& r, std::string_view format);

/// 0 when every check passed, 2 otherwise.
int exit_code(const Report& r);

}  // namespace ndef::cli
