// ndef-cli: run deformation scenarios and emit JSON or CSV reports.
//
// Exit codes: 0 all checks pass, 1 usage or scenario error, 2 a check failed.

#include "ndef/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace ndef::cli;

constexpr std::string_view kBuiltinPrefix = "builtin:";

Scenario load(const std::string& source) {
  if (source.rfind(kBuiltinPrefix, 0) == 0) return builtin_scenario(source.substr(kBuiltinPrefix.size()));
  return load_scenario(source);
}

int write(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(output);
  if (!out || !(out << text)) {
    std::cerr << "error: cannot write '" << output << "'\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normal deformations of G-structures: scenario checks and reports"};
  app.require_subcommand(1);

  std::optional<double> tolerance;
  std::optional<int> grid;
  std::string format = "json";
  std::string output;
  app.add_option("--tol", tolerance, "Tolerance override for every check")->check(CLI::NonNegativeNumber);
  app.add_option("--grid", grid, "Grid points per axis")->check(CLI::Range(2, 64));
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--output", output, "Write the report here instead of stdout");

  std::string file;
  struct Command {
    const char* name;
    const char* help;
    std::optional<std::vector<CheckKind>> checks;
  };
  const std::vector<Command> commands = {
      {"check", "Run every check the scenario requests", std::nullopt},
      {"deform", "Admissibility and the deformed connection", std::vector{CheckKind::Deform}},
      {"zeta", "Admissibility and the obstruction form", std::vector{CheckKind::Zeta}},
      {"torsion", "Intrinsic torsion and its change", std::vector{CheckKind::Torsion, CheckKind::TorsionChange}},
      {"instanton", "Instanton bundle preservation and verdicts",
       std::vector{CheckKind::Deform, CheckKind::Phi, CheckKind::Instanton}},
  };
  std::vector<CLI::App*> runners;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("file", file, "Scenario file, or builtin:<name>")->required();
    sub->fallthrough();
    runners.push_back(sub);
  }
  std::string entry;
  CLI::App* catalog = app.add_subcommand("catalog", "List builtin scenarios or print one as JSON");
  catalog->add_option("name", entry, "Catalog entry");
  catalog->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (catalog->parsed()) {
      if (entry.empty()) {
        std::string list;
        for (const auto& name : builtin_names()) list += name + "\n";
        return write(list, output);
      }
      return write(scenario_to_json(builtin_scenario(entry)).dump(2) + "\n", output);
    }
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (!runners[i]->parsed()) continue;
      RunOptions options{tolerance, grid, commands[i].checks};
      Report report = run_scenario(load(file), options);
      if (const int code = write(emit_report(report, format), output); code != 0) return code;
      return exit_code(report);
    }
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
