#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "delopt/errors.hpp"
#include "delopt/harness.hpp"
#include "delopt/optimistic.hpp"

namespace {

int cmd_run(const std::string& path, const std::string& out_dir, const std::string& format,
            bool seed_given, std::uint64_t seed) {
  delopt::Scenario scenario = delopt::parse_scenario_file(path);
  if (seed_given) scenario.seed = seed;
  const delopt::RunReport report = delopt::run_scenario(scenario);
  std::string artifact;
  std::string extension;
  if (format == "csv") {
    artifact = delopt::emit_csv(report);
    extension = ".csv";
  } else if (format == "plotdata") {
    artifact = delopt::emit_plotdata(report);
    extension = ".plotdata.txt";
  } else {
    artifact = delopt::emit_summary(report);
    extension = ".summary.txt";
  }
  if (out_dir.empty()) {
    std::cout << artifact;
  } else {
    const std::string out_path = out_dir + "/" + report.scenario_name + extension;
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw delopt::ConfigError("cannot write '" + out_path + "'");
    out << artifact;
    std::cout << delopt::emit_summary(report);
    std::cout << "wrote " << out_path << "\n";
  }
  return report.all_bounds_hold ? 0 : 1;
}

int cmd_suite(const std::string& name) {
  const delopt::SuiteReport report = delopt::run_suite(name);
  for (const delopt::SuiteCheck& check : report.checks) {
    std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.label;
    if (!check.detail.empty()) std::cout << " — " << check.detail;
    std::cout << "\n";
  }
  std::cout << report.name << ": "
            << (report.passed ? "all checks passed" : "FAILED") << "\n";
  return report.passed ? 0 : 1;
}

int cmd_validate(const std::string& path) {
  const delopt::Scenario scenario = delopt::parse_scenario_file(path);
  delopt::validate_scenario(scenario);
  std::cout << "OK: " << scenario.name << "\n";
  return 0;
}

int cmd_export(const std::string& kind, int m, int len, int tau, bool preset, int base_len,
               const std::string& out_path) {
  delopt::LossSequence seq = [&] {
    if (kind == "periods") return delopt::gen_lb_seq_periods(m, len, tau);
    if (kind == "zero_one") {
      return delopt::gen_lb_seq_zero_one(m, preset ? delopt::lb_preset_len(m, tau) : len, tau);
    }
    std::vector<delopt::Loss> base;
    for (int t = 1; t <= base_len; ++t) {
      base.push_back(delopt::Loss::linear(delopt::Vec{t % 2 == 1 ? -1.0 : 1.0}));
    }
    return delopt::gen_repeat_seq(delopt::LossSequence(std::move(base), 1.0), tau);
  }();
  const std::string rows = seq.to_gradient_rows();
  if (out_path.empty()) {
    std::cout << rows;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw delopt::ConfigError("cannot write '" + out_path + "'");
    out << rows;
    std::cout << "wrote " << out_path << " (" << seq.horizon() << " rows)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic delayed-feedback online optimization simulator"};
  app.require_subcommand(1);

  std::string run_path, out_dir, format = "summary";
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "run one scenario file and emit a report");
  run_cmd->add_option("file", run_path, "scenario file")->required();
  run_cmd->add_option("--out", out_dir, "directory for the emitted artifact");
  run_cmd->add_option("--format", format, "csv | plotdata | summary")
      ->check(CLI::IsMember({"csv", "plotdata", "summary"}));
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the scenario seed");

  std::string suite_name;
  auto* suite_cmd = app.add_subcommand("suite", "run a predefined experiment grid");
  suite_cmd->add_option("name", suite_name, "cor2_regimes | optimistic_separation | network_bounds | adaptive_lemma")
      ->required();

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "parse and materialize a scenario file");
  validate_cmd->add_option("file", validate_path, "scenario file")->required();

  std::string export_kind, export_out;
  int export_m = 2, export_len = 12, export_tau = 1, export_base = 64;
  bool export_preset = false;
  auto* export_cmd =
      app.add_subcommand("export-seq", "write an adversarial gradient sequence as trace rows");
  export_cmd->add_option("kind", export_kind, "periods | zero_one | repeat_alternating")
      ->required()
      ->check(CLI::IsMember({"periods", "zero_one", "repeat_alternating"}));
  export_cmd->add_option("--m", export_m, "block-pair count");
  export_cmd->add_option("--len", export_len, "block length");
  export_cmd->add_option("--tau", export_tau, "delay the sequence targets");
  export_cmd->add_flag("--preset", export_preset, "zero_one: use the scale-separating length");
  export_cmd->add_option("--base-len", export_base, "repeat_alternating: base length");
  export_cmd->add_option("--out", export_out, "output file (stdout when absent)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(run_path, out_dir, format, seed_opt->count() > 0, seed);
    }
    if (suite_cmd->parsed()) return cmd_suite(suite_name);
    if (validate_cmd->parsed()) return cmd_validate(validate_path);
    if (export_cmd->parsed()) {
      return cmd_export(export_kind, export_m, export_len, export_tau, export_preset, export_base,
                        export_out);
    }
  } catch (const delopt::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const delopt::ValidationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
