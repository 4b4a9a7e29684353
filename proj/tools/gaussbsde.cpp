#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gaussbsde/config.hpp"
#include "gaussbsde/errors.hpp"
#include "gaussbsde/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-driven mean-field BSDE laboratory"};
  app.require_subcommand(1);

  std::string run_config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", run_config, "JSON config file")->required();
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides seed)");
  run->add_flag("--quiet", quiet, "print only the final status");

  std::string validate_config_path;
  auto* validate = app.add_subcommand("validate", "check a config file against the schema");
  validate->add_option("config", validate_config_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*validate) {
    try {
      const auto config = gaussbsde::load_config(validate_config_path);
      std::cout << "ok: " << gaussbsde::to_string(config.kind) << " config, digest "
                << gaussbsde::config_digest(config) << "\n";
      return 0;
    } catch (const gaussbsde::Error& e) {
      std::cerr << "error: " << gaussbsde::to_string(e.kind()) << ": " << e.what() << "\n";
      return 1;
    }
  }

  const std::optional<std::string> out = out_opt->count() ? std::optional<std::string>(out_dir) : std::nullopt;
  const std::optional<std::uint64_t> s = seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt;
  const auto result = gaussbsde::run_experiment(run_config, out, s, quiet ? nullptr : &std::cerr);
  if (result.exit_code == 1) {
    std::cerr << "error: " << result.error << "\n";
    return 1;
  }
  if (!quiet) {
    for (const auto& a : result.artifacts) {
      const char* verdict = a.report.report_only ? "INFO" : (a.report.pass ? "PASS" : "FAIL");
      std::cout << verdict << "  " << a.stem << "\n";
    }
  }
  std::cout << (result.exit_code == 0 ? "all checks passed" : "some checks failed") << "; manifest at "
            << result.out_dir << "/manifest.json\n";
  return result.exit_code;
}
