#include <CLI11.hpp>

#include "fpbayes/cli/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Model-based finite population inference"};
  app.set_version_flag("--version", FPBAYES_VERSION);
  app.require_subcommand(1);

  fpbayes::cli::RunOptions opt;
  std::uint64_t seed = 0;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Generate a synthetic population and draw a sample from it"},
      {"fit", "Fit a model to a sample file"},
      {"assess", "Score posterior predictive draws (D, GRS, WAIC)"},
      {"replicate", "Repeat simulate + fit and tabulate bias, RMSE and coverage"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Random seed (overrides the config's seed key)");
    sub->add_option("--out", opt.out, "Result JSON path (default: stdout)");
    sub->add_flag("--allow-unconverged", opt.allow_unconverged, "Exit 0 even when chain diagnostics fail");
    sub->callback([&opt, &seed, sub, name = std::string(name)] {
      opt.command = name;
      if (sub->count("--seed") > 0) opt.seed = seed;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fpbayes::cli::kUsage;
  }
  return fpbayes::cli::run(opt);
}
