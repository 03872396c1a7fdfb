// panfuse: simulate | sharpen | evaluate, each driven by one JSON config.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "panfuse/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = panfuse::cli;

  CLI::App app{"Hyperspectral pan-sharpening with level-line and TV priors"};
  app.require_subcommand(1);

  std::string config;
  std::string out = ".";
  bool quiet = false;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (default: current directory)");
    return sub;
  };
  auto* simulate = add("simulate", "Degrade a reference cube into a (hyperspectral, panchromatic) pair");
  auto* sharpen = add("sharpen", "Fuse a hyperspectral cube with a panchromatic image");
  sharpen->add_flag("--quiet", quiet, "Do not print per-iteration progress");
  auto* evaluate = add("evaluate", "Compute quality metrics of a fused cube");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::config_error;
  }

  return cli::guarded(
      [&] {
        if (simulate->parsed()) {
          const auto o = cli::cmd_simulate(config, out);
          std::cout << "wrote " << o.x.string() << ", " << o.p.string() << ", "
                    << o.reference.string() << ", " << o.manifest.string() << '\n';
        } else if (sharpen->parsed()) {
          const auto o = cli::cmd_sharpen(config, out, quiet ? nullptr : &std::cerr);
          std::cout << "wrote " << o.u.string() << " and " << o.log.string() << " after "
                    << o.report.iterations << " iterations\n";
        } else if (evaluate->parsed()) {
          const auto o = cli::cmd_evaluate(config, out);
          std::cout << o.report.to_text();
        }
      },
      std::cerr);
}
