// diffwave <command> --config <path> [key=value ...]

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffwave/cli.hpp"
#include "diffwave/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-wave laboratory for the low Mach heat-conductive gas"};
  app.set_help_all_flag("--help-all");
  std::string command, config_path;
  std::vector<std::string> overrides;
  app.add_option("command", command, "profile | simulate | sweep | verify | report")->required();
  app.add_option("--config,-c", config_path, "JSON config file (defaults apply when omitted)");
  app.add_option("overrides", overrides, "dotted key=value overrides, e.g. solver.cfl=0.4");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  diffwave::RunConfig config;
  try {
    const auto cmd = diffwave::command_from_string(command);
    config = config_path.empty() ? diffwave::parse_config("{}", overrides, cmd)
                                 : diffwave::load_config(config_path, overrides, cmd);
  } catch (const diffwave::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const diffwave::ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return diffwave::dispatch(config, std::cerr);
}
