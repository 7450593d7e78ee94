// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "CLI11.hpp"
#include "sqlimc/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"model checker for SQL-injection attacks on web-app models"};
  app.require_subcommand(1);

  sqlimc::CliConfig config;
  std::string indb_mode = "strict";

  CLI::App* analyze = app.add_subcommand(
      "analyze", "search a model for attack traces and report them");
  analyze->add_option("--spec", config.spec_path,
                      "model file (.sqlf), or fixture:<name>")
      ->required();
  analyze->add_option("--depth", config.max_depth,
                      "bound on message exchanges (default 16)");
  analyze->add_option("--format", config.format, "msc | structured")
      ->check(CLI::IsMember({"msc", "structured"}));
  analyze->add_flag("--emit-ts", config.emit_ts,
                    "dump the compiled transition system first");
  analyze->add_flag("--interactive,-i", config.interactive,
                    "ask for URLs and emit concretization commands");
  analyze->add_flag("--non-interactive", config.non_interactive,
                    "concretize from --url/--post flags instead of questions");
  analyze->add_option("--url", config.urls,
                      "<injected-step>=<url>, repeatable (non-interactive)");
  analyze->add_option("--post", config.post,
                      "POST parameters as key=value&key=value");
  analyze->add_option("--budget", config.node_budget,
                      "search node budget (default 1000000)");
  analyze->add_option("--indb-mode", indb_mode,
                      "query validity: strict (trailing payload) | loose")
      ->check(CLI::IsMember({"strict", "loose"}));

  int verify_depth = 3;
  CLI::App* verify = app.add_subcommand(
      "verify-db", "check the builtin database against its expected behaviour");
  verify->add_option("--depth", verify_depth, "query enumeration depth (default 3)");

  CLI::App* fixtures = app.add_subcommand("fixtures", "bundled example models");
  CLI::App* fixtures_list =
      fixtures->add_subcommand("list", "list the bundled models");
  fixtures->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  config.indb_loose = indb_mode == "loose";

  if (*analyze)
    return sqlimc::run_pipeline(config, std::cin, std::cout, std::cerr);
  if (*verify) return sqlimc::run_verify_db(verify_depth, std::cout, std::cerr);
  if (*fixtures_list) return sqlimc::run_fixtures_list(std::cout);
  return 2;
}
