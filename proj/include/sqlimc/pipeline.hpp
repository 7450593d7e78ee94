// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sqlimc {

struct CliConfig {
  std::string spec_path;        // file path, or fixture:<name>
  int max_depth = 16;
  std::string format = "msc";   // msc | structured
  bool emit_ts = false;
  bool interactive = false;
  bool non_interactive = false; // concretization answers come from flags
  std::vector<std::string> urls; // "<injected-step-ordinal>=<url>"
  std::string post;
  long node_budget = 1000000;
  bool indb_loose = false;
};

// parse -> translate -> search -> report [-> concretize].
// Exit status: 0 no attack, 1 attack found, 2 error.
int run_pipeline(const CliConfig& config, std::istream& in, std::ostream& out,
                 std::ostream& err);

int run_verify_db(int depth, std::ostream& out, std::ostream& err);

int run_fixtures_list(std::ostream& out);

} // namespace sqlimc
