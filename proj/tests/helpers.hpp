// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace testutil {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string fixture_path(const std::string& name) {
  return std::string(SQLIMC_FIXTURE_DIR) + "/" + name;
}

inline std::string fixture_text(const std::string& name) {
  return read_file(fixture_path(name));
}

} // namespace testutil
