// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace sqlimc {

struct Fixture {
  std::string name;     // e.g. "joomla"
  std::string filename; // e.g. "joomla.sqlf"
  std::string text;
};

// The models bundled with the tool, embedded at build time.
const std::vector<Fixture>& bundled_fixtures();

const Fixture* find_fixture(const std::string& name);

} // namespace sqlimc
