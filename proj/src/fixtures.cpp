// SPDX-License-Identifier: Apache-2.0

#include "sqlimc/fixtures.hpp"

namespace sqlimc {

const Fixture* find_fixture(const std::string& name) {
  for (const auto& f : bundled_fixtures())
    if (f.name == name) return &f;
  return nullptr;
}

} // namespace sqlimc
