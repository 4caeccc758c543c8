#pragma once

#include "vecfit/svg.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(VECFIT_FIXTURES) + "/" + name; }

inline vecfit::SvgDocument load_fixture(const std::string& name) { return vecfit::load_svg(fixture(name)); }

inline std::string read_text(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// |a - b| <= rel * |b|, or |a - b| <= abs when |b| is tiny.
inline bool close(double a, double b, double rel, double abs, double tiny) {
  if (std::abs(b) <= tiny) return std::abs(a - b) <= abs;
  return std::abs(a - b) <= rel * std::abs(b);
}

}  // namespace testing
