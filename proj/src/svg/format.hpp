#pragma once

#include "vecfit/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <functional>
#include <string>
#include <string_view>

namespace vecfit::detail {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);
/// Rounded to `decimals` places, trailing zeros trimmed.
std::string format_fixed(double v, int decimals);
std::string xml_escape(std::string_view s);
/// `d` attribute text for closed cubic loops ("M x y C ... Z" per subpath).
std::string path_data(const std::vector<Subpath>& subpaths,
                      const std::function<std::string(double)>& number);
std::string fill_attribute(const Rgb& color);

}  // namespace vecfit::detail
