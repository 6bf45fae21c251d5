#pragma once

#include <string>
#include <string_view>

namespace pasta {

// Exact text round trip for doubles. parse_hex throws IoError naming `what`
// on malformed or non-finite input.
std::string format_hex(double v);
double parse_hex(std::string_view s, std::string_view what);

}  // namespace pasta
