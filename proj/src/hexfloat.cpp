#include "pasta/hexfloat.hpp"

#include <charconv>
#include <system_error>

#include <fmt/format.h>

#include "pasta/error.hpp"

namespace pasta {

std::string format_hex(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

double parse_hex(std::string_view s, std::string_view what) {
  double v = 0.0;
  bool negative = !s.empty() && s.front() == '-';
  std::string_view body = negative ? s.substr(1) : s;
  if (body == "inf" || body == "nan") {
    throw IoError(fmt::format("{} contains non-finite value '{}'", what, s));
  }
  auto res = std::from_chars(body.data(), body.data() + body.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != body.data() + body.size()) {
    throw IoError(fmt::format("malformed {} value '{}'", what, s));
  }
  return negative ? -v : v;
}

}  // namespace pasta
