#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace stiefelcd::cli {

namespace {

void write_value(std::ostream& out, const nlohmann::json& v, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      // nlohmann::json objects iterate in key order.
      out << "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << pad << nlohmann::json(it.key()).dump() << ": ";
        write_value(out, it.value(), depth + 1);
      }
      out << '\n' << close << '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : v) flat = flat && !e.is_structured();
      if (v.empty()) {
        out << "[]";
        return;
      }
      out << '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out << (flat ? ", " : ",");
        first = false;
        if (!flat) out << '\n' << pad;
        write_value(out, e, depth + 1);
      }
      if (!flat) out << '\n' << close;
      out << ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        out << "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      std::string s(buf);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out << s;
      return;
    }
    default:
      out << v.dump();
  }
}

}  // namespace

void write_json(std::ostream& out, const nlohmann::json& value) {
  write_value(out, value, 0);
  out << '\n';
}

}  // namespace stiefelcd::cli
