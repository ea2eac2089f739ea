#include "report_json.hpp"

#include <cmath>
#include <cstdio>

namespace qsdlab::detail {

namespace {

void write(const nlohmann::json& node, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (node.type()) {
    case nlohmann::json::value_t::object: {
      if (node.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = node.begin(); it != node.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(it.key()).dump() + ": ";
        write(it.value(), out, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (node.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : node) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        write(item, out, depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_double(node.get<double>());
      return;
    default:
      out += node.dump();
  }
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string dump_report(const nlohmann::json& doc) {
  std::string out;
  write(doc, out, 0);
  out += "\n";
  return out;
}

}  // namespace qsdlab::detail
