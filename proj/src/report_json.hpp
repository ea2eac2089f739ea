#pragma once

#include <json.hpp>

#include <string>

namespace qsdlab::detail {

// Deterministic rendering: keys sorted (nlohmann's default map), doubles as
// %.17g, non-finite doubles as null, two-space indentation.
std::string dump_report(const nlohmann::json& doc);

// One double in the same format, for TSV side-files.
std::string format_double(double x);

}  // namespace qsdlab::detail
