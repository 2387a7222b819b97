#pragma once

#include <ostream>

#include <json.hpp>

namespace stiefelcd::cli {

/// Compact JSON with keys sorted and doubles printed with 17 significant
/// digits, so equal reports are equal byte for byte.
void write_json(std::ostream& out, const nlohmann::json& value);

}  // namespace stiefelcd::cli
