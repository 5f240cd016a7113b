#pragma once

#include <json.hpp>

#include <string>

namespace ivkit {

/// Serializes with every floating-point number printed to 17 significant
/// digits. Infinities become the strings "inf" / "-inf" and NaN becomes null.
std::string dump_json(const nlohmann::json& j, int indent = 2);

/// A JSON value for a real number following the same infinity/NaN rules.
nlohmann::json json_number(double v);

}  // namespace ivkit
