#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace gwkit {

inline constexpr const char* tool_name = "gwkit";
inline constexpr const char* tool_version = "1.0.0";

// Versions of the libraries compiled into the tool, keyed by name.
nlohmann::ordered_json library_versions();

}  // namespace gwkit
