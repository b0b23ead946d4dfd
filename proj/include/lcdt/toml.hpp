#pragma once

#include <string>

#include <json.hpp>

namespace lcdt {

// Minimal TOML subset reader covering what the preset configs use: comments,
// top-level key/value pairs, [tables], [[arrays of tables]], strings,
// integers, floats, booleans and flat arrays. Parsed into JSON for easy
// consumption. Throws std::runtime_error with a line number on syntax it
// does not understand.
nlohmann::json parse_toml(const std::string& text);
nlohmann::json parse_toml_file(const std::string& path);

}  // namespace lcdt
