#pragma once

#include <string>

#include "mdr/instance.hpp"

namespace mdr {

// Line-oriented instance format, `#` starts a comment:
//
//   N 2
//   L 2
//   Kx
//   1.0 0.2
//   0.2 1.0
//   D 1
//   ...
//   D 2
//   ...
//   D0
//   ...
//
// Matrices are row-major; line breaks inside a matrix are free-form.
// Returns a validated instance; syntax errors carry the line number.
MDInstance parse_instance(const std::string& text);

// Reads the file and parses it; errors mention the path.
MDInstance load_instance(const std::string& path);

// Emits the grammar above with round-trip precision (17 significant digits).
std::string format_instance(const MDInstance& inst);

} // namespace mdr
