#pragma once

#include <stdexcept>
#include <string>

namespace tabla {

// All recoverable failures (bad files, bad config, dimension mismatches)
// are reported through this type; the CLI turns it into exit code 1.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tabla
