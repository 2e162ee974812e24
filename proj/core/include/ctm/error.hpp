#pragma once

#include <stdexcept>
#include <string>

namespace ctm {

/// Base exception for all library failures (bad input, I/O, degenerate data).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ctm
