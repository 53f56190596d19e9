#pragma once

#include <stdexcept>
#include <string>

namespace ftgcl {

// Error taxonomy shared by every module. All derive from std::runtime_error so
// callers that do not care about the category can catch one type.

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace detail

}  // namespace ftgcl
