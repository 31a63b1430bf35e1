#pragma once

#include <stdexcept>
#include <string>

namespace delopt {

// Scenario or run configuration is structurally valid but unusable
// (incompatible algorithm/geometry, missing rate parameters, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Input data violates a format or consistency requirement (bad trace rows,
// generator parameters out of range, malformed scenario files, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A message or record lacks data that the consuming component requires
// (missing relay metadata and the like).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace delopt
