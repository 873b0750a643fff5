#pragma once

#include <stdexcept>
#include <string>

namespace critwave {

// Error taxonomy shared by all modules. Every failure mode carries the name
// it is documented under in the public API.

struct MissingPotential : std::runtime_error {
  explicit MissingPotential(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownName : std::runtime_error {
  explicit UnknownName(const std::string& what) : std::runtime_error(what) {}
};

struct ContractionFailure : std::runtime_error {
  explicit ContractionFailure(const std::string& what) : std::runtime_error(what) {}
};

struct StiffnessFailure : std::runtime_error {
  explicit StiffnessFailure(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyZ : std::runtime_error {
  explicit EmptyZ(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateProfile : std::runtime_error {
  explicit DegenerateProfile(const std::string& what) : std::runtime_error(what) {}
};

struct DomainTooSmall : std::runtime_error {
  explicit DomainTooSmall(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteState : std::runtime_error {
  explicit NonFiniteState(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientWindow : std::runtime_error {
  explicit InsufficientWindow(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientSnapshots : std::runtime_error {
  explicit InsufficientSnapshots(const std::string& what) : std::runtime_error(what) {}
};

struct NonpositiveEnergy : std::runtime_error {
  explicit NonpositiveEnergy(const std::string& what) : std::runtime_error(what) {}
};

// Configuration problems carry the offending field path.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& what)
      : std::runtime_error("config field '" + field_ + "': " + what), field(std::move(field_)) {}
};

}  // namespace critwave
