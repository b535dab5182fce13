#pragma once

#include <stdexcept>
#include <string>

namespace vgf {

struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientJetOrder : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepSizeUnderflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InterfaceMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PathOutOfDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReferenceDomainExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RiccatiBlowup : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vgf
