#pragma once

#include <stdexcept>
#include <string>

namespace grn {

/// Base of every error thrown by the library. `kind()` lets the CLI map
/// failures onto exit codes without catching each subtype.
class Error : public std::runtime_error {
 public:
  enum class Kind { Config, Data, Checkpoint, Contract, Dimension, InvalidMask, DegenerateInput };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(Kind::Config, "config error: " + what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(Kind::Data, "data error: " + what) {}
};

struct CheckpointError : Error {
  explicit CheckpointError(const std::string& what)
      : Error(Kind::Checkpoint, "checkpoint error: " + what) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& what)
      : Error(Kind::Contract, "contract error: " + what) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what)
      : Error(Kind::Dimension, "dimension error: " + what) {}
};

struct InvalidMaskError : Error {
  explicit InvalidMaskError(const std::string& what)
      : Error(Kind::InvalidMask, "invalid mask: " + what) {}
};

struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& what)
      : Error(Kind::DegenerateInput, "degenerate input: " + what) {}
};

}  // namespace grn
