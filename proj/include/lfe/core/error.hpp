#pragma once

#include <stdexcept>
#include <string>

namespace lfe {

/// A precondition of an operation was violated (shape mismatch, bad extent,
/// non-scalar backward, ...). The message names the offending shapes.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration values or unknown keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or image codec failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or incompatible checkpoint container.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a NaN or infinite loss.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(long long step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

}  // namespace lfe
