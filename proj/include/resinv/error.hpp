#pragma once

#include <stdexcept>
#include <string>

namespace resinv {

/// Invalid input: bad configuration, malformed files, dimension mismatches.
/// The CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside a numerical operation. Carries the module and operation
/// names so diagnostics can point at the failing stage. The CLI maps these to
/// exit code 2.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string module, std::string operation, const std::string& what)
      : std::runtime_error(module + "::" + operation + ": " + what),
        module_(std::move(module)),
        operation_(std::move(operation)),
        message_(what) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string module_;
  std::string operation_;
  std::string message_;
};

}  // namespace resinv
