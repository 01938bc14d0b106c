#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vibronic_td {

/// Violated precondition: index out of range, wrong space shape, bad parameter.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fock truncation too small for the requested state or operator.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, int suggested_n_max)
      : std::runtime_error(what), suggested_n_max_(suggested_n_max) {}
  int suggested_n_max() const noexcept { return suggested_n_max_; }

 private:
  int suggested_n_max_;
};

/// Integrator or linear-solver failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Installs a process-wide sink for non-fatal diagnostics and returns the
/// previous one. The default handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace vibronic_td
