#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace emkit {

enum class ErrorKind {
  constraint_violation,
  numerical_failure,
  impossible_data,
  mendelian_violation,
  degenerate_input,
  monotonicity_violation,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Error raised by estimators and the EM driver. When the failure happened
// inside an EM run, iteration() names the iteration whose evaluation failed
// (0 = the initial point).
class EmError : public std::runtime_error {
 public:
  EmError(ErrorKind kind, const std::string& message,
          std::optional<std::size_t> iteration = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> iteration() const noexcept { return iteration_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> iteration_;
};

}  // namespace emkit
