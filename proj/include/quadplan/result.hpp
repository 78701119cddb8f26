#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace quadplan {

enum class ErrorCode {
  invalid_input,       // caller-visible validation failure (bad scenario, bad state)
  sampling_exhausted,  // rejection sampling hit its attempt cap
  planning_failure,    // tree could not connect start and target
  infeasible,          // a physical demand cannot be met (e.g. negative rotor force)
  singular,            // degenerate numerics: rank-deficient constraints, free fall, gimbal lock
  mission_failure,     // scenario aborted mid-flight
};

struct Error {
  ErrorCode code{ErrorCode::invalid_input};
  std::string message;
};

/// Value-or-error return used for failures that are part of normal operation
/// (planning can fail, a rotor demand can be infeasible). Contract violations
/// such as negative margins throw std::invalid_argument instead.
template <typename T>
class Result {
 public:
  Result(T value) : data_(std::move(value)) {}
  Result(Error err) : data_(std::move(err)) {}

  bool has_value() const { return std::holds_alternative<T>(data_); }
  explicit operator bool() const { return has_value(); }

  const T& value() const& {
    if (!has_value()) throw std::logic_error("Result::value on error: " + error().message);
    return std::get<T>(data_);
  }
  T& value() & {
    if (!has_value()) throw std::logic_error("Result::value on error: " + error().message);
    return std::get<T>(data_);
  }
  T&& value() && {
    if (!has_value()) throw std::logic_error("Result::value on error: " + error().message);
    return std::get<T>(std::move(data_));
  }

  const Error& error() const {
    if (has_value()) throw std::logic_error("Result::error on value");
    return std::get<Error>(data_);
  }

 private:
  std::variant<T, Error> data_;
};

using Status = Result<std::monostate>;

inline Status ok() { return Status(std::monostate{}); }

}  // namespace quadplan
