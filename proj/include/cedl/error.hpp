#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cedl {

enum class ErrorKind {
  Dimension,
  Input,
  Spec,
  Cache,
  Label,
  EmptyBatch,
  DegenerateSplit,
  Shape,
  Gradient,
  Evaluation,
  Format,
  Integrity,
  InsufficientData,
  Capacity,
  UndefinedMetric,
  Divergence,
  Protocol,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (and tests)
/// can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
        kind_(kind),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace cedl
