#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aoor {

enum class ErrorKind {
  kDimension,
  kAsymmetric,
  kNotHurwitz,
  kRankDeficient,
  kNotPositiveDefinite,
  kInconsistent,
  kNonConvergence,
  kDivergence,
  kConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto a named report entry.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace aoor
