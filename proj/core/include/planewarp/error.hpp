#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace planewarp {

enum class Errc {
  // Input errors.
  EmptyRegion,
  InvalidCount,
  TooManyClusters,
  NoValidPixels,
  ParseError,
  BadRotation,
  UnsupportedFormat,
  InvalidArgument,
  Io,
  // Numerical failures.
  DegeneratePlane,
  DegenerateHomography,
  ZeroNormal,
  NonFinite,
  DegenerateScene,
  AllOutside,
};

std::string_view to_string(Errc code) noexcept;

/// True for failures caused by the numbers rather than by malformed input.
bool is_numerical(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace planewarp
