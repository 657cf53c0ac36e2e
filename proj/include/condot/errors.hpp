#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace condot {

enum class Errc {
  NotSPD,
  TooFewSamples,
  ShapeMismatch,
  UnsupportedPrimitive,
  NestingTooDeep,
  MissingMoments,
  AnchorDimMismatch,
  UnknownLabel,
  TooFewLabels,
  LengthMismatch,
  EmptySet,
  NotConverged,
  TooLarge,
  ConfigError,
  NonFiniteLoss,
  TooManyCombos,
  NotActionTask,
  RankDeficient,
  ManifestError,
  IoError,
  InvalidArgument,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace condot
