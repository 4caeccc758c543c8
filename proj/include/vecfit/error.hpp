#pragma once

#include <stdexcept>
#include <string>

namespace vecfit {

/// Base class for every domain error raised by the library. `kind()` is a
/// stable machine-readable tag (used by the CLI's `--json-errors` output).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define VECFIT_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

VECFIT_DEFINE_ERROR(UnsupportedFeature)
VECFIT_DEFINE_ERROR(MalformedPath)
VECFIT_DEFINE_ERROR(MalformedDocument)
VECFIT_DEFINE_ERROR(MissingAssignment)
VECFIT_DEFINE_ERROR(DimensionMismatch)
VECFIT_DEFINE_ERROR(DegenerateProjection)
VECFIT_DEFINE_ERROR(NonFiniteGradient)
VECFIT_DEFINE_ERROR(ConfigError)
VECFIT_DEFINE_ERROR(PaletteRequired)
VECFIT_DEFINE_ERROR(IoError)

#undef VECFIT_DEFINE_ERROR

}  // namespace vecfit
