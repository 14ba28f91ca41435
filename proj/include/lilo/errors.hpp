#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lilo {

/// Base for every error raised by the library. `kind()` is a stable short
/// identifier used in HTTP error bodies and CLI diagnostics.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept = 0;
};

#define LILO_DEFINE_ERROR(Name, Kind)                       \
  class Name : public Error {                               \
   public:                                                  \
    using Error::Error;                                     \
    const char* kind() const noexcept override { return Kind; } \
  };

LILO_DEFINE_ERROR(InputError, "input")
LILO_DEFINE_ERROR(NumericalError, "numerical")
LILO_DEFINE_ERROR(ConfigError, "config")
LILO_DEFINE_ERROR(TemplateError, "template")
LILO_DEFINE_ERROR(BackendError, "backend")
LILO_DEFINE_ERROR(NotFoundError, "not_found")
LILO_DEFINE_ERROR(ConflictError, "conflict")

#undef LILO_DEFINE_ERROR

/// Structured-output parse failure. Carries every raw completion that was
/// tried so the caller can log or surface them.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::vector<std::string> transcripts = {})
      : Error(what), transcripts_(std::move(transcripts)) {}
  const char* kind() const noexcept override { return "parse"; }
  const std::vector<std::string>& transcripts() const noexcept { return transcripts_; }

 private:
  std::vector<std::string> transcripts_;
};

}  // namespace lilo
