#pragma once

#include <stdexcept>
#include <string>

namespace coxperc {

enum class ErrorKind {
  kParameter,
  kRejectedInput,
  kOutOfWindow,
  kDegenerateInput,
  kUnsupportedDimension,
  kUnsupportedDiagnostic,
  kContractViolation,
  kUndefinedEstimate,
  kConfig,
};

const char* ToString(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ToString(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace coxperc
