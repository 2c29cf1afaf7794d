#pragma once

#include <stdexcept>
#include <string>

namespace vesicle {

enum class ErrorKind {
  InvalidBandLimit,
  ShapeError,
  InvalidParameter,
  ShapeOutOfTubularNeighborhood,
  StepTooLarge,
  CompatibilityError,
  SolverDegenerate,
  NotInTangentSpace,
  DegenerateConstraints,
  BlowUpDetected,
  ParseError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vesicle
