#pragma once

#include <stdexcept>
#include <string>

namespace lbcon {

// Malformed arguments: shape mismatches, non-finite entries, out-of-range
// parameters.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// U_o does not put the system into observable block form.
class DecompositionInvalid : public std::runtime_error {
 public:
  DecompositionInvalid(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// R_x / R_z / M unusable (singular, not SPD, nonpositive budget).
class InvalidCertificate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A topology set violates the requested connectivity mode.
class ModeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Analysis requested on an object for which it has no meaning, e.g.
// detectability of an irregular pencil or the oracle on a disconnected graph.
class AnalysisUndefined : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// (E_cl - dt A_cl) singular for the requested step size.
class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output file or directory could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario file problem; what() starts with the offending field path.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace lbcon
