#pragma once

#include <stdexcept>
#include <string>

namespace selfrep {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed file, invariant violation, invalid argument or config.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An upstream artifact (file produced by an earlier pipeline stage) is absent.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// The trajectory generator cannot satisfy the maneuver on the given segment.
class InfeasibleManeuver : public Error {
 public:
  using Error::Error;
};

/// Numeric blow-up in the closed-loop simulation.
class SimulationDiverged : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace selfrep
