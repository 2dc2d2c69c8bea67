#pragma once

#include <stdexcept>
#include <string>

namespace raekit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/network dimension disagreement.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed input files (CSV, model containers, archives).
struct ParseError : Error {
  using Error::Error;
};

// Unusable data (all-missing channel, single-class training set, ...).
struct DataError : Error {
  using Error::Error;
};

// Invalid experiment configuration (unlisted label, empty gray list, ...).
struct ConfigError : Error {
  using Error::Error;
};

struct TrainingError : Error {
  TrainingError(const std::string& what, int epoch) : Error(what), epoch(epoch) {}
  int epoch;
};

struct IoError : Error {
  using Error::Error;
};

// Mediator wire-protocol violations.
struct ProtocolError : Error {
  using Error::Error;
};

struct IncompleteFrameError : ProtocolError {
  using ProtocolError::ProtocolError;
};

}  // namespace raekit
