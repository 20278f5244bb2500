#pragma once

#include <stdexcept>
#include <string>

namespace graphtext {

/// Base class for all toolkit errors. Subclasses map onto CLI exit codes:
/// usage/argument -> 2, data/format -> 3, provider/transport -> 4,
/// numerical/training -> 5.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or unusable flag combination (exit 2).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or on-disk artifact (exit 3).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// No tokens survive vocabulary construction (exit 3).
class EmptyGraphError : public Error {
 public:
  using Error::Error;
};

/// Artifacts built against different vocabularies (exit 3).
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Missing or rejected provider credential (exit 4).
class CredentialError : public Error {
 public:
  using Error::Error;
};

/// Provider unreachable after retries (exit 4).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Provider responded but not in the expected shape (exit 4).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Non-finite weights or other invalid numerical state (exit 5).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Training failed to make progress (divergence) (exit 5).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Exit code for an exception per the CLI contract.
int exit_code_for(const std::exception& e);

}  // namespace graphtext
