#pragma once

#include <stdexcept>
#include <string>

namespace fbmq {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Circulant embedding produced an eigenvalue below the clipping tolerance.
struct EmbeddingFailure : Error {
  using Error::Error;
};

struct SizeExceeded : Error {
  using Error::Error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct InsufficientPoints : Error {
  using Error::Error;
};

struct HypothesisViolation : Error {
  using Error::Error;
};

// Invalid user configuration; `key` names the offending parameter.
struct ConfigError : Error {
  ConfigError(std::string k, const std::string& what)
      : Error("--" + k + ": " + what), key(std::move(k)) {}
  std::string key;
};

}  // namespace fbmq
