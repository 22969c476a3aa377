#pragma once

#include <stdexcept>
#include <string>

namespace srbench {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scenario document violates the canonical schema. `path()` is the JSON
/// path of the offending element, e.g. "timesteps[1].npcs".
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnknownParameter : public Error {
 public:
  explicit UnknownParameter(const std::string& name)
      : Error("unknown mutation parameter '" + name + "' (expected position, rotation or velocity)") {}
};

class MissingDescription : public Error {
 public:
  using Error::Error;
};

/// 401/403 from a provider. Never retried.
class AuthError : public Error {
 public:
  using Error::Error;
};

class FixtureError : public Error {
 public:
  using Error::Error;
};

class MixedVariant : public Error {
 public:
  using Error::Error;
};

class NoValidVotes : public Error {
 public:
  using Error::Error;
};

}  // namespace srbench
