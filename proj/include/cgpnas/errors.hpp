#pragma once

#include <stdexcept>
#include <string>

namespace cgpnas {

// Base of every error the engine raises on purpose. `kind()` is the short,
// machine-parsable class the CLI prints before the message.
class Error : public std::runtime_error {
 public:
  Error(const char* kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  const char* kind() const noexcept { return kind_; }

 private:
  const char* kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

struct CodecError : Error {
  explicit CodecError(const std::string& what) : Error("codec", what) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error("schema", what) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct EvaluatorError : Error {
  explicit EvaluatorError(const std::string& what) : Error("evaluator", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};

struct InternalError : Error {
  explicit InternalError(const std::string& what) : Error("internal", what) {}
};

}  // namespace cgpnas
