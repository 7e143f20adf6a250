#pragma once

#include <stdexcept>
#include <string>

namespace avkit {

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid user configuration (feature config, DRO config, train config...).
class ConfigError : public Error {
public:
  using Error::Error;
};

enum class CorpusErrorKind {
  MissingFile,
  DuplicateId,
  EmptyText,
  MissingAuthor,
  BadManifest,
  UnbalancedQuote,
  InvalidUtf8,
  AnnotationMismatch,
  UnknownTag,
};

class CorpusError : public Error {
public:
  CorpusError(CorpusErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}

  CorpusErrorKind kind() const noexcept { return kind_; }

private:
  CorpusErrorKind kind_;
};

// Raised when an experiment cannot run on the given data (e.g. no disputed text).
class ExperimentError : public Error {
public:
  using Error::Error;
};

} // namespace avkit
