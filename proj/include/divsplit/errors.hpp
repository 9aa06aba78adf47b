#pragma once

#include <stdexcept>
#include <string>

namespace divsplit {

/// Base class for every error raised by the toolkit. The CLI maps these to
/// exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidToken : public Error {
 public:
  using Error::Error;
};

/// Input file lacks a required column or field, or is malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A class id or surface does not agree with the vocabulary.
class VocabError : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Removing an instance from a distribution that does not contain it.
class IncrementalError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

/// Split ids do not partition the corpus, or predictions name unknown ids.
class CoverageError : public Error {
 public:
  using Error::Error;
};

}  // namespace divsplit
