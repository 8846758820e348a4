// Copyright 2026 The Decontext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DECONTEXT_ERRORS_HPP_
#define DECONTEXT_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace decontext {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSentence : public Error {
 public:
  using Error::Error;
};

class UnbalancedBrackets : public Error {
 public:
  using Error::Error;
};

// Backend failures. Only TransportError is retryable.
class GatewayError : public Error {
 public:
  using Error::Error;
};

class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class AuthError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class MockMiss : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class UnparseableBoolean : public Error {
 public:
  using Error::Error;
};

class UnparseableRating : public Error {
 public:
  using Error::Error;
};

class InsufficientPool : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class MisalignedAnnotations : public Error {
 public:
  using Error::Error;
};

class AmbiguousDiff : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace decontext

#endif  // DECONTEXT_ERRORS_HPP_
