/*
 * Copyright 2026 The occf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace occf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Raised when a precision matrix fails to factorize.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t vertex, double pivot)
      : Error(what), vertex_(vertex), pivot_(pivot) {}

  std::size_t vertex() const noexcept { return vertex_; }
  double smallest_pivot() const noexcept { return pivot_; }

 private:
  std::size_t vertex_;
  double pivot_;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace occf
