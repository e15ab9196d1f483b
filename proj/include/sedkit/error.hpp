/* Copyright 2026 The sedkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEDKIT_ERROR_HPP_
#define SEDKIT_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sedkit {

// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or matrix shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An argument is outside its legal range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input data (audio, features) cannot be used as given.
class InputError : public Error {
 public:
  using Error::Error;
};

// A text or binary file is malformed. line() is 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A scene or event name is not in the vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

// Required data is missing or empty.
class DataError : public Error {
 public:
  using Error::Error;
};

// A configuration document is invalid.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what), issues_{what} {}
  explicit ConfigError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& i : issues) out += "\n  - " + i;
    return out;
  }

  std::vector<std::string> issues_;
};

}  // namespace sedkit

#endif  // SEDKIT_ERROR_HPP_
