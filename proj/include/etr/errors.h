// Copyright 2026 The ETR Authors.
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

#ifndef ETR_ERRORS_H_
#define ETR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace etr {

// Root of every error thrown by the library. The CLI maps each subclass to
// a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Bad arguments, malformed requests, dimension mismatches.
class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input"; }
};

// Malformed bundle file; carries the offending file and 1-based line
// (line 0 means the whole file).
class ValidationError : public InputError {
 public:
  ValidationError(std::string file, std::size_t line, const std::string& what)
      : InputError(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}
  const char* kind() const noexcept override { return "validation"; }
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

// Loss became non-finite during training.
class DivergenceError : public NumericError {
 public:
  DivergenceError(int epoch, const std::string& what)
      : NumericError("training diverged at epoch " + std::to_string(epoch) +
                     ": " + what),
        epoch_(epoch) {}
  const char* kind() const noexcept override { return "divergence"; }
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

// An object is missing state an operation needs (e.g. a model saved without
// its training-gradient snapshot).
class StateError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "state"; }
};

}  // namespace etr

#endif  // ETR_ERRORS_H_
