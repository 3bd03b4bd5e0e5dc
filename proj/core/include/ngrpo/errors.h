// Copyright 2026 The ngrpo Authors.
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

#ifndef NGRPO_ERRORS_H_
#define NGRPO_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ngrpo {

// Base class for every error raised by the library. The CLI maps the
// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: unknown keys, out-of-range hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (datasets, embeddings, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during optimisation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ngrpo

#endif  // NGRPO_ERRORS_H_
