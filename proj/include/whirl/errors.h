// Copyright 2026 The whirl-sim Authors
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

#ifndef WHIRL_ERRORS_H_
#define WHIRL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace whirl {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can catch one type and print a diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid scene / experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad numeric parameters (window sizes, empty datasets, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Incompatible vector or matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Missing or malformed trajectory data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Prior extraction could not find an interaction.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

// Camera-to-robot mapping failed (point behind the camera).
class MappingError : public Error {
 public:
  using Error::Error;
};

// The scripted demonstrator could not complete the goal.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid combination of command-line inputs, e.g. comparing runs of
// different tasks.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace whirl

#endif  // WHIRL_ERRORS_H_
