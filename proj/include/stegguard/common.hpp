// Copyright 2026 The StegGuard Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

// The numeric core is compiled once per scalar type. Each build lives in its
// own inline namespace so a float and a double build can be linked into the
// same executable (the double build backs the finite-difference checks).
#ifdef SG_REAL_DOUBLE
#define SG_REAL_NS f64
#else
#define SG_REAL_NS f32
#endif

namespace sg {
inline namespace SG_REAL_NS {

#ifdef SG_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

enum class Mode { kTrain, kEval };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or precondition violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, truncated or malformed input files.
class FormatError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Shape or range problems with runtime inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Suspect oracle cannot be paired with a fingerprint (embedding width).
class IncompatibleOracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace SG_REAL_NS
}  // namespace sg
