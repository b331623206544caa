/* Copyright 2026 The Disent Authors. All Rights Reserved.

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

#ifndef DISENT_COMMON_HPP_
#define DISENT_COMMON_HPP_

#include <stdexcept>
#include <string>

namespace disent {

inline constexpr const char* kVersionString = "disent 1.0.0";

// Error taxonomy. Everything a caller can mishandle gets its own type so the
// C API can map exceptions onto stable status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not line up (matmul inner dims, slice ranges, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition stated by an operation's contract was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A tape operation produced NaN or Inf; the trainer maps this onto a
// TrainingError with epoch/batch context.
class NonFiniteError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Token sequence empty after padding removal.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint version/shape mismatch or corruption.
class PersistenceError : public Error {
 public:
  using Error::Error;
};

// Training diverged (non-finite loss); message names epoch and batch.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace disent

#endif  // DISENT_COMMON_HPP_
