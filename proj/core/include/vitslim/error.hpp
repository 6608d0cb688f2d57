/* Copyright 2026 The vitslim Authors. All Rights Reserved.

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

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vitslim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid model, training or command configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (non-scalar loss, transforming an
// already transformed ParamSet, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed bytes in a dataset or checkpoint file. `offset` is the byte
// position of the offending record.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }
  // Message without the offset suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::uint64_t offset_;
};

class RecordError : public FormatError {
 public:
  using FormatError::FormatError;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class MeasurementError : public Error {
 public:
  using Error::Error;
};

// Raised by the trainer when the loss or gradients stop being finite.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t step, double lr, double grad_norm, double loss)
      : Error("non-finite training state at step " + std::to_string(step) +
              " (lr=" + std::to_string(lr) +
              ", grad_norm=" + std::to_string(grad_norm) +
              ", loss=" + std::to_string(loss) + ")"),
        step_(step),
        lr_(lr),
        grad_norm_(grad_norm) {}

  std::size_t step() const noexcept { return step_; }
  double lr() const noexcept { return lr_; }
  double grad_norm() const noexcept { return grad_norm_; }

 private:
  std::size_t step_;
  double lr_;
  double grad_norm_;
};

}  // namespace vitslim
