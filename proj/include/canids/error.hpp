// Copyright 2026 The canids Authors. All Rights Reserved.
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

#ifndef CANIDS_ERROR_HPP
#define CANIDS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace canids {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An arbitration identifier does not fit the identifier field.
class IdOverflow : public Error {
 public:
  using Error::Error;
};

/// A trace or container file violates its grammar; carries row/offset info.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Tensor or parameter dimensions do not agree.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Batch statistics are undefined for a single-sample training batch.
class DegenerateBatch : public Error {
 public:
  using Error::Error;
};

class SingleClassTrainingSet : public Error {
 public:
  using Error::Error;
};

class MissingRunningStats : public Error {
 public:
  using Error::Error;
};

class EmptyCalibrationSet : public Error {
 public:
  using Error::Error;
};

class EmptyMatrix : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

/// An inference worker failed; surfaces on the feeding thread.
class StreamError : public Error {
 public:
  using Error::Error;
};

}  // namespace canids

#endif  // CANIDS_ERROR_HPP
