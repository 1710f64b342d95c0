// Copyright 2026 The divergescope Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace divergescope {

// Every failure raised by the library derives from Error. The category maps
// one-to-one onto the command line exit status.
class Error : public std::runtime_error {
 public:
  enum class Kind { kUsage = 1, kData = 2, kNumerical = 3 };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }
  int exit_status() const noexcept { return static_cast<int>(kind_); }

 private:
  Kind kind_;
};

// Bad parameters, bad configuration, violated preconditions on arguments.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Kind::kUsage, what) {}
};

// Malformed or inconsistent input files and records.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Kind::kData, what) {}
};

// NaN/Inf during training, undefined numeric results that cannot be recovered.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(Kind::kNumerical, what) {}
};

}  // namespace divergescope
