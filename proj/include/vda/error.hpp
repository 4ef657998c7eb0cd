// Copyright 2026 The vda Authors.
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

namespace vda {

// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorKind {
  kUsage,      // bad invocation or schema (exit 1)
  kData,       // missing/malformed data (exit 2)
  kNumerical,  // degenerate or singular numerics (exit 3)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define VDA_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

VDA_DEFINE_ERROR(FormatError, kData)
VDA_DEFINE_ERROR(UnsupportedFormatError, kData)
VDA_DEFINE_ERROR(SchemaError, kUsage)
VDA_DEFINE_ERROR(ValueError, kData)
VDA_DEFINE_ERROR(AlignmentError, kData)
VDA_DEFINE_ERROR(ConfigError, kUsage)
VDA_DEFINE_ERROR(PreconditionError, kData)
VDA_DEFINE_ERROR(DegenerateInputError, kNumerical)
VDA_DEFINE_ERROR(UnderdeterminedError, kNumerical)
VDA_DEFINE_ERROR(StratificationError, kData)
VDA_DEFINE_ERROR(DependencyError, kData)
VDA_DEFINE_ERROR(MetricError, kNumerical)

#undef VDA_DEFINE_ERROR

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 1;
    case ErrorKind::kData: return 2;
    case ErrorKind::kNumerical: return 3;
  }
  return 1;
}

}  // namespace vda
