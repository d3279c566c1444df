// Copyright 2026 The LQST Authors
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
#include <string_view>

namespace lqst {

/// Base class of every error thrown by the library. The message is prefixed
/// with the name of the module whose contract failed, e.g. "svt: ...".
class Error : public std::runtime_error {
 public:
  Error(std::string_view module, const std::string& message)
      : std::runtime_error(std::string(module) + ": " + message), module_(module) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

#define LQST_DEFINE_ERROR(Name, Base) \
  class Name : public Base {          \
   public:                            \
    using Base::Base;                 \
  };

LQST_DEFINE_ERROR(ArgumentError, Error)
LQST_DEFINE_ERROR(DimensionError, Error)
LQST_DEFINE_ERROR(ContractError, Error)
LQST_DEFINE_ERROR(DecompositionError, Error)
LQST_DEFINE_ERROR(NumericError, Error)
LQST_DEFINE_ERROR(DegeneracyError, Error)

// File-format errors (datasets, checkpoints).
LQST_DEFINE_ERROR(IoError, Error)
LQST_DEFINE_ERROR(VersionError, IoError)
LQST_DEFINE_ERROR(MalformedFileError, IoError)
LQST_DEFINE_ERROR(DimensionInconsistencyError, IoError)

#undef LQST_DEFINE_ERROR

}  // namespace lqst
