// Copyright 2026 The BiasLens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BIASLENS_ERROR_HPP_
#define BIASLENS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace biaslens {

// Broad error categories. The C API maps these one-to-one onto bl_status
// codes and the HTTP layer onto status codes.
enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kParse,
  kIo,
  kConflict,
  kCorrupt,
  kUnprocessable,
  kInternal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Like Error, but carries the name of the offending request field so the
// API layer can produce field-level messages.
class FieldError : public Error {
 public:
  FieldError(ErrorCode code, std::string field, const std::string& message)
      : Error(code, message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace biaslens

#endif  // BIASLENS_ERROR_HPP_
