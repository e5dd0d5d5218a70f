/*
 * Copyright 2026 The rmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RMAE_ERROR_HPP_
#define RMAE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rmae {

enum class ErrorKind {
  kIoError,
  kMalformedFile,
  kConfigError,
  kNoData,
  kInternalError,
  kInvalidSpec,
  kInvalidParams,
  kNotFound,
  kInvalidPairing,
  kShapeError,
  kDegenerateBatch,
  kEmptyQuerySet,
  kStaleCache,
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kMalformedFile: return "MalformedFile";
    case ErrorKind::kConfigError: return "ConfigError";
    case ErrorKind::kNoData: return "NoData";
    case ErrorKind::kInternalError: return "InternalError";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kInvalidParams: return "InvalidParams";
    case ErrorKind::kNotFound: return "NotFound";
    case ErrorKind::kInvalidPairing: return "InvalidPairing";
    case ErrorKind::kShapeError: return "ShapeError";
    case ErrorKind::kDegenerateBatch: return "DegenerateBatch";
    case ErrorKind::kEmptyQuerySet: return "EmptyQuerySet";
    case ErrorKind::kStaleCache: return "StaleCache";
  }
  return "InternalError";
}

// Every failure raised by the library carries one of the categories above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace rmae

#endif  // RMAE_ERROR_HPP_
