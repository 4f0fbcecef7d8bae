// Copyright 2026 The ViP Lab Authors.
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
#include <vector>

namespace vip {

enum class ErrorKind {
  kInvalidArgument,
  kNotFound,
  kValidation,
  kUnknownCategory,
  kEmptyParse,
  kTransient,
  kDegenerateFeature,
  kConfig,
  kInternalInvariant,
  kConstruction,
  kUsage,
};

const char* ErrorKindName(ErrorKind kind);

/// Base of every error raised by the library. The kind lets callers (and the
/// CLI's structured error output) branch without RTTI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& m) : Error(ErrorKind::kInvalidArgument, m) {}
};

class NotFound : public Error {
 public:
  explicit NotFound(const std::string& m) : Error(ErrorKind::kNotFound, m) {}
};

/// Schema or invariant violation. `fields` names the offending fields or ids.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& m, std::vector<std::string> fields = {})
      : Error(ErrorKind::kValidation, m), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

class UnknownCategory : public Error {
 public:
  explicit UnknownCategory(const std::string& category)
      : Error(ErrorKind::kUnknownCategory, "unknown category: " + category),
        category_(category) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// No bullet items could be extracted; carries the raw response.
class EmptyParse : public Error {
 public:
  EmptyParse(const std::string& m, std::string raw)
      : Error(ErrorKind::kEmptyParse, m), raw_(std::move(raw)) {}
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class TransientError : public Error {
 public:
  explicit TransientError(const std::string& m) : Error(ErrorKind::kTransient, m) {}
};

class DegenerateFeature : public Error {
 public:
  explicit DegenerateFeature(const std::string& m)
      : Error(ErrorKind::kDegenerateFeature, m) {}
};

/// Configuration problem; `key_path` is the dotted path of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key_path, const std::string& m)
      : Error(ErrorKind::kConfig, key_path + ": " + m), key_path_(key_path) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

class InternalInvariant : public Error {
 public:
  explicit InternalInvariant(const std::string& m)
      : Error(ErrorKind::kInternalInvariant, m) {}
};

class ConstructionError : public Error {
 public:
  explicit ConstructionError(const std::string& m) : Error(ErrorKind::kConstruction, m) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(ErrorKind::kUsage, m) {}
};

}  // namespace vip
