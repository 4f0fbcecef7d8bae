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

#include "vip/error.hpp"

namespace vip {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kUnknownCategory: return "unknown_category";
    case ErrorKind::kEmptyParse: return "empty_parse";
    case ErrorKind::kTransient: return "transient";
    case ErrorKind::kDegenerateFeature: return "degenerate_feature";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInternalInvariant: return "internal_invariant";
    case ErrorKind::kConstruction: return "construction";
    case ErrorKind::kUsage: return "usage";
  }
  return "unknown";
}

}  // namespace vip
