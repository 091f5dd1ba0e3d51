// Copyright 2026 The robust-loss-lab Authors.
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

#include "errors.hpp"

namespace rll {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Index: return "index";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::InvalidNoise: return "invalid-noise";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Config: return "config";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Rank: return "rank";
    case ErrorCode::Degeneracy: return "degeneracy";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::DegenerateOutput: return "degenerate-output";
    case ErrorCode::DegenerateLoss: return "degenerate-loss";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace rll
