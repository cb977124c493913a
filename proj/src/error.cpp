// Copyright 2026 The coldstart Authors
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

#include "coldstart/error.hpp"

namespace coldstart {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMalformedHeader: return "MalformedHeader";
    case Errc::kBadCount: return "BadCount";
    case Errc::kDuplicateFunctionInDay: return "DuplicateFunctionInDay";
    case Errc::kLengthNotDivisible: return "LengthNotDivisible";
    case Errc::kTooFewEvents: return "TooFewEvents";
    case Errc::kSeriesTooShort: return "SeriesTooShort";
    case Errc::kWrongGranularity: return "WrongGranularity";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kDomainError: return "DomainError";
    case Errc::kNotScalar: return "NotScalar";
    case Errc::kInsufficientHistory: return "InsufficientHistory";
    case Errc::kNonFinite: return "NonFinite";
    case Errc::kBadConfig: return "BadConfig";
    case Errc::kBadCheckpoint: return "BadCheckpoint";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kEmpty: return "Empty";
    case Errc::kZeroRange: return "ZeroRange";
    case Errc::kZeroVariance: return "ZeroVariance";
    case Errc::kDegenerateRanks: return "DegenerateRanks";
    case Errc::kInvalidPolicy: return "InvalidPolicy";
    case Errc::kUnsortedEvents: return "UnsortedEvents";
    case Errc::kMissingForecaster: return "MissingForecaster";
    case Errc::kZeroBaseline: return "ZeroBaseline";
    case Errc::kIo: return "Io";
    case Errc::kParse: return "Parse";
  }
  return "Unknown";
}

} // namespace coldstart
