// Copyright 2026 The VLA-World Lab Authors
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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vwl/core.hpp"
#include "vwl/worldsim.hpp"

namespace vwl::grammar {

enum class Segment : std::uint8_t { kPerception = 0, kPrediction, kVisual, kThink, kAction, kAnswer };
inline constexpr int kNumSegments = 6;
inline constexpr std::array<std::string_view, kNumSegments> kSegmentNames = {
    "Perception", "Prediction", "Visual", "Think", "Action", "Answer"};

inline std::string_view name_of(Segment s) { return kSegmentNames[static_cast<std::size_t>(s)]; }

struct ShortTermPrediction {
  Vec2 waypoint = Vec2::Zero();
  Direction direction = Direction::kForward;
  friend bool operator==(const ShortTermPrediction&, const ShortTermPrediction&) = default;
};

struct StructuredSample {
  std::string perception;
  ShortTermPrediction prediction;
  worldsim::TokenSequence visual;
  std::string think;
  ActionLabel action;
  Trajectory answer;
  friend bool operator==(const StructuredSample&, const StructuredSample&) = default;
};

struct ParseError {
  enum class Kind { kMissingTag, kDuplicateTag, kUnclosedTag, kWrongOrder, kUnexpectedContent, kMalformedPayload };
  Kind kind;
  std::optional<Segment> segment;
  std::size_t offset = 0;
  std::string message;
};

struct ParseOutcome {
  std::optional<StructuredSample> sample;
  std::vector<ParseError> errors;
  bool ok() const { return errors.empty(); }
};

struct ParseOptions {
  /// Required number of Answer waypoints.
  int horizon = kHorizon;
};

/// Strict parse: six tags, once each, canonical order, only whitespace outside them.
ParseOutcome parse(std::string_view text, const ParseOptions& opts = {});

/// Throws PreconditionError if the sample cannot be serialized unambiguously.
void validate_sample(const StructuredSample& s, const ParseOptions& opts = {});

/// Canonical text form; numbers use 6 fractional digits.
std::string serialize(const StructuredSample& s);

struct FormatReport {
  bool valid = false;
  std::vector<ParseError> errors;
};
FormatReport check_format(std::string_view text, const ParseOptions& opts = {});

/// Individually recovered segment payloads; each is present iff its first
/// occurrence is closed and its payload is well-formed, regardless of the
/// rest of the envelope.
struct LenientSegments {
  std::optional<std::string> perception;
  std::optional<ShortTermPrediction> prediction;
  std::optional<worldsim::TokenSequence> visual;
  std::optional<std::string> think;
  std::optional<ActionLabel> action;
  std::optional<Trajectory> answer;
};
LenientSegments extract_segments(std::string_view text, const ParseOptions& opts = {});

std::string format_number(double v);

}  // namespace vwl::grammar
