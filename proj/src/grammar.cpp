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

#include "vwl/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace vwl::grammar {
namespace {

struct Marker {
  Segment segment;
  bool closing;
  std::size_t begin;  // offset of '<'
  std::size_t end;    // one past '>'
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<Marker> scan_markers(std::string_view text) {
  std::vector<Marker> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '<') continue;
    std::size_t j = i + 1;
    const bool closing = j < text.size() && text[j] == '/';
    if (closing) ++j;
    for (int s = 0; s < kNumSegments; ++s) {
      const std::string_view name = kSegmentNames[static_cast<std::size_t>(s)];
      if (text.substr(j, name.size()) == name && j + name.size() < text.size() && text[j + name.size()] == '>') {
        out.push_back({static_cast<Segment>(s), closing, i, j + name.size() + 1});
        break;
      }
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::general);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::optional<Vec2> parse_pair(std::string_view s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) return std::nullopt;
  const auto x = parse_number(parts[0]);
  const auto y = parse_number(parts[1]);
  if (!x || !y) return std::nullopt;
  return Vec2(*x, *y);
}

std::optional<ShortTermPrediction> parse_prediction(std::string_view s) {
  const auto parts = split(s, '|');
  if (parts.size() != 2) return std::nullopt;
  const auto wp = parse_pair(parts[0]);
  const auto dir = parse_lateral(trim(parts[1]));
  if (!wp || !dir) return std::nullopt;
  return ShortTermPrediction{*wp, *dir};
}

std::optional<worldsim::TokenSequence> parse_visual(std::string_view s) {
  worldsim::TokenSequence seq;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    const std::string_view word = s.substr(i, j - i);
    if (!std::all_of(word.begin(), word.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::nullopt;
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
    if (ec != std::errc() || ptr != word.data() + word.size()) return std::nullopt;
    seq.tokens.push_back(v);
    i = j;
  }
  return seq;
}

std::optional<ActionLabel> parse_action(std::string_view s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) return std::nullopt;
  const auto lat = parse_lateral(trim(parts[0]));
  const auto lon = parse_longitudinal(trim(parts[1]));
  if (!lat || !lon) return std::nullopt;
  return ActionLabel{*lat, *lon};
}

std::optional<Trajectory> parse_answer(std::string_view s, int horizon) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  s = trim(s.substr(1, s.size() - 2));
  Trajectory traj;
  while (!s.empty()) {
    if (s.front() != '(') return std::nullopt;
    const std::size_t close = s.find(')');
    if (close == std::string_view::npos) return std::nullopt;
    const auto p = parse_pair(s.substr(1, close - 1));
    if (!p) return std::nullopt;
    traj.points.push_back(*p);
    s = trim(s.substr(close + 1));
    if (s.empty()) break;
    if (s.front() != ',') return std::nullopt;
    s = trim(s.substr(1));
    if (s.empty()) return std::nullopt;  // dangling comma
  }
  if (traj.size() != horizon) return std::nullopt;
  return traj;
}

std::string describe(const char* what, Segment s) { return std::string(what) + " " + std::string(name_of(s)); }

struct Region {
  Segment segment;
  std::size_t open_begin, payload_begin, payload_end, close_end;
};

// First open marker of `seg` and the first matching close after it.
std::optional<Region> first_region(const std::vector<Marker>& markers, Segment seg) {
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (markers[i].segment != seg || markers[i].closing) continue;
    for (std::size_t j = i + 1; j < markers.size(); ++j) {
      if (markers[j].segment == seg && markers[j].closing) {
        return Region{seg, markers[i].begin, markers[i].end, markers[j].begin, markers[j].end};
      }
    }
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

ParseOutcome parse(std::string_view text, const ParseOptions& opts) {
  ParseOutcome outcome;
  auto fail = [&](ParseError::Kind k, std::optional<Segment> seg, std::size_t off, std::string msg) {
    outcome.errors.push_back({k, seg, off, std::move(msg)});
  };

  const std::vector<Marker> markers = scan_markers(text);
  std::array<std::vector<const Marker*>, kNumSegments> opens, closes;
  for (const Marker& m : markers) (m.closing ? closes : opens)[static_cast<std::size_t>(m.segment)].push_back(&m);

  std::vector<Region> regions;
  for (int i = 0; i < kNumSegments; ++i) {
    const auto seg = static_cast<Segment>(i);
    const auto& o = opens[static_cast<std::size_t>(i)];
    const auto& c = closes[static_cast<std::size_t>(i)];
    if (o.empty()) {
      fail(ParseError::Kind::kMissingTag, seg, c.empty() ? text.size() : c.front()->begin, describe("missing tag", seg));
      continue;
    }
    if (o.size() > 1) {
      fail(ParseError::Kind::kDuplicateTag, seg, o[1]->begin, describe("duplicate tag", seg));
      continue;
    }
    if (c.size() > 1) {
      fail(ParseError::Kind::kDuplicateTag, seg, c[1]->begin, describe("duplicate closing tag", seg));
      continue;
    }
    if (c.empty() || c.front()->begin < o.front()->end) {
      fail(ParseError::Kind::kUnclosedTag, seg, o.front()->begin, describe("unclosed tag", seg));
      continue;
    }
    regions.push_back({seg, o.front()->begin, o.front()->end, c.front()->begin, c.front()->end});
  }

  // Order is checked among the tags that do appear.
  std::vector<std::pair<std::size_t, Segment>> present;
  for (int i = 0; i < kNumSegments; ++i) {
    const auto& o = opens[static_cast<std::size_t>(i)];
    if (!o.empty()) present.emplace_back(o.front()->begin, static_cast<Segment>(i));
  }
  std::vector<std::pair<std::size_t, Segment>> by_position = present;
  std::sort(by_position.begin(), by_position.end());
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (by_position[i].second != present[i].second) {
      fail(ParseError::Kind::kWrongOrder, by_position[i].second, by_position[i].first,
           describe("wrong order at", by_position[i].second));
      break;
    }
  }
  if (!outcome.errors.empty()) return outcome;

  // Envelope: regions are disjoint and separated only by whitespace.
  std::size_t cursor = 0;
  for (const Region& r : regions) {
    if (r.open_begin < cursor) {
      fail(ParseError::Kind::kUnexpectedContent, r.segment, r.open_begin, describe("overlapping tag", r.segment));
      return outcome;
    }
    for (std::size_t i = cursor; i < r.open_begin; ++i) {
      if (!is_space(text[i])) {
        fail(ParseError::Kind::kUnexpectedContent, r.segment, i, describe("unexpected content before", r.segment));
        return outcome;
      }
    }
    cursor = r.close_end;
  }
  for (std::size_t i = cursor; i < text.size(); ++i) {
    if (!is_space(text[i])) {
      fail(ParseError::Kind::kUnexpectedContent, std::nullopt, i, "unexpected content after Answer");
      return outcome;
    }
  }

  StructuredSample sample;
  auto payload = [&](Segment s) {
    const Region& r = regions[static_cast<std::size_t>(s)];
    return text.substr(r.payload_begin, r.payload_end - r.payload_begin);
  };
  auto malformed = [&](Segment s) {
    fail(ParseError::Kind::kMalformedPayload, s, regions[static_cast<std::size_t>(s)].payload_begin,
         describe("malformed payload in", s));
  };
  sample.perception = std::string(payload(Segment::kPerception));
  sample.think = std::string(payload(Segment::kThink));
  if (auto p = parse_prediction(payload(Segment::kPrediction))) sample.prediction = *p; else malformed(Segment::kPrediction);
  if (auto v = parse_visual(payload(Segment::kVisual))) sample.visual = std::move(*v); else malformed(Segment::kVisual);
  if (auto a = parse_action(payload(Segment::kAction))) sample.action = *a; else malformed(Segment::kAction);
  if (auto t = parse_answer(payload(Segment::kAnswer), opts.horizon)) sample.answer = std::move(*t);
  else malformed(Segment::kAnswer);

  if (outcome.errors.empty()) outcome.sample = std::move(sample);
  return outcome;
}

FormatReport check_format(std::string_view text, const ParseOptions& opts) {
  ParseOutcome o = parse(text, opts);
  return {o.ok(), std::move(o.errors)};
}

LenientSegments extract_segments(std::string_view text, const ParseOptions& opts) {
  const std::vector<Marker> markers = scan_markers(text);
  LenientSegments out;
  auto payload_of = [&](Segment s) -> std::optional<std::string_view> {
    const auto r = first_region(markers, s);
    if (!r) return std::nullopt;
    return text.substr(r->payload_begin, r->payload_end - r->payload_begin);
  };
  if (auto p = payload_of(Segment::kPerception)) out.perception = std::string(*p);
  if (auto p = payload_of(Segment::kThink)) out.think = std::string(*p);
  if (auto p = payload_of(Segment::kPrediction)) out.prediction = parse_prediction(*p);
  if (auto p = payload_of(Segment::kVisual)) out.visual = parse_visual(*p);
  if (auto p = payload_of(Segment::kAction)) out.action = parse_action(*p);
  if (auto p = payload_of(Segment::kAnswer)) out.answer = parse_answer(*p, opts.horizon);
  return out;
}

void validate_sample(const StructuredSample& s, const ParseOptions& opts) {
  for (const std::string* text : {&s.perception, &s.think}) {
    require(scan_markers(*text).empty(), "free-text segment contains a tag marker");
  }
  require(finite(s.prediction.waypoint), "prediction waypoint must be finite");
  require(s.answer.size() == opts.horizon, "answer must have exactly horizon waypoints");
  require(std::all_of(s.answer.points.begin(), s.answer.points.end(), [](const Vec2& p) { return finite(p); }),
          "answer waypoints must be finite");
  require(std::all_of(s.visual.tokens.begin(), s.visual.tokens.end(), [](std::int64_t t) { return t >= 0; }),
          "visual tokens must be non-negative");
}

std::string serialize(const StructuredSample& s) {
  std::string out;
  out.reserve(64 + s.perception.size() + s.think.size() + 3 * s.visual.tokens.size() + 32 * s.answer.points.size());
  out += "<Perception>";
  out += s.perception;
  out += "</Perception>\n<Prediction>";
  out += format_number(s.prediction.waypoint.x());
  out += ", ";
  out += format_number(s.prediction.waypoint.y());
  out += " | ";
  out += to_string(s.prediction.direction);
  out += "</Prediction>\n<Visual>";
  for (std::size_t i = 0; i < s.visual.tokens.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(s.visual.tokens[i]);
  }
  out += "</Visual>\n<Think>";
  out += s.think;
  out += "</Think>\n<Action>";
  out += to_string(s.action.lateral);
  out += ", ";
  out += to_string(s.action.longitudinal);
  out += "</Action>\n<Answer>[";
  for (std::size_t i = 0; i < s.answer.points.size(); ++i) {
    if (i) out += ", ";
    out += '(';
    out += format_number(s.answer.points[i].x());
    out += ", ";
    out += format_number(s.answer.points[i].y());
    out += ')';
  }
  out += "]</Answer>";
  return out;
}

}  // namespace vwl::grammar
