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

#include <string>

#include <gtest/gtest.h>

#include "vwl/random.hpp"

namespace vwl::grammar {
namespace {

StructuredSample sample_fixture() {
  StructuredSample s;
  s.perception = "2 agents: vehicle ahead at 12.0 m";
  s.prediction = {{0.125, -1.5}, Direction::kLeft};
  s.visual.tokens = {0, 1, 2, 3, 4, 0, 0, 7};
  s.think = "clear corridor";
  s.action = {Lateral::kLeft, Longitudinal::kDecelerate};
  for (int h = 1; h <= kHorizon; ++h) s.answer.points.emplace_back(-0.25 * h, 1.5 * h);
  return s;
}

double exact_decimal(Rng& rng, double lo, double hi) {
  return static_cast<double>(static_cast<long long>(rng.uniform(lo, hi) * 1e6)) / 1e6;
}

std::string random_text(Rng& rng) {
  static constexpr std::string_view kAlphabet = "abc XYZ 0123456789.,;:-_()[]|/\n\t";
  std::string s(static_cast<std::size_t>(rng.uniform_int(0, 40)), ' ');
  for (char& c : s) c = kAlphabet[static_cast<std::size_t>(rng.uniform_int(0, kAlphabet.size() - 1))];
  return s;
}

StructuredSample random_sample(Rng& rng) {
  StructuredSample s;
  s.perception = random_text(rng);
  s.think = random_text(rng);
  s.prediction = {{exact_decimal(rng, -20, 20), exact_decimal(rng, -20, 20)}, static_cast<Direction>(rng.uniform_int(0, 2))};
  s.visual.tokens.resize(static_cast<std::size_t>(rng.uniform_int(0, 64)));
  for (auto& t : s.visual.tokens) t = rng.uniform_int(0, 12);
  s.action = ActionLabel::from_index(rng.uniform_int(0, kNumActions - 1));
  for (int h = 0; h < kHorizon; ++h) s.answer.points.emplace_back(exact_decimal(rng, -40, 40), exact_decimal(rng, -40, 40));
  return s;
}

bool has_error(const ParseOutcome& o, std::string_view message) {
  for (const ParseError& e : o.errors) {
    if (e.message == message) return true;
  }
  return false;
}

TEST(Serialize, CanonicalLayout) {
  const std::string text = serialize(sample_fixture());
  EXPECT_NE(text.find("<Prediction>0.125000, -1.500000 | left</Prediction>"), std::string::npos);
  EXPECT_NE(text.find("<Visual>0 1 2 3 4 0 0 7</Visual>"), std::string::npos);
  EXPECT_NE(text.find("<Action>left, decelerate</Action>"), std::string::npos);
  EXPECT_NE(text.find("<Answer>[(-0.250000, 1.500000), (-0.500000, 3.000000)"), std::string::npos);
  EXPECT_EQ(text.rfind("</Answer>"), text.size() - 9);
}

TEST(Parse, RoundTripFixture) {
  const StructuredSample s = sample_fixture();
  const ParseOutcome o = parse(serialize(s));
  ASSERT_TRUE(o.ok()) << o.errors.front().message;
  EXPECT_EQ(*o.sample, s);
}

TEST(Parse, EmptyThinkIsValid) {
  StructuredSample s = sample_fixture();
  s.think.clear();
  const std::string text = serialize(s);
  EXPECT_NE(text.find("<Think></Think>"), std::string::npos);
  EXPECT_TRUE(check_format(text).valid);
  EXPECT_EQ(*parse(text).sample, s);
}

TEST(Parse, MissingThink) {
  std::string text = serialize(sample_fixture());
  const auto b = text.find("<Think>");
  const auto e = text.find("</Think>") + 8;
  text.erase(b, e - b);
  const ParseOutcome o = parse(text);
  EXPECT_FALSE(o.ok());
  EXPECT_TRUE(has_error(o, "missing tag Think"));
}

TEST(Parse, WrongOrderNamesTheFirstMisplacedTag) {
  const StructuredSample s = sample_fixture();
  std::string text = serialize(s);
  const auto pb = text.find("<Prediction>");
  const auto pe = text.find("</Prediction>") + 13;
  const std::string pred = text.substr(pb, pe - pb);
  text.erase(pb, pe - pb);
  text.insert(text.find("</Visual>") + 9, pred);
  const ParseOutcome o = parse(text);
  EXPECT_FALSE(o.ok());
  EXPECT_TRUE(has_error(o, "wrong order at Visual"));
}

TEST(CheckFormat, RejectsDuplicatesAndTrailingGarbage) {
  const std::string text = serialize(sample_fixture());
  EXPECT_TRUE(check_format(text).valid);
  EXPECT_TRUE(check_format("\n  " + text + "\n\t ").valid);
  EXPECT_FALSE(check_format(text + "<Action>left, keep</Action>").valid);
  EXPECT_FALSE(check_format(text + " ok").valid);
  EXPECT_FALSE(check_format("x" + text).valid);
}

TEST(CheckFormat, MalformedPayloads) {
  StructuredSample s = sample_fixture();
  s.answer.points.pop_back();
  const std::string short_answer = serialize(s);
  EXPECT_FALSE(check_format(short_answer).valid);
  EXPECT_TRUE(check_format(short_answer, ParseOptions{kHorizon - 1}).valid);

  std::string bad_action = serialize(sample_fixture());
  bad_action.replace(bad_action.find("left, decelerate"), 16, "left, hover");
  const ParseOutcome o = parse(bad_action);
  ASSERT_FALSE(o.ok());
  EXPECT_EQ(o.errors.front().kind, ParseError::Kind::kMalformedPayload);
  EXPECT_EQ(o.errors.front().segment, Segment::kAction);
}

TEST(CheckFormat, AgreesWithParse) {
  Rng rng(21);
  const std::string base = serialize(sample_fixture());
  for (int trial = 0; trial < 2000; ++trial) {
    std::string t = base;
    const int edits = rng.uniform_int(1, 4);
    for (int k = 0; k < edits && !t.empty(); ++k) {
      const auto at = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(t.size()) - 1));
      t[at] = static_cast<char>(rng.uniform_int(0, 255));
    }
    EXPECT_EQ(check_format(t).valid, parse(t).ok());
  }
}

TEST(ValidateSample, RejectsAmbiguousSamples) {
  StructuredSample s = sample_fixture();
  EXPECT_NO_THROW(validate_sample(s));
  s.think = "see </Think> here";
  EXPECT_THROW(validate_sample(s), PreconditionError);
  s = sample_fixture();
  s.answer.points.pop_back();
  EXPECT_THROW(validate_sample(s), PreconditionError);
  s = sample_fixture();
  s.prediction.waypoint.x() = std::numeric_limits<double>::infinity();
  EXPECT_THROW(validate_sample(s), PreconditionError);
}

TEST(RoundTrip, RandomizedSamples) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const StructuredSample s = random_sample(rng);
    const ParseOutcome o = parse(serialize(s));
    ASSERT_TRUE(o.ok()) << "trial " << trial;
    ASSERT_EQ(*o.sample, s) << "trial " << trial;
  }
}

TEST(Parse, TotalOnArbitraryBytes) {
  Rng rng(99);
  const std::string base = serialize(sample_fixture());
  for (int trial = 0; trial < 10000; ++trial) {
    std::string t;
    if (trial % 2 == 0) {
      t.resize(static_cast<std::size_t>(rng.uniform_int(0, 300)));
      for (char& c : t) c = static_cast<char>(rng.uniform_int(0, 255));
    } else {
      // Splices of real markup keep the fuzzer near the interesting paths.
      const auto a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(base.size())));
      const auto b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(base.size())));
      t = base.substr(std::min(a, b), std::max(a, b) - std::min(a, b)) + base.substr(0, a);
    }
    const ParseOutcome o = parse(t);
    EXPECT_EQ(o.ok(), o.sample.has_value());
  }
}

TEST(ExtractSegments, RecoversWhatParses) {
  std::string text = serialize(sample_fixture());
  text.erase(text.find("<Think>"), text.find("</Think>") + 8 - text.find("<Think>"));
  text += "garbage";
  const LenientSegments seg = extract_segments(text);
  EXPECT_FALSE(seg.think.has_value());
  ASSERT_TRUE(seg.answer.has_value());
  EXPECT_EQ(*seg.answer, sample_fixture().answer);
  ASSERT_TRUE(seg.visual.has_value());
  EXPECT_EQ(seg.visual->tokens.size(), 8u);
  EXPECT_EQ(seg.action, sample_fixture().action);
}

}  // namespace
}  // namespace vwl::grammar
