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

#include "biaslens/corpus.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "biaslens/error.hpp"
#include "biaslens/fixtures.hpp"
#include "biaslens/random.hpp"
#include "support/test_support.hpp"

namespace biaslens {
namespace {

using testing::TempDir;
using testing::write_file;

std::vector<AttributeSpec> gender() { return {fixtures::gender_attribute()}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInternal;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(AttributeSpecTest, Validation) {
  EXPECT_NO_THROW(validate_attribute_spec({"gender", {"male", "female"}}));
  EXPECT_THROW(validate_attribute_spec({"gender", {"male"}}), Error);
  EXPECT_THROW(validate_attribute_spec({"gender", {"male", "male"}}), Error);
  EXPECT_THROW(validate_attribute_spec({"gen:der", {"a", "b"}}), Error);
  EXPECT_THROW(validate_attribute_spec({"g", {"a", "b\tc"}}), Error);
  EXPECT_THROW(validate_attribute_spec({"", {"a", "b"}}), Error);
  AttributeSpec wide{"wide", {}};
  for (int i = 0; i < 64; ++i) wide.directions.push_back("d" + std::to_string(i));
  EXPECT_NO_THROW(validate_attribute_spec(wide));
  wide.directions.push_back("d64");
  EXPECT_THROW(validate_attribute_spec(wide), Error);
}

TEST(AttributeSpecTest, ParsesArrayAndLines) {
  const auto a = parse_attribute_specs(R"([{"name":"gender","directions":["male","female"]},
                                           {"name":"age","directions":["young","old"]}])");
  const auto b = parse_attribute_specs(
      "{\"name\":\"gender\",\"directions\":[\"male\",\"female\"]}\n\n{\"name\":\"age\",\"directions\":[\"young\","
      "\"old\"]}\n");
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[1].directions[1], "old");
  EXPECT_EQ(*a[0].direction_index("female"), 1u);
  EXPECT_FALSE(a[0].direction_index("other").has_value());
  EXPECT_EQ(parse_attribute_specs(format_attribute_specs(a)), a);
}

TEST(AttributeSpecTest, RejectsDuplicatesAndGarbage) {
  EXPECT_THROW(parse_attribute_specs(R"([{"name":"g","directions":["a","b"]},{"name":"g","directions":["c","d"]}])"),
               Error);
  EXPECT_EQ(code_of([] { parse_attribute_specs("{not json"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { parse_attribute_specs(R"({"name":"g","directions":[1,2]})"); }), ErrorCode::kParse);
}

TEST(CorpusTest, TinyFixtureShape) {
  const Corpus c = fixtures::tiny_corpus();
  EXPECT_EQ(c.total_points(), 10u);
  EXPECT_EQ(c.label_vocabulary(), (std::vector<std::string>{"ballet", "basketball", "tree"}));
  EXPECT_EQ(c.run_name(), "tiny");
  EXPECT_EQ(*c.attribute_index("gender"), 0u);
  const auto r = c.record(1);
  EXPECT_EQ(r.id, "p02");
  ASSERT_EQ(r.labels.size(), 2u);
  EXPECT_EQ(c.label_vocabulary()[r.labels[0]], "basketball");
  EXPECT_EQ(c.label_vocabulary()[r.labels[1]], "tree");
  EXPECT_EQ(r.direction_masks[0], 1u);
}

TEST(CorpusTest, ReadsLinesAndRoundTripsDataPoints) {
  std::stringstream ss;
  fixtures::write_corpus(ss, fixtures::tiny_points());
  const Corpus c = read_corpus(ss, "tiny", gender());
  const auto expected = fixtures::tiny_points();
  ASSERT_EQ(c.total_points(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const DataPoint p = c.data_point(i);
    EXPECT_EQ(p.id, expected[i].id);
    std::set<std::string> got(p.labels.begin(), p.labels.end());
    std::set<std::string> want(expected[i].labels.begin(), expected[i].labels.end());
    EXPECT_EQ(got, want);
    EXPECT_EQ(p.attributes, expected[i].attributes);
  }
}

TEST(CorpusTest, SkipsBlankLinesAndIgnoresUndeclaredAttributes) {
  std::stringstream ss(
      "\n"
      R"({"id":"a","labels":["x"],"attributes":{"gender":["male"],"age":["old"]}})"
      "\n   \n"
      R"({"id":"b","labels":[],"attributes":{}})"
      "\n");
  const Corpus c = read_corpus(ss, "r", gender());
  EXPECT_EQ(c.total_points(), 2u);
  EXPECT_EQ(c.record(0).direction_masks[0], 1u);
  EXPECT_EQ(c.record(1).direction_masks[0], 0u);
}

TEST(CorpusTest, DuplicateLabelsOnARecordCollapse) {
  std::stringstream ss(R"({"id":"a","labels":["x","x","y"],"attributes":{"gender":["male","male"]}})");
  const Corpus c = read_corpus(ss, "r", gender());
  EXPECT_EQ(c.record(0).labels.size(), 2u);
}

TEST(CorpusTest, ErrorsNameTheLine) {
  std::stringstream dup(R"({"id":"a","labels":[]}
{"id":"a","labels":[]})");
  const std::string m = message_of([&] { read_corpus(dup, "r", gender()); });
  EXPECT_NE(m.find("line 2"), std::string::npos) << m;
  EXPECT_NE(m.find("duplicate"), std::string::npos) << m;

  std::stringstream unknown("\n{\"id\":\"a\",\"labels\":[],\"attributes\":{\"gender\":[\"other\"]}}");
  const std::string m2 = message_of([&] { read_corpus(unknown, "r", gender()); });
  EXPECT_NE(m2.find("line 2"), std::string::npos) << m2;
  EXPECT_NE(m2.find("other"), std::string::npos) << m2;

  std::stringstream broken("{\"id\": \"a\", \"labels\": [");
  EXPECT_EQ(code_of([&] { read_corpus(broken, "r", gender()); }), ErrorCode::kParse);

  std::stringstream no_labels(R"({"id":"a"})");
  EXPECT_EQ(code_of([&] { read_corpus(no_labels, "r", gender()); }), ErrorCode::kParse);

  std::stringstream empty_label(R"({"id":"a","labels":[""]})");
  EXPECT_EQ(code_of([&] { read_corpus(empty_label, "r", gender()); }), ErrorCode::kInvalidArgument);
}

TEST(CorpusTest, MissingFileIsNotFound) {
  EXPECT_EQ(code_of([] { load_corpus("/nonexistent/corpus.jsonl", "r", gender()); }), ErrorCode::kNotFound);
}

TEST(CorpusTest, EmptyCorpus) {
  std::stringstream ss("");
  const Corpus c = read_corpus(ss, "r", gender());
  EXPECT_EQ(c.total_points(), 0u);
  EXPECT_TRUE(c.label_vocabulary().empty());
}

TEST(CorpusTest, BuilderMaskOverload) {
  CorpusBuilder b("r", gender());
  std::vector<std::string_view> labels = {"z", "a"};
  std::vector<std::uint64_t> masks = {3};
  b.add("p1", labels, masks);
  std::vector<std::uint64_t> bad = {4};
  EXPECT_THROW(b.add("p2", labels, bad), Error);
  const Corpus c = std::move(b).build();
  EXPECT_EQ(c.label_vocabulary(), (std::vector<std::string>{"a", "z"}));
  EXPECT_EQ(c.data_point(0).attributes.at("gender"), (std::vector<std::string>{"male", "female"}));
}

TEST(CorpusPropertyTest, VocabularyIsSortedUnionOfLabels) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    fixtures::FixtureSpec spec;
    spec.seed = rng.next();
    spec.points = 1 + rng.below(300);
    spec.labels = 1 + rng.below(30);
    spec.extra_direction_rate = 0.2;
    spec.missing_direction_rate = 0.1;
    const auto points = fixtures::random_points(spec);
    const Corpus c = testing::build_corpus(points, {spec.attribute});
    std::set<std::string> want;
    for (const auto& p : points) want.insert(p.labels.begin(), p.labels.end());
    EXPECT_EQ(c.label_vocabulary(), std::vector<std::string>(want.begin(), want.end()));
    EXPECT_EQ(c.total_points(), points.size());
  }
}

TEST(EmbeddingTest, ParsesWhitespaceSeparatedVectors) {
  std::stringstream ss("a 1 0 0\nb 0 1.5 -2e-1\n\n");
  const EmbeddingTable t = read_embeddings(ss);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.dimension(), 3u);
  EXPECT_EQ((*t.find("b"))[2], -0.2);
  EXPECT_EQ(t.find("c"), nullptr);
}

TEST(EmbeddingTest, Errors) {
  std::stringstream nonnumeric("a 1 x\n");
  EXPECT_EQ(code_of([&] { read_embeddings(nonnumeric); }), ErrorCode::kParse);
  std::stringstream dims("a 1 2\nb 1\n");
  const std::string m = message_of([&] { read_embeddings(dims); });
  EXPECT_NE(m.find("line 2"), std::string::npos) << m;
  std::stringstream zero("a 0 0\n");
  EXPECT_THROW(read_embeddings(zero), Error);
  std::stringstream empty("\n");
  EXPECT_THROW(read_embeddings(empty), Error);
  std::stringstream dup("a 1 2\na 2 1\n");
  EXPECT_THROW(read_embeddings(dup), Error);
}

TEST(EmbeddingTest, WriterRoundTripsExactly) {
  const auto fx = fixtures::cluster_embeddings({});
  TempDir dir;
  std::stringstream ss;
  fixtures::write_embeddings(ss, fx.table);
  write_file(dir / "emb.txt", ss.str());
  const EmbeddingTable back = load_embeddings(dir / "emb.txt");
  EXPECT_EQ(back.vectors(), fx.table.vectors());
}

}  // namespace
}  // namespace biaslens
