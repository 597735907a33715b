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

// Corpus ingestion: annotation corpora, attribute vocabularies and label
// embeddings.
//
// A corpus file is line-delimited JSON, one record per line:
//
//   {"id": "img-001", "labels": ["basketball"], "attributes": {"gender": ["male"]}}
//
// Loaded corpora are stored compactly: label names are interned into a
// sorted vocabulary and each record's directions for an attribute are kept
// as a 64-bit mask (an attribute has at most 64 directions).

#ifndef BIASLENS_CORPUS_HPP_
#define BIASLENS_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace biaslens {

inline constexpr std::size_t kMinDirections = 2;
inline constexpr std::size_t kMaxDirections = 64;

// A sensitive attribute and its ordered direction vocabulary. Direction
// order defines column order everywhere downstream.
struct AttributeSpec {
  std::string name;
  std::vector<std::string> directions;

  std::optional<std::size_t> direction_index(std::string_view direction) const;

  bool operator==(const AttributeSpec&) const = default;
};

// Throws Error(kInvalidArgument) unless the attribute has 2..64 unique,
// non-empty direction names. Names may not contain ':', tabs or newlines
// since they appear inside selector strings and TSV cells.
void validate_attribute_spec(const AttributeSpec& spec);

// Accepts either a JSON array of {"name", "directions"} objects or one such
// object per line.
std::vector<AttributeSpec> load_attribute_specs(const std::filesystem::path& path);
std::vector<AttributeSpec> parse_attribute_specs(std::string_view text);
std::string format_attribute_specs(std::span<const AttributeSpec> specs);

// One sparsely labeled record in its raw, string-keyed form.
struct DataPoint {
  std::string id;
  std::vector<std::string> labels;
  std::map<std::string, std::vector<std::string>> attributes;
};

std::string format_data_point(const DataPoint& point);

class Corpus {
 public:
  // Read-only view of one stored record.
  struct Record {
    std::string_view id;
    std::span<const std::uint32_t> labels;  // indices into label_vocabulary()
    std::span<const std::uint64_t> direction_masks;  // one per attribute spec
  };

  Corpus() = default;

  const std::string& run_name() const { return run_name_; }
  std::size_t total_points() const { return label_offsets_.empty() ? 0 : label_offsets_.size() - 1; }
  // Sorted, unique label names.
  const std::vector<std::string>& label_vocabulary() const { return vocabulary_; }
  const std::vector<AttributeSpec>& attribute_specs() const { return attribute_specs_; }

  std::optional<std::size_t> attribute_index(std::string_view name) const;
  std::optional<std::uint32_t> label_index(std::string_view label) const;

  Record record(std::size_t i) const;

  // Reconstructs the raw record; used by exporters and oracles.
  DataPoint data_point(std::size_t i) const;

 private:
  friend class CorpusBuilder;

  std::string run_name_;
  std::vector<AttributeSpec> attribute_specs_;
  std::vector<std::string> vocabulary_;
  std::string id_blob_;
  std::vector<std::uint64_t> id_offsets_;
  std::vector<std::uint64_t> label_offsets_;
  std::vector<std::uint32_t> label_ids_;
  std::vector<std::uint64_t> direction_masks_;  // total_points * attributes
};

// Accumulates validated records and produces an immutable Corpus.
class CorpusBuilder {
 public:
  CorpusBuilder(std::string run_name, std::vector<AttributeSpec> attribute_specs);

  // Validates and stores a record. Duplicate labels collapse; attributes not
  // declared in the specs are ignored. Throws Error(kInvalidArgument) on a
  // duplicate id, empty label name, or a direction outside the declared
  // vocabulary.
  void add(const DataPoint& point);
  void add(std::string_view id, std::span<const std::string_view> labels,
           std::span<const std::uint64_t> direction_masks);

  std::size_t size() const { return ids_.size(); }

  Corpus build() &&;

 private:
  std::uint32_t intern(std::string_view label);
  void add_id(std::string_view id);

  Corpus corpus_;
  std::unordered_set<std::string> ids_;
  std::unordered_map<std::string, std::uint32_t> interned_;
  std::vector<std::string> interned_names_;
  std::vector<std::uint32_t> scratch_;
};

// Reads line-delimited records. Blank lines are skipped; errors name the
// 1-based line number. A stream failure part-way through reports the number
// of records read so far.
Corpus read_corpus(std::istream& in, std::string run_name,
                   std::vector<AttributeSpec> attribute_specs);
Corpus load_corpus(const std::filesystem::path& path, std::string run_name,
                   std::vector<AttributeSpec> attribute_specs);

// Label vectors keyed by label name. All vectors share one dimension and
// none is all-zero.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(std::string_view label) const;
  // Null when the label has no vector.
  const std::vector<double>* find(std::string_view label) const;
  const std::map<std::string, std::vector<double>, std::less<>>& vectors() const { return vectors_; }

  // Throws Error(kInvalidArgument) on a dimension mismatch, duplicate label
  // or zero vector.
  void insert(std::string label, std::vector<double> vector);

 private:
  std::size_t dimension_ = 0;
  std::map<std::string, std::vector<double>, std::less<>> vectors_;
};

EmbeddingTable read_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace biaslens

#endif  // BIASLENS_CORPUS_HPP_
