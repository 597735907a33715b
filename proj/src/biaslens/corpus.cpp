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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "biaslens/error.hpp"
#include "json.hpp"

namespace biaslens {
namespace {

using nlohmann::json;

bool has_reserved_char(std::string_view s) {
  return s.find_first_of(":\t\n\r") != std::string_view::npos;
}

std::string line_prefix(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

AttributeSpec attribute_from_json(const json& j) {
  if (!j.is_object() || !j.contains("name") || !j.contains("directions") ||
      !j["name"].is_string() || !j["directions"].is_array()) {
    fail(ErrorCode::kParse, "attribute entry needs a string 'name' and a 'directions' array");
  }
  AttributeSpec spec;
  spec.name = j["name"].get<std::string>();
  for (const auto& d : j["directions"]) {
    if (!d.is_string()) fail(ErrorCode::kParse, "attribute '" + spec.name + "': directions must be strings");
    spec.directions.push_back(d.get<std::string>());
  }
  validate_attribute_spec(spec);
  return spec;
}

}  // namespace

std::optional<std::size_t> AttributeSpec::direction_index(std::string_view direction) const {
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (directions[i] == direction) return i;
  }
  return std::nullopt;
}

void validate_attribute_spec(const AttributeSpec& spec) {
  if (spec.name.empty() || has_reserved_char(spec.name)) {
    fail(ErrorCode::kInvalidArgument, "attribute name '" + spec.name + "' is empty or contains ':', tab or newline");
  }
  if (spec.directions.size() < kMinDirections || spec.directions.size() > kMaxDirections) {
    fail(ErrorCode::kInvalidArgument, "attribute '" + spec.name + "' must declare between 2 and 64 directions, got " +
                                          std::to_string(spec.directions.size()));
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& d : spec.directions) {
    if (d.empty() || has_reserved_char(d)) {
      fail(ErrorCode::kInvalidArgument, "attribute '" + spec.name + "': direction '" + d + "' is empty or contains ':', tab or newline");
    }
    if (!seen.insert(d).second) {
      fail(ErrorCode::kInvalidArgument, "attribute '" + spec.name + "': duplicate direction '" + d + "'");
    }
  }
}

std::vector<AttributeSpec> parse_attribute_specs(std::string_view text) {
  std::vector<AttributeSpec> specs;
  auto whole = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!whole.is_discarded() && whole.is_array()) {
    for (const auto& entry : whole) specs.push_back(attribute_from_json(entry));
  } else if (!whole.is_discarded() && whole.is_object()) {
    specs.push_back(attribute_from_json(whole));
  } else {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto j = json::parse(line, nullptr, false);
      if (j.is_discarded()) fail(ErrorCode::kParse, "attributes " + line_prefix(line_no) + "malformed JSON");
      try {
        specs.push_back(attribute_from_json(j));
      } catch (const Error& e) {
        throw Error(e.code(), "attributes " + line_prefix(line_no) + e.what());
      }
    }
  }
  std::unordered_set<std::string> names;
  for (const auto& s : specs) {
    if (!names.insert(s.name).second) fail(ErrorCode::kInvalidArgument, "duplicate attribute '" + s.name + "'");
  }
  return specs;
}

std::vector<AttributeSpec> load_attribute_specs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "cannot open attribute file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_attribute_specs(buffer.str());
}

std::string format_attribute_specs(std::span<const AttributeSpec> specs) {
  std::string out;
  for (const auto& s : specs) {
    json j;
    j["name"] = s.name;
    j["directions"] = s.directions;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string format_data_point(const DataPoint& point) {
  json j;
  j["id"] = point.id;
  j["labels"] = point.labels;
  j["attributes"] = json::object();
  for (const auto& [name, dirs] : point.attributes) j["attributes"][name] = dirs;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Corpus

std::optional<std::size_t> Corpus::attribute_index(std::string_view name) const {
  for (std::size_t i = 0; i < attribute_specs_.size(); ++i) {
    if (attribute_specs_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> Corpus::label_index(std::string_view label) const {
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), label);
  if (it == vocabulary_.end() || *it != label) return std::nullopt;
  return static_cast<std::uint32_t>(it - vocabulary_.begin());
}

Corpus::Record Corpus::record(std::size_t i) const {
  const std::size_t attrs = attribute_specs_.size();
  Record r;
  r.id = std::string_view(id_blob_).substr(id_offsets_[i], id_offsets_[i + 1] - id_offsets_[i]);
  r.labels = std::span<const std::uint32_t>(label_ids_).subspan(label_offsets_[i],
                                                                 label_offsets_[i + 1] - label_offsets_[i]);
  r.direction_masks = std::span<const std::uint64_t>(direction_masks_).subspan(i * attrs, attrs);
  return r;
}

DataPoint Corpus::data_point(std::size_t i) const {
  const Record r = record(i);
  DataPoint p;
  p.id = std::string(r.id);
  for (auto id : r.labels) p.labels.push_back(vocabulary_[id]);
  for (std::size_t a = 0; a < attribute_specs_.size(); ++a) {
    const std::uint64_t mask = r.direction_masks[a];
    if (mask == 0) continue;
    auto& dirs = p.attributes[attribute_specs_[a].name];
    for (std::size_t d = 0; d < attribute_specs_[a].directions.size(); ++d) {
      if (mask & (std::uint64_t{1} << d)) dirs.push_back(attribute_specs_[a].directions[d]);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// CorpusBuilder

CorpusBuilder::CorpusBuilder(std::string run_name, std::vector<AttributeSpec> attribute_specs) {
  std::unordered_set<std::string> names;
  for (const auto& s : attribute_specs) {
    validate_attribute_spec(s);
    if (!names.insert(s.name).second) fail(ErrorCode::kInvalidArgument, "duplicate attribute '" + s.name + "'");
  }
  corpus_.run_name_ = std::move(run_name);
  corpus_.attribute_specs_ = std::move(attribute_specs);
  corpus_.id_offsets_.push_back(0);
  corpus_.label_offsets_.push_back(0);
}

std::uint32_t CorpusBuilder::intern(std::string_view label) {
  auto it = interned_.find(std::string(label));
  if (it != interned_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(interned_names_.size());
  interned_names_.emplace_back(label);
  interned_.emplace(interned_names_.back(), id);
  return id;
}

void CorpusBuilder::add_id(std::string_view id) {
  if (id.empty()) fail(ErrorCode::kInvalidArgument, "record id must be a non-empty string");
  if (!ids_.emplace(id).second) fail(ErrorCode::kInvalidArgument, "duplicate data point id '" + std::string(id) + "'");
  corpus_.id_blob_.append(id);
  corpus_.id_offsets_.push_back(corpus_.id_blob_.size());
}

void CorpusBuilder::add(const DataPoint& point) {
  const auto& specs = corpus_.attribute_specs_;
  std::vector<std::uint64_t> masks(specs.size(), 0);
  for (const auto& [name, dirs] : point.attributes) {
    auto spec_it = std::find_if(specs.begin(), specs.end(), [&](const AttributeSpec& s) { return s.name == name; });
    if (spec_it == specs.end()) continue;
    const auto a = static_cast<std::size_t>(spec_it - specs.begin());
    for (const auto& d : dirs) {
      auto idx = spec_it->direction_index(d);
      if (!idx) {
        fail(ErrorCode::kInvalidArgument, "unknown direction '" + d + "' for attribute '" + name + "'");
      }
      masks[a] |= std::uint64_t{1} << *idx;
    }
  }
  std::vector<std::string_view> labels(point.labels.begin(), point.labels.end());
  add(point.id, labels, masks);
}

void CorpusBuilder::add(std::string_view id, std::span<const std::string_view> labels,
                        std::span<const std::uint64_t> direction_masks) {
  const auto& specs = corpus_.attribute_specs_;
  if (direction_masks.size() != specs.size()) {
    fail(ErrorCode::kInvalidArgument, "record carries " + std::to_string(direction_masks.size()) +
                                          " direction masks, expected " + std::to_string(specs.size()));
  }
  for (std::size_t a = 0; a < specs.size(); ++a) {
    const std::size_t n = specs[a].directions.size();
    if (n < 64 && (direction_masks[a] >> n) != 0) {
      fail(ErrorCode::kInvalidArgument, "direction mask out of range for attribute '" + specs[a].name + "'");
    }
  }
  for (auto l : labels) {
    if (l.empty()) fail(ErrorCode::kInvalidArgument, "record '" + std::string(id) + "' has an empty label");
  }
  add_id(id);
  scratch_.clear();
  for (auto l : labels) scratch_.push_back(intern(l));
  std::sort(scratch_.begin(), scratch_.end());
  scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());
  corpus_.label_ids_.insert(corpus_.label_ids_.end(), scratch_.begin(), scratch_.end());
  corpus_.label_offsets_.push_back(corpus_.label_ids_.size());
  corpus_.direction_masks_.insert(corpus_.direction_masks_.end(), direction_masks.begin(), direction_masks.end());
}

Corpus CorpusBuilder::build() && {
  // Renumber labels so ids follow sorted name order.
  std::vector<std::uint32_t> order(interned_names_.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return interned_names_[a] < interned_names_[b]; });
  std::vector<std::uint32_t> remap(order.size());
  corpus_.vocabulary_.clear();
  corpus_.vocabulary_.reserve(order.size());
  for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
    remap[order[rank]] = rank;
    corpus_.vocabulary_.push_back(std::move(interned_names_[order[rank]]));
  }
  for (auto& id : corpus_.label_ids_) id = remap[id];
  for (std::size_t i = 0; i + 1 < corpus_.label_offsets_.size(); ++i) {
    std::sort(corpus_.label_ids_.begin() + static_cast<std::ptrdiff_t>(corpus_.label_offsets_[i]),
              corpus_.label_ids_.begin() + static_cast<std::ptrdiff_t>(corpus_.label_offsets_[i + 1]));
  }
  ids_.clear();
  interned_.clear();
  interned_names_.clear();
  return std::move(corpus_);
}

// ---------------------------------------------------------------------------
// Reading

namespace {

DataPoint parse_record(const std::string& line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::kParse, "malformed JSON");
  if (!j.is_object()) fail(ErrorCode::kParse, "record must be a JSON object");
  DataPoint p;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) fail(ErrorCode::kParse, "record needs a string 'id'");
  p.id = id->get<std::string>();
  auto labels = j.find("labels");
  if (labels == j.end() || !labels->is_array()) fail(ErrorCode::kParse, "record needs a 'labels' array");
  for (const auto& l : *labels) {
    if (!l.is_string()) fail(ErrorCode::kParse, "labels must be strings");
    p.labels.push_back(l.get<std::string>());
  }
  auto attrs = j.find("attributes");
  if (attrs != j.end()) {
    if (!attrs->is_object()) fail(ErrorCode::kParse, "'attributes' must be an object");
    for (const auto& [name, dirs] : attrs->items()) {
      if (!dirs.is_array()) fail(ErrorCode::kParse, "attribute '" + name + "' must map to an array");
      auto& out = p.attributes[name];
      for (const auto& d : dirs) {
        if (!d.is_string()) fail(ErrorCode::kParse, "directions of '" + name + "' must be strings");
        out.push_back(d.get<std::string>());
      }
    }
  }
  return p;
}

}  // namespace

Corpus read_corpus(std::istream& in, std::string run_name, std::vector<AttributeSpec> attribute_specs) {
  CorpusBuilder builder(std::move(run_name), std::move(attribute_specs));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      builder.add(parse_record(line));
    } catch (const Error& e) {
      throw Error(e.code(), line_prefix(line_no) + e.what());
    }
  }
  if (in.bad()) {
    fail(ErrorCode::kIo, "corpus stream failed after " + std::to_string(builder.size()) + " records (line " +
                             std::to_string(line_no) + ")");
  }
  return std::move(builder).build();
}

Corpus load_corpus(const std::filesystem::path& path, std::string run_name,
                   std::vector<AttributeSpec> attribute_specs) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorCode::kNotFound, "corpus file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open corpus file " + path.string());
  try {
    return read_corpus(in, std::move(run_name), std::move(attribute_specs));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Embeddings

bool EmbeddingTable::contains(std::string_view label) const { return vectors_.find(label) != vectors_.end(); }

const std::vector<double>* EmbeddingTable::find(std::string_view label) const {
  auto it = vectors_.find(label);
  return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(std::string label, std::vector<double> vector) {
  if (vector.empty()) fail(ErrorCode::kInvalidArgument, "embedding for '" + label + "' has no values");
  if (dimension_ == 0) dimension_ = vector.size();
  if (vector.size() != dimension_) {
    fail(ErrorCode::kInvalidArgument, "embedding for '" + label + "' has " + std::to_string(vector.size()) +
                                          " values, expected " + std::to_string(dimension_));
  }
  if (std::all_of(vector.begin(), vector.end(), [](double v) { return v == 0.0; })) {
    fail(ErrorCode::kInvalidArgument, "embedding for '" + label + "' is the zero vector");
  }
  if (!std::all_of(vector.begin(), vector.end(), [](double v) { return std::isfinite(v); })) {
    fail(ErrorCode::kInvalidArgument, "embedding for '" + label + "' has non-finite values");
  }
  if (!vectors_.emplace(std::move(label), std::move(vector)).second) {
    fail(ErrorCode::kInvalidArgument, "duplicate embedding label");
  }
}

EmbeddingTable read_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string label;
    if (!(fields >> label)) continue;
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        fail(ErrorCode::kParse, line_prefix(line_no) + "non-numeric token '" + token + "'");
      }
      values.push_back(v);
    }
    try {
      table.insert(std::move(label), std::move(values));
    } catch (const Error& e) {
      throw Error(e.code(), line_prefix(line_no) + e.what());
    }
  }
  if (in.bad()) fail(ErrorCode::kIo, "embedding stream failed at line " + std::to_string(line_no));
  if (table.size() == 0) fail(ErrorCode::kInvalidArgument, "embedding file contains no vectors");
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorCode::kNotFound, "embedding file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open embedding file " + path.string());
  try {
    return read_embeddings(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace biaslens
