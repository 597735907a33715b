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

#include "biaslens/artifact.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "biaslens/error.hpp"

namespace biaslens {

std::string format_value(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, 6);
  if (ec != std::errc()) fail(ErrorCode::kInternal, "cannot format value");
  std::string s(buf, ptr);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string format_value(const std::optional<double>& value) { return value ? format_value(*value) : std::string(); }

void write_metric_artifact(std::ostream& out, std::span<const RunMetrics> blocks) {
  for (const auto& b : blocks) {
    if (b.run_name != blocks.front().run_name) {
      fail(ErrorCode::kInvalidArgument, "artifact blocks must belong to one run");
    }
  }
  std::vector<std::string> labels;
  for (const auto& b : blocks) labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  out << kArtifactHeader << '\n';
  std::string line;
  for (const auto& label : labels) {
    for (const auto& b : blocks) {
      auto l = b.label_index(label);
      if (!l) continue;
      for (std::size_t d = 0; d < b.direction_size(); ++d) {
        const MetricValue& v = b.at(*l, d);
        line.clear();
        line += label;
        line += '\t';
        line += b.attribute.name;
        line += '\t';
        line += b.attribute.directions[d];
        line += '\t';
        line += to_string(b.kind);
        line += '\t';
        line += format_value(v.value);
        line += '\t';
        line += std::to_string(v.joint_count);
        line += '\t';
        line += std::to_string(v.label_count);
        line += '\t';
        line += std::to_string(v.direction_count);
        line += '\t';
        line += std::to_string(b.total_points);
        line += '\n';
        out << line;
      }
    }
  }
}

std::string format_metric_artifact(std::span<const RunMetrics> blocks) {
  std::ostringstream out;
  write_metric_artifact(out, blocks);
  return out.str();
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::uint64_t parse_count(std::string_view s, std::string_view column) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kParse, "column " + std::string(column) + ": not a count: '" + std::string(s) + "'");
  }
  return v;
}

struct Block {
  std::string attribute;
  MetricKind kind;
  std::vector<std::string> directions;
  bool directions_closed = false;
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<MetricValue>>> rows;
};

}  // namespace

std::vector<RunMetrics> read_metric_artifact(std::istream& in, const std::string& run_name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail(ErrorCode::kParse, "metric artifact is empty (missing header)");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kArtifactHeader) fail(ErrorCode::kParse, "line 1: unexpected metric artifact header");

  std::vector<Block> blocks;
  std::map<std::pair<std::string, MetricKind>, std::size_t> block_index;
  std::optional<std::uint64_t> total;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto f = split_tabs(line);
      if (f.size() != 9) fail(ErrorCode::kParse, "expected 9 columns, got " + std::to_string(f.size()));
      if (f[0].empty()) fail(ErrorCode::kParse, "empty label");
      const MetricKind kind = parse_metric_kind(f[3]);
      MetricValue v;
      if (!f[4].empty()) {
        double x = 0.0;
        auto [ptr, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), x);
        if (ec != std::errc() || ptr != f[4].data() + f[4].size()) {
          fail(ErrorCode::kParse, "column value: not a number: '" + std::string(f[4]) + "'");
        }
        v.value = x;
      }
      v.joint_count = parse_count(f[5], "joint_count");
      v.label_count = parse_count(f[6], "label_count");
      v.direction_count = parse_count(f[7], "direction_count");
      const std::uint64_t t = parse_count(f[8], "total");
      if (total && *total != t) fail(ErrorCode::kCorrupt, "total differs from earlier rows");
      total = t;

      const std::pair<std::string, MetricKind> key{std::string(f[1]), kind};
      auto [it, inserted] = block_index.emplace(key, blocks.size());
      if (inserted) blocks.push_back(Block{key.first, kind, {}, false, {}, {}});
      Block& b = blocks[it->second];

      const std::string label(f[0]);
      if (b.labels.empty() || b.labels.back() != label) {
        if (!b.labels.empty()) {
          b.directions_closed = true;
          if (label < b.labels.back()) fail(ErrorCode::kCorrupt, "rows are not sorted by label");
        }
        b.labels.push_back(label);
        b.rows.emplace_back(b.directions_closed ? b.directions.size() : 0);
      }
      auto dir_it = std::find(b.directions.begin(), b.directions.end(), f[2]);
      std::size_t d = static_cast<std::size_t>(dir_it - b.directions.begin());
      if (dir_it == b.directions.end()) {
        if (b.directions_closed) fail(ErrorCode::kCorrupt, "unknown direction '" + std::string(f[2]) + "'");
        b.directions.emplace_back(f[2]);
        b.rows.back().emplace_back();
      }
      auto& slot = b.rows.back()[d];
      if (slot) fail(ErrorCode::kCorrupt, "duplicate row for direction '" + std::string(f[2]) + "'");
      slot = v;
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) fail(ErrorCode::kIo, "metric artifact stream failed at line " + std::to_string(line_no));

  std::vector<RunMetrics> out;
  for (auto& b : blocks) {
    RunMetrics m;
    m.run_name = run_name;
    m.attribute = AttributeSpec{b.attribute, b.directions};
    validate_attribute_spec(m.attribute);
    m.kind = b.kind;
    m.total_points = total.value_or(0);
    m.labels = b.labels;
    const std::size_t n_dirs = b.directions.size();
    m.values.reserve(b.labels.size() * n_dirs);
    for (std::size_t l = 0; l < b.labels.size(); ++l) {
      if (b.rows[l].size() != n_dirs) {
        fail(ErrorCode::kCorrupt, "label '" + b.labels[l] + "' lacks rows for some directions of '" + b.attribute + "'");
      }
      for (std::size_t d = 0; d < n_dirs; ++d) {
        if (!b.rows[l][d]) {
          fail(ErrorCode::kCorrupt, "label '" + b.labels[l] + "' lacks direction '" + b.directions[d] + "'");
        }
        const MetricValue& v = *b.rows[l][d];
        if (v.label_count != b.rows[l][0]->label_count) {
          fail(ErrorCode::kCorrupt, "label '" + b.labels[l] + "' has inconsistent label_count");
        }
        if (l > 0 && v.direction_count != b.rows[0][d]->direction_count) {
          fail(ErrorCode::kCorrupt, "direction '" + b.directions[d] + "' has inconsistent direction_count");
        }
        m.values.push_back(v);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<RunMetrics> load_metric_artifact(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  if (name.size() <= kArtifactSuffix.size() || !name.ends_with(kArtifactSuffix)) {
    fail(ErrorCode::kInvalidArgument, "not a metric artifact file name: " + name);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kNotFound, "cannot open metric artifact " + path.string());
  try {
    return read_metric_artifact(in, name.substr(0, name.size() - kArtifactSuffix.size()));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::filesystem::path artifact_path(const std::filesystem::path& dir, std::string_view run_name) {
  return dir / (std::string(run_name) + std::string(kArtifactSuffix));
}

std::vector<std::filesystem::path> list_metric_artifacts(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorCode::kNotFound, "artifact directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > kArtifactSuffix.size() && name.ends_with(kArtifactSuffix)) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

}  // namespace biaslens
