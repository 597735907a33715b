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

#include "biaslens/selector.hpp"

#include <vector>

#include "biaslens/error.hpp"

namespace biaslens {

MetricSelector MetricSelector::for_direction(MetricKind kind, std::string attribute, std::string direction) {
  return MetricSelector{kind, std::move(attribute), std::move(direction), std::nullopt};
}

MetricSelector MetricSelector::for_diff(MetricKind kind, std::string attribute, std::string positive,
                                        std::string negative) {
  return MetricSelector{kind, std::move(attribute), std::move(positive), std::move(negative)};
}

std::string to_string(const MetricSelector& s) {
  std::string out(to_string(s.kind));
  out += ':';
  out += s.attribute;
  out += ':';
  out += s.direction;
  if (s.negative) {
    out += ':';
    out += *s.negative;
  }
  return out;
}

MetricSelector parse_selector(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 3 && parts.size() != 4) {
    throw FieldError(ErrorCode::kInvalidArgument, "selector",
                     "selector '" + std::string(text) + "' must look like kind:attribute:direction[:negative]");
  }
  for (auto p : parts) {
    if (p.empty()) throw FieldError(ErrorCode::kInvalidArgument, "selector", "selector '" + std::string(text) + "' has an empty part");
  }
  MetricKind kind;
  try {
    kind = parse_metric_kind(parts[0]);
  } catch (const Error& e) {
    throw FieldError(ErrorCode::kInvalidArgument, "selector", e.what());
  }
  if (parts.size() == 3) return MetricSelector::for_direction(kind, std::string(parts[1]), std::string(parts[2]));
  if (parts[2] == parts[3]) {
    throw FieldError(ErrorCode::kInvalidArgument, "selector", "diff selector needs two different directions");
  }
  return MetricSelector::for_diff(kind, std::string(parts[1]), std::string(parts[2]), std::string(parts[3]));
}

std::optional<ValueDomain> selector_domain(const MetricSelector& selector) {
  return selector.is_diff() ? diff_domain(selector.kind) : direction_domain(selector.kind);
}

}  // namespace biaslens
