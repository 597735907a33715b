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

#ifndef BIASLENS_SELECTOR_HPP_
#define BIASLENS_SELECTOR_HPP_

#include <optional>
#include <string>
#include <string_view>

#include "biaslens/metrics.hpp"

namespace biaslens {

// Names one metric column: either a single direction, or the difference
// between two directions of the same attribute.
//
// Canonical string forms:
//   <kind>:<attribute>:<direction>               e.g. npmi:gender:male
//   <kind>:<attribute>:<positive>:<negative>     e.g. npmi:gender:male:female
struct MetricSelector {
  MetricKind kind = MetricKind::kNpmi;
  std::string attribute;
  std::string direction;                // the positive direction for diffs
  std::optional<std::string> negative;  // set for diffs

  bool is_diff() const { return negative.has_value(); }

  static MetricSelector for_direction(MetricKind kind, std::string attribute, std::string direction);
  static MetricSelector for_diff(MetricKind kind, std::string attribute, std::string positive, std::string negative);

  auto operator<=>(const MetricSelector&) const = default;
  bool operator==(const MetricSelector&) const = default;
};

std::string to_string(const MetricSelector& selector);
// Throws FieldError(kInvalidArgument, "selector") on malformed input.
MetricSelector parse_selector(std::string_view text);

// Domain of the values a selector produces; nullopt when unbounded (PMI).
std::optional<ValueDomain> selector_domain(const MetricSelector& selector);

}  // namespace biaslens

#endif  // BIASLENS_SELECTOR_HPP_
