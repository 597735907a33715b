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

// Triage state (flagged / hidden labels), its persistence, and report
// export.
//
// Session file:
//   {"workspace_id": "...", "revision": 7, "flagged": [...], "hidden": [...]}
// with both arrays sorted.

#ifndef BIASLENS_SESSION_HPP_
#define BIASLENS_SESSION_HPP_

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "biaslens/selector.hpp"
#include "biaslens/workspace.hpp"

namespace biaslens {

enum class SessionAction { kFlag, kUnflag, kHide, kUnhide };

std::string_view to_string(SessionAction action);
SessionAction parse_session_action(std::string_view name);

struct SessionState {
  std::string workspace_id;
  std::uint64_t revision = 0;
  std::set<std::string, std::less<>> flagged;
  std::set<std::string, std::less<>> hidden;

  bool operator==(const SessionState&) const = default;
};

// Applies the action and bumps the revision. Labels unknown to any run are
// accepted. Throws Error(kInvalidArgument) when `labels` is empty.
SessionState mutate(SessionState state, SessionAction action, const std::set<std::string, std::less<>>& labels);

std::string serialize_session(const SessionState& state);
// Throws Error(kCorrupt) on anything that is not a well-formed session.
SessionState parse_session(std::string_view text);

// Writes `<path>.tmp` and renames it over `path`.
void save_session(const SessionState& state, const std::filesystem::path& path);
// First half of save_session: writes and flushes the temporary file and
// returns its path without touching `path`.
std::filesystem::path write_session_temp(const SessionState& state, const std::filesystem::path& path);

// A missing file is an error unless `init_if_missing`, in which case an
// empty state (revision 0) for `workspace_id` is returned. A present but
// unreadable file is always an error.
SessionState load_session(const std::filesystem::path& path, bool init_if_missing, std::string_view workspace_id = {});

// Serialized owner of a SessionState, optionally persisted after every
// mutation.
class SessionStore {
 public:
  struct MutationResult {
    bool applied = false;  // false: stale expected_revision
    SessionState state;
  };

  explicit SessionStore(SessionState initial, std::optional<std::filesystem::path> path = std::nullopt);

  SessionState snapshot() const;
  // Rejects the mutation (applied=false, current state) when
  // expected_revision is given and differs from the current revision.
  MutationResult apply(SessionAction action, const std::set<std::string, std::less<>>& labels,
                       std::optional<std::uint64_t> expected_revision = std::nullopt);
  void persist() const;

 private:
  mutable std::mutex mu_;
  SessionState state_;
  std::optional<std::filesystem::path> path_;
};

enum class ReportFormat { kTsv, kLines };

ReportFormat parse_report_format(std::string_view name);

// One row per flagged label (ascending), with value and joint count for
// every run x selector. TSV header:
//   label<TAB><run>:<selector>:value<TAB><run>:<selector>:count...
// For diff selectors the count column holds the smaller of the two joint
// counts. Cells are empty where a run has no value.
std::string export_report(const SessionState& state, const Workspace& workspace,
                          std::span<const MetricSelector> selectors, ReportFormat format);

}  // namespace biaslens

#endif  // BIASLENS_SESSION_HPP_
