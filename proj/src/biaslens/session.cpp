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

#include "biaslens/session.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "biaslens/artifact.hpp"
#include "biaslens/error.hpp"
#include "json.hpp"

namespace biaslens {

using nlohmann::json;

std::string_view to_string(SessionAction action) {
  switch (action) {
    case SessionAction::kFlag:
      return "flag";
    case SessionAction::kUnflag:
      return "unflag";
    case SessionAction::kHide:
      return "hide";
    case SessionAction::kUnhide:
      return "unhide";
  }
  return "flag";
}

SessionAction parse_session_action(std::string_view name) {
  if (name == "flag") return SessionAction::kFlag;
  if (name == "unflag") return SessionAction::kUnflag;
  if (name == "hide") return SessionAction::kHide;
  if (name == "unhide") return SessionAction::kUnhide;
  throw FieldError(ErrorCode::kInvalidArgument, "action", "unknown session action '" + std::string(name) + "'");
}

SessionState mutate(SessionState state, SessionAction action, const std::set<std::string, std::less<>>& labels) {
  if (labels.empty()) throw FieldError(ErrorCode::kInvalidArgument, "labels", "label set must not be empty");
  switch (action) {
    case SessionAction::kFlag:
      state.flagged.insert(labels.begin(), labels.end());
      break;
    case SessionAction::kUnflag:
      for (const auto& l : labels) state.flagged.erase(l);
      break;
    case SessionAction::kHide:
      state.hidden.insert(labels.begin(), labels.end());
      break;
    case SessionAction::kUnhide:
      for (const auto& l : labels) state.hidden.erase(l);
      break;
  }
  ++state.revision;
  return state;
}

std::string serialize_session(const SessionState& state) {
  json j;
  j["workspace_id"] = state.workspace_id;
  j["revision"] = state.revision;
  j["flagged"] = std::vector<std::string>(state.flagged.begin(), state.flagged.end());
  j["hidden"] = std::vector<std::string>(state.hidden.begin(), state.hidden.end());
  return j.dump(2) + "\n";
}

SessionState parse_session(std::string_view text) {
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::kCorrupt, "session file is not a JSON object");
  SessionState s;
  auto ws = j.find("workspace_id");
  auto rev = j.find("revision");
  auto flagged = j.find("flagged");
  auto hidden = j.find("hidden");
  if (ws == j.end() || !ws->is_string()) fail(ErrorCode::kCorrupt, "session file lacks 'workspace_id'");
  if (rev == j.end() || !rev->is_number_unsigned()) fail(ErrorCode::kCorrupt, "session file lacks a valid 'revision'");
  if (flagged == j.end() || !flagged->is_array()) fail(ErrorCode::kCorrupt, "session file lacks 'flagged'");
  if (hidden == j.end() || !hidden->is_array()) fail(ErrorCode::kCorrupt, "session file lacks 'hidden'");
  s.workspace_id = ws->get<std::string>();
  s.revision = rev->get<std::uint64_t>();
  for (const auto& l : *flagged) {
    if (!l.is_string()) fail(ErrorCode::kCorrupt, "session 'flagged' must hold strings");
    s.flagged.insert(l.get<std::string>());
  }
  for (const auto& l : *hidden) {
    if (!l.is_string()) fail(ErrorCode::kCorrupt, "session 'hidden' must hold strings");
    s.hidden.insert(l.get<std::string>());
  }
  return s;
}

std::filesystem::path write_session_temp(const SessionState& state, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write session file " + tmp.string());
    out << serialize_session(state);
    out.flush();
    if (!out) fail(ErrorCode::kIo, "failed writing session file " + tmp.string());
  }
  return tmp;
}

void save_session(const SessionState& state, const std::filesystem::path& path) {
  const auto tmp = write_session_temp(state, path);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot replace session file " + path.string() + ": " + ec.message());
}

SessionState load_session(const std::filesystem::path& path, bool init_if_missing, std::string_view workspace_id) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    if (!init_if_missing) fail(ErrorCode::kNotFound, "session file not found: " + path.string());
    SessionState s;
    s.workspace_id = std::string(workspace_id);
    return s;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read session file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_session(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": corrupt session: " + e.what());
  }
}

SessionStore::SessionStore(SessionState initial, std::optional<std::filesystem::path> path)
    : state_(std::move(initial)), path_(std::move(path)) {}

SessionState SessionStore::snapshot() const {
  std::lock_guard lock(mu_);
  return state_;
}

SessionStore::MutationResult SessionStore::apply(SessionAction action,
                                                 const std::set<std::string, std::less<>>& labels,
                                                 std::optional<std::uint64_t> expected_revision) {
  std::lock_guard lock(mu_);
  if (expected_revision && *expected_revision != state_.revision) return {false, state_};
  SessionState next = mutate(state_, action, labels);
  if (path_) save_session(next, *path_);
  state_ = std::move(next);
  return {true, state_};
}

void SessionStore::persist() const {
  std::lock_guard lock(mu_);
  if (path_) save_session(state_, *path_);
}

// ---------------------------------------------------------------------------
// Reports

ReportFormat parse_report_format(std::string_view name) {
  if (name == "tsv") return ReportFormat::kTsv;
  if (name == "lines") return ReportFormat::kLines;
  throw FieldError(ErrorCode::kInvalidArgument, "format", "unknown report format '" + std::string(name) + "'");
}

std::string export_report(const SessionState& state, const Workspace& workspace,
                          std::span<const MetricSelector> selectors, ReportFormat format) {
  if (workspace.runs().empty()) fail(ErrorCode::kInvalidArgument, "export needs at least one loaded run");

  struct Column {
    std::string prefix;
    std::optional<Workspace::Resolved> resolved;
  };
  std::vector<Column> columns;
  for (std::size_t r = 0; r < workspace.runs().size(); ++r) {
    for (const auto& sel : selectors) {
      columns.push_back(Column{workspace.runs()[r].name + ":" + to_string(sel), workspace.resolve(r, sel)});
    }
  }

  std::string out;
  if (format == ReportFormat::kTsv) {
    out += "label";
    for (const auto& c : columns) {
      out += '\t';
      out += c.prefix;
      out += ":value\t";
      out += c.prefix;
      out += ":count";
    }
    out += '\n';
  }
  for (const auto& label : state.flagged) {
    const auto index = workspace.label_index(label);
    out += label;
    for (const auto& c : columns) {
      std::string value;
      std::string count;
      if (index && c.resolved) {
        const Cell cell = Workspace::evaluate(*c.resolved, *index);
        if (!cell.parts.empty()) {
          value = format_value(cell.value);
          std::uint64_t n = cell.parts[0].joint_count;
          for (const auto& p : cell.parts) n = std::min(n, p.joint_count);
          count = std::to_string(n);
        }
      }
      if (format == ReportFormat::kTsv) {
        out += '\t';
        out += value;
        out += '\t';
        out += count;
      } else {
        out += ' ';
        out += c.prefix;
        out += ":value=";
        out += value;
        out += ' ';
        out += c.prefix;
        out += ":count=";
        out += count;
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace biaslens
