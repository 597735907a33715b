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

#include <gtest/gtest.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <string>
#include <vector>

#include "biaslens/api_service.hpp"
#include "biaslens/session.hpp"
#include "httplib.h"
#include "support/test_support.hpp"

namespace biaslens {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct Result {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Result cli(const std::string& args, const TempDir& dir) {
  const std::string err_path = (dir / "stderr.txt").string();
  const std::string cmd = quote(BIASLENS_CLI_PATH) + " " + args + " 2>" + quote(err_path);
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(err_path);
  return r;
}

void make_tiny(const TempDir& dir) {
  ASSERT_EQ(cli("fixtures tiny --out " + quote((dir / "tiny.jsonl").string()) + " --attributes-out " +
                    quote((dir / "attrs.json").string()),
                dir)
                .exit_code,
            0);
  const Result r = cli("compute --corpus tiny=" + quote((dir / "tiny.jsonl").string()) + " --attributes " +
                           quote((dir / "attrs.json").string()) + " --out " + quote((dir / "art").string()),
                       dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
}

TEST(CliTest, ComputeWritesGoldenRow) {
  TempDir dir;
  make_tiny(dir);
  const std::string text = read_file(dir / "art/tiny.metrics.tsv");
  EXPECT_NE(text.find("\nbasketball\tgender\tmale\tnpmi\t0.336773\t3\t4\t5\t10\n"), std::string::npos) << text;
}

TEST(CliTest, LinesSummary) {
  TempDir dir;
  make_tiny(dir);
  const Result r = cli("compute --corpus again=" + quote((dir / "tiny.jsonl").string()) + " --attributes " +
                           quote((dir / "attrs.json").string()) + " --out " + quote((dir / "art").string()) +
                           " --metric npmi --metric pmi --summary-format lines --shards 3",
                       dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("run=again points=10 labels=3 attributes=1 directions=2 rows=12 ", 0), 0u) << r.out;
}

TEST(CliTest, EmptyCorpusWritesHeaderOnlyArtifact) {
  TempDir dir;
  make_tiny(dir);
  write_file(dir / "empty.jsonl", "");
  const Result r = cli("compute --corpus empty=" + quote((dir / "empty.jsonl").string()) + " --attributes " +
                           quote((dir / "attrs.json").string()) + " --out " + quote((dir / "art").string()),
                       dir);
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const std::string text = read_file(dir / "art/empty.metrics.tsv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(CliTest, MalformedInputLeavesNothingBehind) {
  TempDir dir;
  make_tiny(dir);
  write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"labels\":[\"x\"]}\n{\"id\":\"b\",\"labels\":[\"y\"]\n");
  const Result r = cli("compute --corpus ok=" + quote((dir / "tiny.jsonl").string()) + " --corpus bad=" +
                           quote((dir / "bad.jsonl").string()) + " --attributes " +
                           quote((dir / "attrs.json").string()) + " --out " + quote((dir / "art").string()),
                       dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "art/ok.metrics.tsv"));
  EXPECT_FALSE(std::filesystem::exists(dir / "art/bad.metrics.tsv"));
  for (const auto& e : std::filesystem::directory_iterator(dir / "art")) {
    EXPECT_EQ(e.path().filename(), "tiny.metrics.tsv");
  }
}

TEST(CliTest, UsageErrorsExitOne) {
  TempDir dir;
  EXPECT_EQ(cli("", dir).exit_code, 1);
  EXPECT_EQ(cli("compute --attributes x", dir).exit_code, 1);
  EXPECT_EQ(cli("frobnicate", dir).exit_code, 1);
  EXPECT_EQ(cli("export --artifacts /nonexistent --session /nonexistent --out -", dir).exit_code, 1);
  make_tiny(dir);
  const Result dup = cli("compute --corpus a=" + quote((dir / "tiny.jsonl").string()) + " --corpus a=" +
                             quote((dir / "tiny.jsonl").string()) + " --attributes " +
                             quote((dir / "attrs.json").string()) + " --out " + quote((dir / "art").string()),
                         dir);
  EXPECT_EQ(dup.exit_code, 1);
}

TEST(CliTest, ExportMatchesApiBytes) {
  TempDir dir;
  make_tiny(dir);
  // A second run makes the report span two runs.
  ASSERT_EQ(cli("compute --corpus second=" + quote((dir / "tiny.jsonl").string()) + " --attributes " +
                    quote((dir / "attrs.json").string()) + " --out " + quote((dir / "art").string()),
                dir)
                .exit_code,
            0);
  save_session(SessionState{"art", 2, {"basketball", "tree"}, {}}, dir / "session.json");
  for (const std::string format : {"tsv", "lines"}) {
    const Result r = cli("export --artifacts " + quote((dir / "art").string()) + " --session " +
                             quote((dir / "session.json").string()) + " --format " + format + " --out -",
                         dir);
    ASSERT_EQ(r.exit_code, 0) << r.err;

    auto ws = std::make_shared<const Workspace>(Workspace::load(dir / "art", std::nullopt, "art"));
    ApiService api;
    api.initialize(ws, std::make_shared<SessionStore>(load_session(dir / "session.json", false)));
    const HttpResponse resp = api.handle({"GET", "/api/export", {{"format", format}}, ""});
    EXPECT_EQ(r.out, resp.body);
  }
  const Result to_file = cli("export --artifacts " + quote((dir / "art").string()) + " --session " +
                                 quote((dir / "session.json").string()) + " --out " +
                                 quote((dir / "report.tsv").string()),
                             dir);
  ASSERT_EQ(to_file.exit_code, 0);
  const std::string report = read_file(dir / "report.tsv");
  EXPECT_NE(report.find("second:npmi:gender:male:value"), std::string::npos);
  EXPECT_NE(report.find("\nbasketball\t0.336773\t3\t-0.301030\t1\t0.336773\t3\t-0.301030\t1\n"), std::string::npos)
      << report;
}

// Runs `biaslens serve` as a child process and reads the announced port.
class ServeProcess {
 public:
  ServeProcess(const std::vector<std::string>& args) {
    int fds[2];
    if (::pipe(fds) != 0) return;
    pid_ = ::fork();
    if (pid_ == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      std::vector<char*> argv;
      argv.push_back(const_cast<char*>(BIASLENS_CLI_PATH));
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      ::execv(BIASLENS_CLI_PATH, argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    FILE* f = ::fdopen(fds[0], "r");
    char line[256] = {0};
    if (f && std::fgets(line, sizeof line, f)) {
      const std::string s(line);
      const auto colon = s.rfind(':');
      if (colon != std::string::npos) port_ = std::atoi(s.c_str() + colon + 1);
    }
    if (f) std::fclose(f);
  }
  ~ServeProcess() {
    if (pid_ > 0 && !reaped_) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }
  int port() const { return port_; }
  int interrupt() {
    ::kill(pid_, SIGINT);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    reaped_ = true;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
  bool reaped_ = false;
};

TEST(CliTest, ServeShutsDownCleanlyAndPersistsSession) {
  TempDir dir;
  make_tiny(dir);
  const std::string session = (dir / "session.json").string();
  ServeProcess proc({"serve", "--artifacts", (dir / "art").string(), "--session", session, "--init", "--port", "0"});
  ASSERT_GT(proc.port(), 0);
  httplib::Client client("127.0.0.1", proc.port());
  int status = 0;
  for (int i = 0; i < 250 && status != 200; ++i) {
    auto res = client.Get("/api/workspace");
    status = res ? res->status : 0;
    if (status != 200) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_EQ(status, 200);
  auto res = client.Post("/api/session", R"({"action":"flag","labels":["ballet"],"expected_revision":0})",
                         "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(proc.interrupt(), 0);
  const SessionState s = load_session(session, false);
  EXPECT_EQ(s.flagged.count("ballet"), 1u);
  EXPECT_EQ(s.revision, 1u);
  EXPECT_EQ(s.workspace_id, "art");
}

TEST(CliTest, ServeRejectsMissingArtifacts) {
  TempDir dir;
  const Result r = cli("serve --artifacts " + quote((dir / "none").string()) + " --session " +
                           quote((dir / "s.json").string()) + " --init --port 0",
                       dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliTest, FixturesAreSeedDeterministic) {
  TempDir dir;
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(cli(std::string("fixtures random --seed 5 --points 300 --out ") + quote((dir / name).string()), dir)
                  .exit_code,
              0);
  }
  EXPECT_EQ(read_file(dir / "a"), read_file(dir / "b"));
  EXPECT_FALSE(read_file(dir / "a").empty());
  ASSERT_EQ(cli("fixtures clusters --points 5 --out " + quote((dir / "emb.txt").string()), dir).exit_code, 0);
  EXPECT_EQ(load_embeddings(dir / "emb.txt").size(), 15u);
}

}  // namespace
}  // namespace biaslens
