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

// biaslens: offline metric computation, the interactive service, report
// export and fixture generation.
//
//   biaslens compute --corpus name=path... --attributes path --metric npmi --out dir --shards k
//   biaslens serve   --artifacts dir --embeddings path --session path --port p
//   biaslens export  --artifacts dir --session path --format tsv --out path
//   biaslens fixtures <tiny|continent|random|scale|clusters> --out path
//
// Exit codes: 0 success, 1 input error, 2 internal error.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "biaslens/biaslens.h"

namespace {

constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

int report(bl_status status) {
  std::cerr << "biaslens: error: " << bl_last_error() << " [" << bl_status_name(status) << "]\n";
  return status == BL_INTERNAL ? kExitInternal : kExitInput;
}

struct ComputeArgs {
  std::vector<std::string> corpora;
  std::string attributes;
  std::vector<std::string> metrics{"npmi"};
  std::string out;
  unsigned shards = 1;
  std::string summary_format = "text";
};

int run_compute(const ComputeArgs& args) {
  struct Run {
    std::string name;
    std::string path;
  };
  std::vector<Run> runs;
  std::set<std::string> names;
  for (const auto& spec : args.corpora) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      std::cerr << "biaslens: error: --corpus expects name=path, got '" << spec << "'\n";
      return kExitInput;
    }
    Run r{spec.substr(0, eq), spec.substr(eq + 1)};
    if (!names.insert(r.name).second) {
      std::cerr << "biaslens: error: duplicate run name '" << r.name << "'\n";
      return kExitInput;
    }
    runs.push_back(std::move(r));
  }
  std::vector<const char*> kinds;
  for (const auto& m : args.metrics) kinds.push_back(m.c_str());

  std::vector<std::filesystem::path> written;
  for (const auto& run : runs) {
    bl_compute_summary summary{};
    const bl_status st = bl_compute(run.name.c_str(), run.path.c_str(), args.attributes.c_str(), kinds.data(),
                                    kinds.size(), args.out.c_str(), args.shards, &summary);
    if (st != BL_OK) {
      const int code = report(st);
      std::error_code ec;
      for (const auto& p : written) std::filesystem::remove(p, ec);
      return code;
    }
    bl_buffer path{};
    bl_artifact_path(args.out.c_str(), run.name.c_str(), &path);
    written.emplace_back(path.data);
    if (summary.total_points == 0) {
      std::cerr << "biaslens: warning: corpus for run '" << run.name << "' is empty; wrote a header-only artifact\n";
    }
    if (args.summary_format == "lines") {
      std::cout << "run=" << run.name << " points=" << summary.total_points << " labels=" << summary.vocabulary_size
                << " attributes=" << summary.attribute_count << " directions=" << summary.direction_count
                << " rows=" << summary.rows_written << " elapsed_seconds=" << summary.elapsed_seconds
                << " artifact=" << path.data << '\n';
    } else {
      std::cout << "run " << run.name << ": " << summary.total_points << " data points, " << summary.vocabulary_size
                << " labels, " << summary.direction_count << " directions, " << summary.rows_written << " rows in "
                << summary.elapsed_seconds << " s -> " << path.data << '\n';
    }
    bl_buffer_free(&path);
  }
  return 0;
}

struct ServeArgs {
  std::string artifacts;
  std::string embeddings;
  std::string session;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string workspace;
  std::string cors_origin = "*";
  bool init = false;
};

int run_serve(const ServeArgs& args) {
  // Route SIGINT/SIGTERM to a watcher thread so shutdown runs outside
  // signal context. SIGUSR1 releases the watcher on a normal exit.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGUSR1);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  bl_server_config config{};
  config.artifacts_dir = args.artifacts.c_str();
  config.embeddings_path = args.embeddings.empty() ? nullptr : args.embeddings.c_str();
  config.session_path = args.session.c_str();
  config.workspace_id = args.workspace.empty() ? nullptr : args.workspace.c_str();
  config.host = args.host.c_str();
  config.port = args.port;
  config.static_dir = args.static_dir.empty() ? nullptr : args.static_dir.c_str();
  config.cors_origin = args.cors_origin.c_str();
  config.init_session = args.init ? 1 : 0;
  config.bind_socket = 1;

  bl_server* server = nullptr;
  if (bl_status st = bl_server_create(&config, &server); st != BL_OK) return report(st);

  std::thread watcher([server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    if (sig != SIGUSR1) {
      std::cerr << "biaslens: shutting down\n";
      bl_server_stop(server);
    }
  });
  std::cout << "serving http://" << args.host << ':' << bl_server_port(server) << "/" << std::endl;

  const bl_status run_status = bl_server_run(server);
  int code = run_status == BL_OK ? 0 : report(run_status);
  pthread_kill(watcher.native_handle(), SIGUSR1);
  watcher.join();
  if (bl_status st = bl_server_destroy(server); st != BL_OK && code == 0) code = report(st);
  return code;
}

struct ExportArgs {
  std::string artifacts;
  std::string session;
  std::string format = "tsv";
  std::string out;
};

int run_export(const ExportArgs& args) {
  bl_buffer buf{};
  if (bl_status st = bl_export_report(args.artifacts.c_str(), args.session.c_str(), args.format.c_str(), &buf);
      st != BL_OK) {
    return report(st);
  }
  int code = 0;
  if (args.out == "-") {
    std::cout.write(buf.data, static_cast<std::streamsize>(buf.size));
    std::cout.flush();
  } else {
    std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
    out.write(buf.data, static_cast<std::streamsize>(buf.size));
    out.close();
    if (!out) {
      std::cerr << "biaslens: error: cannot write " << args.out << '\n';
      std::error_code ec;
      std::filesystem::remove(args.out, ec);
      code = kExitInput;
    }
  }
  bl_buffer_free(&buf);
  return code;
}

struct FixtureArgs {
  std::string name;
  std::string out;
  std::string attributes_out;
  std::uint64_t seed = 1;
  std::uint64_t points = 0;
  std::uint64_t labels = 0;
};

int run_fixtures(const FixtureArgs& args) {
  bl_fixture_options options{};
  options.name = args.name.c_str();
  options.out_path = args.out.c_str();
  options.attributes_path = args.attributes_out.empty() ? nullptr : args.attributes_out.c_str();
  options.seed = args.seed;
  options.points = args.points;
  options.labels = args.labels;
  if (bl_status st = bl_write_fixture(&options); st != BL_OK) return report(st);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BiasLens: correlation-based bias analysis of labeled datasets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bl_version()));

  ComputeArgs compute;
  auto* c = app.add_subcommand("compute", "Count co-occurrences and write metric artifacts");
  c->add_option("--corpus", compute.corpora, "Corpus as run_name=path (repeatable)")->required();
  c->add_option("--attributes", compute.attributes, "Attribute vocabulary file")->required();
  c->add_option("--metric", compute.metrics, "Metric kind: npmi, pmi, jaccard, dice (repeatable)")
      ->check(CLI::IsMember({"npmi", "pmi", "jaccard", "dice"}));
  c->add_option("--out", compute.out, "Output directory")->required();
  c->add_option("--shards", compute.shards, "Parallel counting shards")->check(CLI::Range(1u, 4096u));
  c->add_option("--summary-format", compute.summary_format, "text or lines")
      ->check(CLI::IsMember({"text", "lines"}));

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Serve the workbench API");
  s->add_option("--artifacts", serve.artifacts, "Directory of *.metrics.tsv artifacts")->required();
  s->add_option("--embeddings", serve.embeddings, "Label embedding file");
  s->add_option("--session", serve.session, "Session file")->required();
  s->add_option("--port", serve.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  s->add_option("--host", serve.host, "Bind address");
  s->add_option("--static", serve.static_dir, "Directory of web UI assets");
  s->add_option("--workspace", serve.workspace, "Workspace id (defaults to the artifact directory name)");
  s->add_option("--cors-origin", serve.cors_origin, "Allowed CORS origin");
  s->add_flag("--init", serve.init, "Start an empty session when the session file is missing");

  ExportArgs exp;
  auto* e = app.add_subcommand("export", "Write the flagged-label report");
  e->add_option("--artifacts", exp.artifacts, "Directory of *.metrics.tsv artifacts")->required();
  e->add_option("--session", exp.session, "Session file")->required();
  e->add_option("--format", exp.format, "tsv or lines")->check(CLI::IsMember({"tsv", "lines"}));
  e->add_option("--out", exp.out, "Output path, or - for standard output")->required();

  FixtureArgs fx;
  auto* f = app.add_subcommand("fixtures", "Generate fixture corpora and embeddings");
  f->add_option("name", fx.name, "tiny, continent, random, scale or clusters")
      ->required()
      ->check(CLI::IsMember({"tiny", "continent", "random", "scale", "clusters"}));
  f->add_option("--out", fx.out, "Corpus (or embedding) output path")->required();
  f->add_option("--attributes-out", fx.attributes_out, "Attribute vocabulary output path");
  f->add_option("--seed", fx.seed, "Generator seed");
  f->add_option("--points", fx.points, "Data points (clusters: points per cluster)");
  f->add_option("--labels", fx.labels, "Label vocabulary size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*c) return run_compute(compute);
    if (*s) return run_serve(serve);
    if (*e) return run_export(exp);
    if (*f) return run_fixtures(fx);
  } catch (const std::exception& ex) {
    std::cerr << "biaslens: internal error: " << ex.what() << '\n';
    return kExitInternal;
  }
  return kExitInput;
}
