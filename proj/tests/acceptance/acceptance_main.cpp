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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and budgets are pinned below.

#include <sys/resource.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "biaslens/api_service.hpp"
#include "biaslens/artifact.hpp"
#include "biaslens/counts.hpp"
#include "biaslens/distribution.hpp"
#include "biaslens/error.hpp"
#include "biaslens/fixtures.hpp"
#include "biaslens/projection.hpp"
#include "biaslens/query.hpp"
#include "biaslens/session.hpp"
#include "json.hpp"
#include "support/query_oracle.hpp"
#include "support/test_support.hpp"

namespace biaslens {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kOracleTolerance = 1e-9;
constexpr double kExtremeTolerance = 1e-12;
constexpr double kNpmiBudgetSeconds = 30.0;
constexpr double kCountBudgetSeconds = 60.0;
constexpr double kMemoryBudgetBytes = 2.0 * 1024 * 1024 * 1024;
constexpr double kQueryBudgetMs = 100.0;
constexpr double kMinTrustworthiness = 0.8;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double peak_rss_bytes() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_maxrss) * 1024.0;
}

// Collects failed expectations and a short summary for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  bool ok() const { return failed_ == 0; }
  std::string detail() const {
    std::string out = notes_;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + std::string("failed: ") + f;
    if (failed_ > failures_.size()) out += "; +" + std::to_string(failed_ - failures_.size()) + " more";
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
  std::string notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Metric blocks shared between the scale and API criteria.
struct ScaleState {
  std::vector<RunMetrics> primary;
  std::vector<RunMetrics> secondary;
};
ScaleState g_scale;

// ---------------------------------------------------------------------------

Check npmi_correctness() {
  Check c;
  const auto start = Clock::now();
  Rng rng(20260101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    fixtures::FixtureSpec spec;
    spec.seed = rng.next();
    spec.points = 1 + rng.below(1000);
    spec.labels = 1 + rng.below(50);
    spec.label_rate = 0.02 + 0.5 * rng.uniform();
    spec.attribute = {"attr", {}};
    const std::size_t k = 2 + rng.below(4);
    for (std::size_t d = 0; d < k; ++d) spec.attribute.directions.push_back("d" + std::to_string(d));
    spec.extra_direction_rate = 0.3 * rng.uniform();
    spec.missing_direction_rate = 0.3 * rng.uniform();
    const auto points = fixtures::random_points(spec);
    const Corpus corpus = testing::build_corpus(points, {spec.attribute});
    const RunMetrics engine = compute_run_metrics(count_cooccurrences(corpus, spec.attribute), MetricKind::kNpmi);
    const RunMetrics oracle = fixtures::oracle_metrics(points, spec.attribute, MetricKind::kNpmi);
    c.expect(engine.labels == oracle.labels, "label sets differ in corpus " + std::to_string(trial));
    if (engine.labels != oracle.labels) continue;
    for (std::size_t i = 0; i < engine.values.size(); ++i) {
      const auto& e = engine.values[i];
      const auto& o = oracle.values[i];
      c.expect(e.joint_count == o.joint_count && e.label_count == o.label_count &&
                   e.direction_count == o.direction_count,
               "counts differ in corpus " + std::to_string(trial));
      c.expect(e.value.has_value() == o.value.has_value(), "presence differs in corpus " + std::to_string(trial));
      if (e.value && o.value) {
        const double err = std::abs(*e.value - *o.value);
        worst = std::max(worst, err);
        c.expect(err <= kOracleTolerance, "value off by " + fmt("%.3g", err));
      }
    }
  }

  // Extremes through the full counting path on hand-built corpora.
  const AttributeSpec attr{"g", {"a", "b"}};
  std::vector<DataPoint> pts;
  for (int i = 0; i < 40; ++i) {
    DataPoint p;
    p.id = "x" + std::to_string(i);
    const bool a = i < 20;
    p.attributes["g"] = {a ? "a" : "b"};
    if (a) p.labels.push_back("same_as_a");                // identical occurrence set
    if (!a && i % 3 == 0) p.labels.push_back("never_a");   // joint with a is zero
    if (i % 2 == 0) p.labels.push_back("independent");     // 10 of 20 in each direction
    pts.push_back(std::move(p));
  }
  const RunMetrics m =
      compute_run_metrics(count_cooccurrences(testing::build_corpus(pts, {attr}), attr), MetricKind::kNpmi);
  auto value = [&](const char* label) { return *m.at(*m.label_index(label), 0).value; };
  c.expect(value("never_a") == -1.0, "joint=0 is not exactly -1");
  c.expect(std::abs(value("same_as_a") - 1.0) <= kExtremeTolerance, "identical sets not +1");
  c.expect(std::abs(value("independent")) <= kExtremeTolerance, "independence not 0");
  double worst_extreme = 0.0;
  for (std::uint64_t total = 2; total <= 400; total += 7) {
    for (std::uint64_t cx = 1; cx <= total; cx += 3) {
      if (cx < total) c.expect(npmi_value(0, cx, total - cx, total) == -1.0, "joint=0 sweep not -1");
      const auto same = npmi_value(cx, cx, cx, total);
      if (cx < total) {
        c.expect(same && std::abs(*same - 1.0) <= kExtremeTolerance, "identical sweep not +1");
      } else {
        // Both on every point: pmi and its normalizer vanish; defined as 0.
        c.expect(same && *same == 0.0, "everywhere-present pair not 0");
      }
      for (std::uint64_t cy = 1; cy <= total; cy += 5) {
        if ((cx * cy) % total != 0) continue;
        const auto v = npmi_value(cx * cy / total, cx, cy, total);
        if (!v) continue;
        worst_extreme = std::max(worst_extreme, std::abs(*v));
        c.expect(std::abs(*v) <= kExtremeTolerance, "independence sweep not 0");
      }
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < kNpmiBudgetSeconds, "runtime " + fmt("%.2f s", elapsed));
  c.note("100 corpora, max |engine-oracle| " + fmt("%.2e", worst) + " (tol 1e-9)");
  c.note("max |independent| " + fmt("%.2e", worst_extreme) + " (tol 1e-12)");
  c.note(fmt("%.2f s", elapsed) + " (budget 30 s)");
  return c;
}

// ---------------------------------------------------------------------------

Check counting_scale() {
  Check c;
  const fixtures::ScaleSpec spec;  // 1M points x 20k labels, 4 directions
  const AttributeSpec attr = fixtures::scale_attribute(spec);
  auto t = Clock::now();
  Corpus corpus = fixtures::scale_corpus(spec, "scale");
  const double build_s = seconds_since(t);
  std::size_t refs = 0;
  for (std::size_t i = 0; i < corpus.total_points(); ++i) refs += corpus.record(i).labels.size();
  const double avg = static_cast<double>(refs) / static_cast<double>(corpus.total_points());

  t = Clock::now();
  const CountTable one = count_cooccurrences(corpus, attr);
  const double single_s = seconds_since(t);
  t = Clock::now();
  const CountTable eight = count_cooccurrences_sharded(corpus, attr, 8);
  const double sharded_s = seconds_since(t);

  g_scale.primary = {compute_run_metrics(one, MetricKind::kNpmi, "primary")};
  const std::string bytes_one = format_metric_artifact(g_scale.primary);
  const std::string bytes_eight =
      format_metric_artifact(std::vector<RunMetrics>{compute_run_metrics(eight, MetricKind::kNpmi, "primary")});
  const double rss = peak_rss_bytes();

  c.expect(corpus.total_points() == 1'000'000, "point count");
  c.expect(corpus.label_vocabulary().size() == 20'000, "vocabulary " + std::to_string(corpus.label_vocabulary().size()));
  c.expect(avg > 9.0 && avg < 11.0, "average labels per point " + fmt("%.2f", avg));
  c.expect(single_s < kCountBudgetSeconds, "single-pass count " + fmt("%.2f s", single_s));
  c.expect(sharded_s < kCountBudgetSeconds, "8-shard count " + fmt("%.2f s", sharded_s));
  c.expect(rss < kMemoryBudgetBytes, "peak memory " + fmt("%.0f MiB", rss / 1048576.0));
  c.expect(bytes_one == bytes_eight, "8-shard artifact bytes differ from 1-shard");
  c.note("corpus built in " + fmt("%.2f s", build_s) + ", " + fmt("%.2f", avg) + " labels/point");
  c.note("1-shard count " + fmt("%.2f s", single_s) + ", 8-shard count " + fmt("%.2f s", sharded_s) +
         " (budget 60 s, " + std::to_string(std::thread::hardware_concurrency()) + " cores)");
  c.note("peak RSS " + fmt("%.0f MiB", rss / 1048576.0) + " (budget 2048 MiB)");
  c.note("artifact " + std::to_string(bytes_one.size()) + " bytes, identical across sharding");

  // A smaller second run over the same vocabulary, used by the API criterion.
  fixtures::ScaleSpec second = spec;
  second.seed = 43;
  second.points = 250'000;
  const Corpus other = fixtures::scale_corpus(second, "secondary");
  g_scale.secondary = {compute_run_metrics(count_cooccurrences(other, attr), MetricKind::kNpmi, "secondary")};
  return c;
}

// ---------------------------------------------------------------------------

Check filter_semantics() {
  Check c;
  Rng rng(3030);
  std::size_t checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    testing::World w = testing::make_world(rng, 1 + rng.below(3));
    SessionState session;
    for (const auto& l : w.workspace.labels()) {
      if (rng.bernoulli(0.15)) session.hidden.insert(l);
    }
    const testing::LabelSet hidden(session.hidden.begin(), session.hidden.end());
    QuerySpec spec;
    std::vector<std::size_t> active;
    for (std::size_t r = 0; r < w.runs.size(); ++r) {
      if (rng.bernoulli(0.6)) {
        spec.active_runs.push_back(w.runs[r]);
        active.push_back(r);
      }
    }
    if (active.empty()) {
      for (std::size_t r = 0; r < w.runs.size(); ++r) active.push_back(r);
    }
    const std::size_t nf = 1 + rng.below(3);
    for (std::size_t i = 0; i < nf; ++i) spec.filters.push_back(testing::random_filter(rng, w));
    spec.include_hidden = rng.bernoulli(0.3);

    // Brute-force agreement, which covers any-active-run passing and hidden exclusion.
    const auto got = testing::names(w.workspace, matching_labels(spec, w.workspace, session));
    c.expect(got == testing::brute_force(w, spec.filters, active, hidden, spec.include_hidden),
             "brute-force mismatch in trial " + std::to_string(trial));
    if (!spec.include_hidden) {
      for (const auto& l : got) c.expect(!hidden.contains(l), "hidden label returned");
    }

    // Conjunction equals intersection of single-filter results.
    testing::LabelSet inter;
    bool first = true;
    for (const auto& f : spec.filters) {
      QuerySpec one = spec;
      one.filters = {f};
      const auto s = testing::names(w.workspace, matching_labels(one, w.workspace, session));
      if (first) {
        inter = s;
        first = false;
      } else {
        testing::LabelSet next;
        std::set_intersection(inter.begin(), inter.end(), s.begin(), s.end(), std::inserter(next, next.end()));
        inter = std::move(next);
      }
    }
    c.expect(got == inter, "conjunction differs from intersection in trial " + std::to_string(trial));

    // Any active run, per filter: the multi-run result is the union of the
    // single-run results.
    for (const auto& f : spec.filters) {
      QuerySpec multi = spec;
      multi.filters = {f};
      testing::LabelSet unioned;
      for (auto r : active) {
        QuerySpec one = multi;
        one.active_runs = {w.runs[r]};
        const auto s = testing::names(w.workspace, matching_labels(one, w.workspace, session));
        unioned.insert(s.begin(), s.end());
      }
      c.expect(testing::names(w.workspace, matching_labels(multi, w.workspace, session)) == unioned,
               "any-active-run union differs in trial " + std::to_string(trial));
    }

    // Paging concatenation identity.
    QuerySpec full = spec;
    full.limit = 1'000'000;
    const QueryResult all = query_annotations(full, w.workspace, session);
    QuerySpec page = spec;
    page.limit = 1 + rng.below(6);
    std::vector<std::string> concat;
    for (page.offset = 0; page.offset <= all.total_matching; page.offset += page.limit) {
      const QueryResult r = query_annotations(page, w.workspace, session);
      c.expect(r.total_matching == all.total_matching, "total_matching changes across pages");
      for (const auto& row : r.rows) concat.push_back(row.label);
    }
    std::vector<std::string> whole;
    for (const auto& row : all.rows) whole.push_back(row.label);
    c.expect(concat == whole, "pages do not concatenate to the full result");
    ++checked;
  }

  // Diff-filter query on the continent fixture.
  const auto attr = fixtures::continent_attribute();
  const Workspace ws("geo", {testing::run_input(testing::build_corpus(fixtures::continent_points(), {attr}, "geo"))},
                     std::nullopt);
  QuerySpec q;
  q.filters.push_back({parse_selector("npmi:continent:north_america:asia"), 0.0, 0.403});
  q.limit = 1000;
  testing::LabelSet got;
  for (const auto& row : query_annotations(q, ws, {}).rows) got.insert(row.label);
  const auto want = fixtures::continent_in_range_labels();
  c.expect(got == testing::LabelSet(want.begin(), want.end()), "diff query returned a different label set");
  c.note(std::to_string(checked) + " randomized queries vs brute force");
  c.note("diff query [0, 0.403] returned " + std::to_string(got.size()) + "/" + std::to_string(want.size()) +
         " planted labels, no extras");
  return c;
}

// ---------------------------------------------------------------------------

RunInput values_run(const std::string& name, const std::vector<double>& values) {
  RunMetrics m;
  m.run_name = name;
  m.attribute = {"attr", {"a", "b"}};
  m.total_points = 100000;
  for (std::size_t i = 0; i < values.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "l%05zu", i);
    m.labels.emplace_back(buf);
    m.values.push_back({values[i], 1, 2, 50000});
    m.values.push_back({std::nullopt, 0, 2, 50000});
  }
  return {name, {m}};
}

Check distribution() {
  Check c;
  // Two components; the heavier one sits at the planted mode.
  const double mode = 0.35;
  Rng rng(4040);
  std::vector<double> values;
  for (int i = 0; i < 1200; ++i) values.push_back(std::clamp(mode + 0.06 * rng.normal(), -1.0, 1.0));
  for (int i = 0; i < 700; ++i) values.push_back(std::clamp(-0.45 + 0.06 * rng.normal(), -1.0, 1.0));
  std::vector<double> mirrored;
  for (double v : values) mirrored.push_back(-v);
  const Workspace ws("w", {values_run("one", values), values_run("two", mirrored)}, std::nullopt);
  const std::vector<std::size_t> runs{0, 1};
  const MetricSelector sel = parse_selector("npmi:attr:a");
  const auto curves = selector_distributions(ws, sel, runs);
  const auto again = selector_distributions(ws, sel, runs);
  const double planted[] = {mode, -mode};
  double worst_area = 0.0;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& cv = curves[k];
    const double area = trapezoid_integral(cv.grid, cv.densities);
    worst_area = std::max(worst_area, std::abs(area - 1.0));
    c.expect(area >= 0.95 && area <= 1.05, "integral " + fmt("%.4f", area));
    c.expect(std::all_of(cv.densities.begin(), cv.densities.end(), [](double d) { return d >= 0.0; }),
             "negative density");
    const std::size_t arg =
        static_cast<std::size_t>(std::max_element(cv.densities.begin(), cv.densities.end()) - cv.densities.begin());
    const double step = cv.grid[1] - cv.grid[0];
    c.expect(std::abs(cv.grid[arg] - planted[k]) <= step,
             "argmax " + fmt("%.4f", cv.grid[arg]) + " vs mode " + fmt("%.2f", planted[k]));
    c.expect(cv.densities == again[k].densities && cv.grid == again[k].grid, "not deterministic");
  }
  c.expect(curves.size() == 2 && curves[0].grid == curves[1].grid, "runs do not share a grid");
  c.note("bimodal fixture, 2 runs, max |integral-1| " + fmt("%.2e", worst_area));
  c.note("argmax within one grid step of the planted mode, repeat evaluation bit-identical");
  return c;
}

// ---------------------------------------------------------------------------

Check projection() {
  Check c;
  const auto fx = fixtures::cluster_embeddings({});
  std::vector<std::string> labels;
  for (const auto& [k, v] : fx.table.vectors()) labels.push_back(k);
  const Projection2D a = project(labels, fx.table, 2026);
  std::vector<std::string> shuffled = labels;
  std::reverse(shuffled.begin(), shuffled.end());
  const Projection2D b = project(shuffled, fx.table, 2026);
  c.expect(a == b, "projection not deterministic for (subset, seed)");

  std::vector<std::vector<double>> high;
  for (const auto& l : a.labels) high.push_back(*fx.table.find(l));
  const double trust = fixtures::trustworthiness(high, a.points, 10);
  c.expect(trust >= kMinTrustworthiness, "trustworthiness " + fmt("%.4f", trust));
  double intra = 0, inter = 0;
  std::size_t ni = 0, ne = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < a.labels.size(); ++j) {
      const double d = std::hypot(a.points[i][0] - a.points[j][0], a.points[i][1] - a.points[j][1]);
      if (fx.cluster_of.at(a.labels[i]) == fx.cluster_of.at(a.labels[j])) {
        intra += d;
        ++ni;
      } else {
        inter += d;
        ++ne;
      }
    }
  }
  intra /= static_cast<double>(ni);
  inter /= static_cast<double>(ne);
  c.expect(inter > intra, "clusters not separated");

  // Heatmap linearity: scaling every value by a power of two scales every
  // pixel exactly.
  std::map<std::string, double, std::less<>> values;
  Rng rng(5050);
  for (const auto& l : a.labels) values[l] = 2.0 * rng.uniform() - 1.0;
  const HeatmapGrid base = rasterize_heatmap(a, values, 0.05, 128, 128);
  for (double k : {2.0, -0.5, 4.0}) {
    auto scaled = values;
    for (auto& [l, v] : scaled) v *= k;
    const HeatmapGrid g = rasterize_heatmap(a, scaled, 0.05, 128, 128);
    bool exact = true;
    for (std::size_t i = 0; i < g.intensities.size(); ++i) exact = exact && g.intensities[i] == k * base.intensities[i];
    c.expect(exact, "heatmap not linear for factor " + fmt("%g", k));
  }

  // Single kernel: intensity never increases with distance from the point.
  Projection2D single;
  single.labels = {"only"};
  single.points = {{0.5, 0.5}};
  const std::size_t side = 101;
  const HeatmapGrid g = rasterize_heatmap(single, {{"only", 1.0}}, 0.05, side, side);
  std::vector<std::pair<double, double>> by_distance;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t col = 0; col < side; ++col) {
      const double dx = (static_cast<double>(col) + 0.5) / static_cast<double>(side) - 0.5;
      const double dy = (static_cast<double>(r) + 0.5) / static_cast<double>(side) - 0.5;
      by_distance.emplace_back(dx * dx + dy * dy, g.at(r, col));
    }
  }
  std::sort(by_distance.begin(), by_distance.end());
  bool monotone = true;
  for (std::size_t i = 1; i < by_distance.size(); ++i) {
    if (by_distance[i].first > by_distance[i - 1].first) {
      monotone = monotone && by_distance[i].second <= by_distance[i - 1].second;
    } else {
      monotone = monotone && by_distance[i].second == by_distance[i - 1].second;
    }
  }
  c.expect(monotone, "single-kernel heatmap not radially monotone");
  c.note("3 clusters x 30 points, trustworthiness(k=10) " + fmt("%.4f", trust) + " (min 0.8)");
  c.note("mean inter/intra distance " + fmt("%.3f", inter) + "/" + fmt("%.3f", intra));
  c.note("deterministic, heatmap linear and radially monotone exactly");
  return c;
}

// ---------------------------------------------------------------------------

struct CliResult {
  int code = -1;
  std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

CliResult cli(const std::string& args) {
  CliResult r;
  FILE* p = ::popen((quote(BIASLENS_CLI_PATH) + " " + args + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Check session_and_export() {
  Check c;
  // Mutation properties.
  Rng rng(6060);
  SessionState s;
  const SessionAction actions[] = {SessionAction::kFlag, SessionAction::kUnflag, SessionAction::kHide,
                                   SessionAction::kUnhide};
  for (int i = 0; i < 2000; ++i) {
    std::set<std::string, std::less<>> labels;
    for (std::size_t k = 0, n = 1 + rng.below(4); k < n; ++k) labels.insert("l" + std::to_string(rng.below(12)));
    const SessionAction act = actions[rng.below(4)];
    const SessionState once = mutate(s, act, labels);
    const SessionState twice = mutate(once, act, labels);
    c.expect(once.flagged == twice.flagged && once.hidden == twice.hidden, "mutation not idempotent");
    c.expect(once.revision == s.revision + 1 && twice.revision > once.revision, "revision not monotonic");
    c.expect(parse_session(serialize_session(once)) == once, "round trip changed the session");
    s = once;
  }

  // End to end on the tiny fixture: CLI compute, API flag, CLI export.
  testing::TempDir dir;
  const std::string corpus = (dir / "tiny.jsonl").string();
  const std::string attrs = (dir / "attributes.json").string();
  const std::string art = (dir / "tiny-workspace").string();
  const std::string session = (dir / "session.json").string();
  c.expect(cli("fixtures tiny --out " + quote(corpus) + " --attributes-out " + quote(attrs)).code == 0,
           "fixtures command failed");
  c.expect(cli("compute --corpus tiny=" + quote(corpus) + " --attributes " + quote(attrs) + " --out " + quote(art))
                   .code == 0,
           "compute command failed");

  auto ws = std::make_shared<const Workspace>(Workspace::load(art, std::nullopt, "tiny-workspace"));
  auto store = std::make_shared<SessionStore>(load_session(session, true, ws->id()), session);
  ApiService api;
  api.initialize(ws, store);
  const HttpResponse flag =
      api.handle({"POST", "/api/session", {}, R"({"action":"flag","labels":["basketball"],"expected_revision":0})"});
  const HttpResponse flag_again =
      api.handle({"POST", "/api/session", {}, R"({"action":"flag","labels":["basketball"],"expected_revision":1})"});
  c.expect(flag.status == 200 && flag_again.status == 200, "session POST failed");
  const SessionState saved = load_session(session, false);
  c.expect(saved == store->snapshot(), "saved session differs from live state");
  c.expect(saved.revision == 2 && saved.flagged.size() == 1, "unexpected session state");

  bool identical = true;
  std::string tsv;
  for (const char* format : {"tsv", "lines"}) {
    const CliResult r =
        cli("export --artifacts " + quote(art) + " --session " + quote(session) + " --format " + format + " --out -");
    const HttpResponse a = api.handle({"GET", "/api/export", {{"format", format}}, ""});
    c.expect(r.code == 0 && a.status == 200, std::string("export failed for ") + format);
    identical = identical && r.out == a.body;
    if (std::string(format) == "tsv") tsv = r.out;
  }
  c.expect(identical, "CLI export differs from API export");
  const std::string golden =
      "label\ttiny:npmi:gender:male:value\ttiny:npmi:gender:male:count\ttiny:npmi:gender:female:value\t"
      "tiny:npmi:gender:female:count\n"
      "basketball\t0.336773\t3\t-0.301030\t1\n";
  c.expect(tsv == golden, "report differs from the golden report");
  c.note("2000 random mutations idempotent, monotonic and round-tripping");
  c.note("CLI and API exports byte-identical (tsv, lines)");
  c.note("golden report: 1 flagged label, value 0.336773, joint count 3");
  return c;
}

// ---------------------------------------------------------------------------

std::vector<DataPoint> cluster_points(const fixtures::ClusterFixture& fx, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DataPoint> out;
  for (int i = 0; i < 800; ++i) {
    DataPoint p;
    p.id = "record-" + std::to_string(i);
    const std::string dir = rng.bernoulli(0.5) ? "male" : "female";
    for (const auto& [label, cluster] : fx.cluster_of) {
      if (rng.bernoulli((cluster == 1) == (dir == "male") ? 0.07 : 0.03)) p.labels.push_back(label);
    }
    p.attributes["gender"] = {dir};
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> replay(const std::shared_ptr<const Workspace>& ws, const std::vector<HttpRequest>& script) {
  ApiService api;
  api.initialize(ws, std::make_shared<SessionStore>(SessionState{ws->id(), 0, {}, {}}));
  std::vector<std::string> out;
  for (const auto& req : script) {
    const HttpResponse r = api.handle(req);
    std::string line = std::to_string(r.status);
    for (const auto& [k, v] : r.headers) line += "\n" + k + ": " + v;
    out.push_back(line + "\n" + r.body);
    api.wait_for_projections();
  }
  return out;
}

Check api_contract() {
  Check c;
  const auto fx = fixtures::cluster_embeddings({});
  const auto gender = fixtures::gender_attribute();
  std::vector<RunInput> runs;
  runs.push_back(testing::run_input(testing::build_corpus(cluster_points(fx, 1), {gender}, "alpha")));
  runs.push_back(testing::run_input(testing::build_corpus(cluster_points(fx, 2), {gender}, "beta")));
  auto small = std::make_shared<const Workspace>("clusters", std::move(runs), fx.table);
  const std::vector<HttpRequest> script = {
      {"GET", "/api/schema", {}, ""},
      {"GET", "/api/workspace", {}, ""},
      {"POST", "/api/annotations/query", {}, R"({"filters":[{"selector":"npmi:gender:male","low":-0.2,"high":1}]})"},
      {"POST", "/api/annotations/query", {}, R"({"sort":{"by":"similarity","anchor":"c1_03"},"limit":10})"},
      {"GET", "/api/distribution", {{"selector", "npmi:gender:male:female"}, {"runs", "alpha,beta"}}, ""},
      {"POST", "/api/session", {}, R"({"action":"flag","labels":["c1_03","c1_04"],"expected_revision":0})"},
      {"POST", "/api/session", {}, R"({"action":"hide","labels":["c2_00"],"expected_revision":0})"},
      {"GET", "/api/session", {}, ""},
      {"POST", "/api/projection", {}, R"({"selector":"npmi:gender:male","width":64,"height":64,"seed":3})"},
      {"POST", "/api/projection", {}, R"({"selector":"npmi:gender:male","width":64,"height":64,"seed":3})"},
      {"GET", "/api/export", {{"format", "tsv"}}, ""},
      {"GET", "/api/export", {{"format", "lines"}}, ""},
      {"POST", "/api/annotations/query", {}, R"({"filters":[{"selector":"npmi:gender:male","low":2,"high":3}]})"},
      {"GET", "/api/missing", {}, ""},
  };
  const auto first = replay(small, script);
  const auto second = replay(small, script);
  c.expect(first == second, "small workspace replay differs");
  c.expect(first[9].rfind("200", 0) == 0, "projection never became ready");
  for (const auto& r : first) c.expect(r.find("record-") == std::string::npos, "response exposes a record id");

  // Latency on a 20k-label workspace with two runs and four directions.
  auto big = std::make_shared<const Workspace>(
      "scale", std::vector<RunInput>{{"primary", g_scale.primary}, {"secondary", g_scale.secondary}}, std::nullopt);
  c.expect(big->labels().size() == 20'000, "scale workspace has " + std::to_string(big->labels().size()) + " labels");
  ApiService api;
  api.initialize(big, std::make_shared<SessionStore>(SessionState{"scale", 0, {}, {}}));
  Rng rng(7070);
  std::vector<HttpRequest> queries;
  const auto dirs = fixtures::scale_attribute({}).directions;
  for (int i = 0; i < 40; ++i) {
    json body;
    body["limit"] = 200;
    json filters = json::array();
    for (std::size_t f = 0, n = 1 + rng.below(2); f < n; ++f) {
      const std::size_t a = rng.below(dirs.size());
      if (rng.bernoulli(0.4)) {
        const std::size_t b = (a + 1 + rng.below(dirs.size() - 1)) % dirs.size();
        filters.push_back({{"selector", "npmi:group:" + dirs[a] + ":" + dirs[b]}, {"low", -0.5}, {"high", 2.0}});
      } else {
        const double lo = -1.0 + 1.2 * rng.uniform();
        filters.push_back({{"selector", "npmi:group:" + dirs[a]}, {"low", lo}, {"high", 1.0}});
      }
    }
    body["filters"] = filters;
    if (i % 4 == 1) body["sort"] = {{"by", "label"}};
    if (i % 4 == 2) body["offset"] = 400;
    queries.push_back({"POST", "/api/annotations/query", {}, body.dump()});
  }
  std::vector<double> times;
  std::vector<std::string> bodies;
  std::size_t full_pages = 0;
  for (const auto& q : queries) {
    const auto t = Clock::now();
    const HttpResponse r = api.handle(q);
    times.push_back(seconds_since(t) * 1000.0);
    c.expect(r.status == 200, "scale query failed: " + r.body.substr(0, 120));
    if (json::parse(r.body)["rows"].size() == 200) ++full_pages;
    bodies.push_back(r.body);
  }
  for (std::size_t i = 0; i < queries.size(); ++i) {
    c.expect(api.handle(queries[i]).body == bodies[i], "scale query replay differs");
  }
  const double worst = *std::max_element(times.begin(), times.end());
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  c.expect(worst < kQueryBudgetMs, "slowest query " + fmt("%.1f ms", worst));
  c.note("14-request script over every endpoint replayed identically, no record ids in any response");
  c.note("40 filtered queries at limit 200 on 20000 labels x 2 runs x 4 directions (" + std::to_string(full_pages) +
         " full pages): median " + fmt("%.1f ms", sorted[sorted.size() / 2]) + ", max " + fmt("%.1f ms", worst) +
         " (budget 100 ms)");
  return c;
}

}  // namespace
}  // namespace biaslens

int main() {
  using biaslens::Check;
  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const Criterion criteria[] = {
      {"npmi-correctness", biaslens::npmi_correctness},
      {"counting-scale", biaslens::counting_scale},
      {"filter-semantics", biaslens::filter_semantics},
      {"distribution", biaslens::distribution},
      {"projection", biaslens::projection},
      {"session-export", biaslens::session_and_export},
      {"api-contract", biaslens::api_contract},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    if (!c.ok()) ++failed;
    std::cout << (c.ok() ? "PASS " : "FAIL ") << cr.name << ": " << c.detail() << std::endl;
  }
  std::cout << (failed == 0 ? "acceptance: all criteria passed" : "acceptance: " + std::to_string(failed) + " failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
