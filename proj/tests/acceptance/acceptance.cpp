// Copyright 2026 The relfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "../test_util.hpp"

namespace {

using namespace relfuzz;
using relfuzz::testing::fixture;
using relfuzz::testing::read_file;
using relfuzz::testing::TempDir;
using relfuzz::testing::tensor;
using Clock = std::chrono::steady_clock;

// Failure messages collected by a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ += !ok;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": got " << got << ", want " << want;
    expect(std::abs(got - want) <= tol, msg.str());
  }
  bool ok() const { return failed_ == 0; }
  std::size_t checks() const { return checks_; }
  std::string summary() const {
    std::string s;
    for (const auto& f : failures_) s += "\n    " + f;
    return s;
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Maximum over all injective row->column maps of the zero-padded square
// matrix, summed in row order like the solver's total.
double brute_force_max(const WeightMatrix& w) {
  const std::size_t n = std::max(w.rows(), w.cols());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (std::size_t r = 0; r < w.rows(); ++r)
      if (perm[r] < w.cols()) total += w(r, perm[r]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void hungarian_oracle(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng.below(7), cols = 1 + rng.below(7);
    WeightMatrix w(rows, cols);
    const bool integral = trial % 2 == 0;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < cols; ++k)
        w(r, k) = integral ? static_cast<double>(rng.below(6)) : rng.unit() * 3.0;
    const auto a = max_weight_match(w);
    double total = 0;
    for (const auto& [r, k] : a.pairs) total += w(r, k);
    c.expect(a.pairs.size() == std::min(rows, cols), "matrix " + std::to_string(trial) + ": incomplete matching");
    c.expect(total == a.total, "matrix " + std::to_string(trial) + ": reported total differs from its pairs");
    c.expect(a.total == brute_force_max(w), "matrix " + std::to_string(trial) + ": not optimal");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
}

ArgSpec arg(std::string name, std::size_t pos, std::set<std::string> types, std::optional<Value> def = {}) {
  return ArgSpec{std::move(name), pos, def.has_value(), std::move(def), std::move(types)};
}

ApiEntry entry(std::string name, std::vector<ArgSpec> args) {
  ApiEntry e;
  e.qualified_name = std::move(name);
  e.args = std::move(args);
  return e;
}

void formula_suite(Check& c) {
  constexpr double tol = 1e-9;
  // term weights and cosine
  const auto emb = tfidf_embed({{"a", {"tf", "x"}}, {"b", {"tf"}}, {"c", {}}});
  c.near(emb.at("a").at(0), 0.5, tol, "shared token weight");  // vocabulary: tf, x
  c.near(emb.at("a").at(1), 1.0, tol, "unique token weight");
  c.expect(emb.at("c").empty(), "empty api gives the zero vector");
  TfIdfVector x{{{0, 1.0}, {1, 1.0}}}, y{{{0, 1.0}}}, z{{{1, 2.0}}};
  c.near(cosine(x, x), 1.0, tol, "cosine of a vector with itself");
  c.near(cosine(y, z), 0.0, tol, "orthogonal cosine");
  c.near(cosine(x, y), 1.0 / std::sqrt(2.0), tol, "cosine (1,1) vs (1,0)");
  c.near(cosine(x, TfIdfVector{}), 0.0, tol, "cosine with a zero vector");
  const std::vector<double> d1 = {1, 0}, d2 = {0, 1};
  c.near(cosine(std::span<const double>(d1), std::span<const double>(d2)), 0.0, tol, "dense orthogonal cosine");

  // argument similarity terms
  c.near(name_similarity("input", "input"), 1.0, tol, "name input/input");
  c.near(name_similarity("x", "y"), 0.0, tol, "name x/y");
  c.near(name_similarity("dim", "dims"), 0.75, tol, "name dim/dims");
  c.near(type_similarity(arg("a", 0, {"Tensor"}), arg("b", 0, {"Tensor", "int"})), 1.0, tol, "type subset");
  c.near(type_similarity(arg("a", 0, {"Tensor", "int"}), arg("b", 0, {"Tensor"})), 0.5, tol, "type half");
  c.near(type_similarity(arg("a", 0, {"Tensor"}), arg("b", 0, {})), 0.0, tol, "type disjoint");
  c.near(pos_similarity(arg("a", 0, {}), arg("b", 0, {}), 2, 3), 1.0, tol, "pos equal");
  c.near(pos_similarity(arg("a", 0, {}), arg("b", 2, {}), 3, 3), 1.0 / 3.0, tol, "pos 0 vs 2");
  c.near(pos_similarity(arg("a", 0, {}), arg("b", 1, {}), 2, 2), 0.5, tol, "pos 0 vs 1");

  // vsplit -> tensor_split
  const auto s = entry("torch.vsplit", {arg("input", 0, {"Tensor"}),
                                       arg("indices_or_sections", 1, {"Tensor", "int", "list"})});
  const auto t = entry("torch.tensor_split", {arg("input", 0, {"Tensor"}),
                                              arg("indices_or_sections", 1, {"Tensor", "int", "list"}),
                                              arg("dim", 2, {"int"}, Value::integer(0))});
  c.near(arg_similarity(s.args[0], t.args[0], 2, 3), 3.0, tol, "identical argument weight");
  c.near(arg_similarity(s.args[1], t.args[1], 2, 3), 3.0, tol, "identical argument weight");
  // levenshtein(input, indices_or_sections) = 16 over 19 characters
  c.near(arg_similarity(s.args[0], t.args[1], 2, 3), 3.0 / 19.0 + 1.0 + 2.0 / 3.0, tol, "input -> indices_or_sections");
  c.near(arg_similarity(s.args[1], t.args[0], 2, 3), 3.0 / 19.0 + 1.0 / 3.0 + 2.0 / 3.0, tol, "indices_or_sections -> input");
  const auto r = synthesize_by_matching(s, t);
  c.expect(r.plan.has_value(), "vsplit -> tensor_split plan synthesized");
  if (r.plan) {
    c.expect(r.plan->slot_map == std::map<std::size_t, std::size_t>{{0, 0}, {1, 1}}, "slot map {0->0, 1->1}");
    c.expect(r.plan->default_fills == std::map<std::string, Value>{{"dim", Value::integer(0)}}, "dim := 0");
  }
}

// Random per-input outcomes scripted as exact mock entries.
void lattice_property(Check& c) {
  Rng rng(31337);
  const Status statuses[] = {Status::Success, Status::Exception, Status::Crash};
  std::size_t value_equivalent = 0;
  for (int run = 0; run < 500; ++run) {
    const auto s = entry("m.s", {arg("input", 0, {})}), t = entry("m.t", {arg("input", 0, {})});
    const auto plan = *synthesize_by_matching(s, t).plan;
    std::vector<InvocationRecord> inputs;
    json entries = json::array();
    const auto n = 1 + rng.below(5);
    for (std::uint64_t i = 0; i < n; ++i) {
      InvocationRecord rec{"m.s", {tensor({3}, rng.next())}, {}, {}};
      const Status ss = rng.pick(statuses);
      const Status st = rng.chance(5, 6) ? ss : rng.pick(statuses);
      json e = {{"source", "m.s"}, {"target", "m.t"}, {"input_hash", input_hash(rec)},
                {"status_s", status_name(ss)}, {"status_t", status_name(st)}};
      if (ss == Status::Success && st == Status::Success) e["value_equal"] = rng.chance(7, 8);
      entries.push_back(e);
      inputs.push_back(std::move(rec));
    }
    MockExecutor exec(std::make_shared<const MockScript>(MockScript::from_json({{"entries", entries}})));
    const auto v = verify_pair(plan, s, t, inputs, exec);
    c.expect(v.verdict == classify(v.evidence), "run " + std::to_string(run) + ": verdict differs from its evidence");
    if (v.verdict == Verdict::ValueEquivalent) {
      ++value_equivalent;
      c.expect(status_equivalent(v.evidence), "run " + std::to_string(run) + ": value-equivalent but not status-equal");
    }
  }
  c.expect(value_equivalent > 50, "too few value-equivalent runs to exercise the property");
}

// Random corpus of up to 50 APIs with random documented calls.
struct RandomWorld {
  CorpusDb db;
  std::shared_ptr<const MockScript> script;
};

RandomWorld random_world(Rng& rng) {
  static const char* arg_names[] = {"input", "x", "other", "dim", "k", "alpha", "shape", "axis"};
  static const char* words[] = {"sum", "mean", "split", "pool", "sort", "scatter", "gather", "norm"};
  RandomWorld w;
  const auto n = 2 + rng.below(49);
  std::vector<ApiEntry> apis(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = apis[i];
    e.qualified_name = std::string("r.") + rng.pick(words) + "_" + std::to_string(i);
    e.description = std::string("Computes the ") + rng.pick(words) + " of " + rng.pick(words) + ".";
    const auto arity = 1 + rng.below(3);
    // optional arguments form a suffix
    const auto required = 1 + rng.below(arity);
    for (std::size_t k = 0; k < arity; ++k)
      e.args.push_back(arg(std::string(arg_names[k * 2 + rng.below(2)]), k, {},
                           k >= required ? std::optional<Value>(Value::integer(0)) : std::nullopt));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!rng.chance(1, 3)) continue;
    const auto& other = apis[rng.below(n)];
    std::string call = other.qualified_name + "(";
    for (std::size_t k = 0; k < other.required_count(); ++k)
      call += (k ? ", " : "") + apis[i].args[rng.below(apis[i].args.size())].name;
    apis[i].code_blocks.push_back(">>> " + call + ")");
  }
  json models = json::object();
  for (auto& e : apis) {
    json params = json::array();
    for (const auto& a : e.args) {
      json p = {{"name", a.name}};
      if (a.default_value) p["default"] = to_json(*a.default_value);
      params.push_back(p);
    }
    json m = {{"params", params}, {"value_class", rng.chance(1, 2) ? "shared" : e.qualified_name}};
    if (rng.chance(1, 3)) m["exception_on"] = {{{"when", "negative_dim"}}};
    if (rng.chance(1, 4)) m["exception_on"] = {{{"when", "always"}}};
    models[e.qualified_name] = m;
    w.db.add_api(e);
  }
  for (const auto& [name, e] : w.db.entries()) {
    if (!rng.chance(1, 3)) continue;
    std::vector<Value> pos;
    for (const auto& a : e.args)
      if (!a.optional) pos.push_back(tensor({2, 3}, rng.next()));
    w.db.record_new_invocation({name, pos, {}, {}});
  }
  w.script = std::make_shared<const MockScript>(MockScript::from_json({{"apis", models}}));
  return w;
}

void fixpoint_termination(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(77);
  std::size_t grew = 0, multi = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto w = random_world(rng);
    CampaignConfig config;
    config.iterations = 1 + rng.below(5);
    config.top_k = 1 + rng.below(5);
    config.fuzz_n = 5;
    config.seed = rng.next();
    const auto initial = w.db.covered().size();
    Campaign campaign(w.db, config, [&](std::size_t) { return std::make_unique<MockExecutor>(w.script); });
    const auto& r = campaign.run();
    const std::string id = "corpus " + std::to_string(trial);
    c.expect(!r.iterations.empty() && r.iterations.size() <= config.iterations, id + ": iteration count out of range");
    std::size_t prev = initial;
    for (const auto& s : r.iterations) {
      c.expect(s.covered_after >= prev, id + ": coverage decreased");
      c.expect(s.covered_after == prev + s.newly_covered.size(), id + ": coverage does not match new coverage");
      prev = s.covered_after;
    }
    c.expect(r.iterations.size() == config.iterations || r.iterations.back().newly_covered.empty(),
             id + ": stopped before a fixpoint or the cap");
    grew += r.final_covered() > initial;
    multi += r.iterations.size() > 2;
  }
  c.expect(grew >= 10 && multi >= 3, "random corpora rarely extend coverage: " + std::to_string(grew) +
                                          " grew, " + std::to_string(multi) + " ran past two iterations");
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "took " + std::to_string(secs) + " s");
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism(Check& c) {
  TempDir dir;
  std::vector<std::string> reports;
  for (int i = 0; i < 2; ++i) {
    const auto out = dir.file("report" + std::to_string(i) + ".json");
    const int code = shell(std::string("'") + RELFUZZ_CLI + "' run --corpus '" + fixture("mini_corpus.json") +
                           "' --executor-cmd 'mock:" + fixture("mini_mock.json") + "' --seed 42 --quiet --out '" +
                           out + "'");
    c.expect(code == 0 || code == 1, "run exited with " + std::to_string(code));
    reports.push_back(read_file(out));
  }
  c.expect(!reports[0].empty(), "empty report");
  c.expect(reports[0] == reports[1], "reports differ");
}

// Records every response a client returns.
class RecordingClient final : public ExecutorClient {
 public:
  RecordingClient(std::unique_ptr<ExecutorClient> inner, std::vector<PairedResponse>& log)
      : inner_(std::move(inner)), log_(log) {}
  PairedResponse call_paired(PairedRequest req) override {
    auto r = inner_->call_paired(std::move(req));
    log_.push_back(r);
    return r;
  }
  std::size_t restarts() const override { return inner_->restarts(); }

 private:
  std::unique_ptr<ExecutorClient> inner_;
  std::vector<PairedResponse>& log_;
};

void crash_containment(Check& c) {
  constexpr std::uint64_t k = 7;
  TempDir dir;
  json script = json::parse(read_file(fixture("mini_mock.json")));
  script["die_on_request"] = {k};
  const auto path = dir.write("script.json", script.dump());
  auto db = load_corpus(fixture("mini_corpus.json"));
  CampaignConfig config;
  config.fuzz_n = 20;
  config.iterations = 2;
  std::vector<PairedResponse> log;
  auto inner = make_client_factory("exec '" + std::string(RELFUZZ_MOCK_EXEC) + "' --script '" + path + "'");
  try {
    Campaign campaign(db, config, [&](std::size_t w) { return std::make_unique<RecordingClient>(inner(w), log); });
    campaign.run();
    c.expect(campaign.executor_restarts() == 1, "expected exactly one restart");
  } catch (const std::exception& e) {
    c.expect(false, std::string("campaign did not complete: ") + e.what());
    return;
  }
  c.expect(log.size() > k, "too few requests to reach the scripted death");
  if (log.size() <= k) return;
  const auto& dead = log[k - 1];
  c.expect(dead.id == k, "request ids are not sequential");
  c.expect(dead.status_s == Status::Crash && dead.detail_s == "signal 11", "request #k not recorded as a crash");
  std::size_t later_ok = 0;
  for (std::size_t i = k; i < log.size(); ++i) later_ok += log[i].status_s != Status::Crash;
  c.expect(later_ok + 1 >= log.size() - k && later_ok > 0, "requests after #k did not succeed");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"Kuhn-Munkres matches brute force on 1000 random matrices up to 7x7", hungarian_oracle},
      {"similarity and plan formulas within 1e-9", formula_suite},
      {"verdict lattice on 500 scripted runs", lattice_property},
      {"fixpoint terminates within the cap with monotone coverage", fixpoint_termination},
      {"run --seed 42 reports are byte-identical", determinism},
      {"executor death on request k is contained", crash_containment},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = Clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("unexpected exception: ") + e.what());
    }
    std::ostringstream time;
    time.precision(2);
    time << std::fixed << seconds_since(t0);
    std::cout << (c.ok() ? "[PASS] " : "[FAIL] ") << cr.name << " (" << c.checks() << " checks, " << time.str()
              << " s)" << c.summary() << "\n";
    failed += !c.ok();
  }
  std::cout << (failed ? "acceptance: FAILED" : "acceptance: all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
