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

// Campaign orchestration: match, synthesize, verify and fuzz per iteration,
// repeated with the newly covered APIs as sources until nothing new is
// covered or the iteration cap is hit.

#pragma once

#include <chrono>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "relfuzz/corpus.hpp"
#include "relfuzz/fuzzer.hpp"
#include "relfuzz/matcher.hpp"
#include "relfuzz/mock_executor.hpp"
#include "relfuzz/protocol.hpp"
#include "relfuzz/synthesizer.hpp"
#include "relfuzz/templates.hpp"
#include "relfuzz/verifier.hpp"

namespace relfuzz {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LabelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CampaignConfig {
  std::size_t top_k = 10;
  std::size_t iterations = 10;
  std::size_t verify_cap = 100;
  std::size_t fuzz_n = 1000;
  std::uint64_t seed = 0;
  Tolerance tolerance;
  int timeout_ms = 5000;
  std::size_t workers = 1;
  std::size_t max_restarts = 32;
  bool inject_nonfinite = false;
  std::string executor_cmd;
  std::string corpus_path;
  std::string embeddings_path;
  std::string labels_path;
  std::string out_path;

  void validate() const {
    if (top_k < 1) throw ConfigError("top-k must be at least 1");
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
    if (verify_cap < 1) throw ConfigError("verify-cap must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (!(tolerance.rtol >= 0) || !(tolerance.atol >= 0)) throw ConfigError("tolerances must be non-negative");
    if (timeout_ms < 1) throw ConfigError("timeout must be positive");
  }
};

using ClientFactory = std::function<std::unique_ptr<ExecutorClient>(std::size_t worker)>;

// "mock:PATH" selects the in-process mock with the script at PATH; anything
// else is a shell command launching an executor subprocess.
inline ClientFactory make_client_factory(const std::string& command, std::size_t max_restarts = 32) {
  if (command.empty()) throw InfraError("no executor command given (--executor-cmd)");
  constexpr std::string_view mock_prefix = "mock:";
  if (command.starts_with(mock_prefix)) {
    auto script = std::make_shared<const MockScript>(MockScript::load(command.substr(mock_prefix.size())));
    return [script, max_restarts](std::size_t) -> std::unique_ptr<ExecutorClient> {
      return std::make_unique<MockExecutor>(script, max_restarts);
    };
  }
  return [command, max_restarts](std::size_t) -> std::unique_ptr<ExecutorClient> {
    SubprocessOptions opts;
    opts.command = command;
    opts.max_restarts = max_restarts;
    return std::make_unique<SubprocessClient>(std::move(opts));
  };
}

// Runs fn(item, worker) for item in [0, n). Item i always goes to worker
// i % workers and each worker handles its items in increasing order, so a
// worker's request sequence does not depend on thread timing. The exception
// of the lowest failing item is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < n; i += workers) {
      try {
        fn(i, w);
      } catch (...) {
        errors[i] = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

enum class Phase { Match, Synthesize, Verify, Fuzz };

struct PhaseTimings {
  double match_ms = 0;
  double synthesize_ms = 0;
  double verify_ms = 0;
  double fuzz_ms = 0;
};

struct PlannedPair {
  InvocationPlan plan;
  Channel channel = Channel::Signature;
  double score = 0;
};

struct SynthesisAbort {
  std::string source;
  std::string target;
  std::string reason;
};

struct VerifiedPair {
  std::size_t iteration = 0;
  PlannedPair pair;
  Verdict verdict = Verdict::Rejected;
  std::size_t inputs = 0;
  std::size_t status_mismatches = 0;
  std::size_t value_mismatches = 0;
};

struct ReportedInconsistency {
  std::size_t iteration = 0;
  Inconsistency inconsistency;
};

struct ReportedCrash {
  std::size_t iteration = 0;
  CrashReport crash;
};

struct IterationStats {
  std::size_t iteration = 0;
  std::vector<std::string> sources;
  std::size_t candidate_pairs = 0;
  std::size_t template_pairs = 0;
  std::size_t plans = 0;
  std::size_t synthesis_aborts = 0;
  std::size_t value_equivalent = 0;
  std::size_t status_equivalent = 0;
  std::size_t rejected = 0;
  std::vector<std::string> newly_covered;
  std::size_t covered_after = 0;
  std::size_t inconsistencies = 0;
  std::size_t crashes = 0;
  PhaseTimings timings;
};

// Everything produced by one iteration, including intermediate results the
// report only counts.
struct IterationDetail {
  IterationStats stats;
  std::vector<CandidatePair> candidates;
  std::vector<PlannedPair> plans;
  std::vector<SynthesisAbort> aborts;
  std::vector<VerifiedPair> verdicts;
};

struct FprResult {
  double rate = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  bool no_findings = false;
};

struct CampaignReport {
  CampaignConfig config;
  std::vector<IterationStats> iterations;
  std::vector<VerifiedPair> verified_pairs;
  std::vector<ReportedInconsistency> inconsistencies;
  std::vector<ReportedCrash> crashes;
  std::size_t initial_covered = 0;
  std::size_t total_apis = 0;
  std::vector<std::string> covered;
  std::optional<FprResult> fpr;

  std::size_t final_covered() const { return covered.size(); }
};

inline json to_json(const PlannedPair& p, const CorpusDb& db) {
  json j = to_json(p.plan, db.api(p.plan.source), db.api(p.plan.target));
  j["channel"] = channel_name(p.channel);
  j["score"] = p.score;
  return j;
}

inline json to_json(const VerifiedPair& v, const CorpusDb& db) {
  return {{"iteration", v.iteration},
          {"source", v.pair.plan.source},
          {"target", v.pair.plan.target},
          {"channel", channel_name(v.pair.channel)},
          {"score", v.pair.score},
          {"verdict", verdict_name(v.verdict)},
          {"inputs", v.inputs},
          {"status_mismatches", v.status_mismatches},
          {"value_mismatches", v.value_mismatches},
          {"plan", to_json(v.pair.plan, db.api(v.pair.plan.source), db.api(v.pair.plan.target))}};
}

inline json to_json(const IterationStats& s) {
  return {{"iteration", s.iteration},
          {"sources", s.sources.size()},
          {"candidate_pairs", s.candidate_pairs},
          {"template_pairs", s.template_pairs},
          {"plans", s.plans},
          {"synthesis_aborts", s.synthesis_aborts},
          {"verified", {{"value_equivalent", s.value_equivalent},
                        {"status_equivalent", s.status_equivalent},
                        {"total", s.value_equivalent + s.status_equivalent},
                        {"rejected", s.rejected}}},
          {"newly_covered", s.newly_covered},
          {"covered", s.covered_after},
          {"inconsistencies", s.inconsistencies},
          {"crashes", s.crashes}};
}

inline json to_json(const PhaseTimings& t) {
  return {{"match_ms", t.match_ms}, {"synthesize_ms", t.synthesize_ms},
          {"verify_ms", t.verify_ms}, {"fuzz_ms", t.fuzz_ms}};
}

inline json to_json(const FprResult& f) {
  json j = {{"rate", f.rate}, {"true_positives", f.true_positives},
            {"false_positives", f.false_positives}};
  if (f.no_findings) j["no_findings"] = true;
  return j;
}

// The report is a pure function of corpus, configuration and executor
// behaviour: wall-clock data lives in timings_to_json instead.
inline json to_json(const CampaignReport& r, const CorpusDb& db) {
  json iterations = json::array();
  std::vector<std::size_t> per_iteration;
  for (const auto& s : r.iterations) {
    iterations.push_back(to_json(s));
    per_iteration.push_back(s.covered_after);
  }
  json verified = json::array();
  for (const auto& v : r.verified_pairs) verified.push_back(to_json(v, db));
  json incs = json::array();
  for (const auto& i : r.inconsistencies) {
    json j = to_json(i.inconsistency);
    j["iteration"] = i.iteration;
    incs.push_back(std::move(j));
  }
  json crashes = json::array();
  for (const auto& c : r.crashes) {
    json j = to_json(c.crash);
    j["iteration"] = c.iteration;
    crashes.push_back(std::move(j));
  }
  json out = {
      {"config", {{"top_k", r.config.top_k}, {"iterations", r.config.iterations},
                  {"verify_cap", r.config.verify_cap}, {"fuzz_n", r.config.fuzz_n},
                  {"seed", r.config.seed}, {"rtol", r.config.tolerance.rtol},
                  {"atol", r.config.tolerance.atol}}},
      {"iterations", std::move(iterations)},
      {"verified_pairs", std::move(verified)},
      {"inconsistencies", std::move(incs)},
      {"crashes", std::move(crashes)},
      {"coverage", {{"initial", r.initial_covered}, {"final", r.final_covered()},
                    {"total_apis", r.total_apis}, {"per_iteration", per_iteration},
                    {"covered", r.covered}}}};
  if (r.fpr) out["fpr"] = to_json(*r.fpr);
  return out;
}

inline json timings_to_json(const CampaignReport& r) {
  json out = json::array();
  for (const auto& s : r.iterations) {
    json j = to_json(s.timings);
    j["iteration"] = s.iteration;
    out.push_back(std::move(j));
  }
  return out;
}

// Ground truth for inconsistent pairs, keyed by unordered API pair:
//   {"inconsistencies": [{"source": a, "target": b,
//                         "label": "true_positive" | "false_positive"}]}
// Other top-level keys are ignored.
class Labels {
 public:
  using Key = std::pair<std::string, std::string>;

  static Key key(const std::string& a, const std::string& b) {
    return a < b ? Key{a, b} : Key{b, a};
  }

  static Labels from_json(const json& j) {
    Labels l;
    if (!j.is_object()) throw LabelError("labels file must hold a JSON object");
    for (const auto& e : j.value("inconsistencies", json::array())) {
      const auto label = e.at("label").get<std::string>();
      bool tp;
      if (label == "true_positive" || label == "tp") tp = true;
      else if (label == "false_positive" || label == "fp") tp = false;
      else throw LabelError("unknown label '" + label + "'");
      l.labels_[key(e.at("source").get<std::string>(), e.at("target").get<std::string>())] = tp;
    }
    return l;
  }

  static Labels load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LabelError("cannot open labels file '" + path + "'");
    try {
      return from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw LabelError("labels file '" + path + "': " + e.what());
    }
  }

  void set(const std::string& a, const std::string& b, bool true_positive) {
    labels_[key(a, b)] = true_positive;
  }
  std::optional<bool> find(const std::string& a, const std::string& b) const {
    auto it = labels_.find(key(a, b));
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<Key, bool> labels_;
};

// FP / (TP + FP) over the distinct unordered pairs with at least one
// inconsistency. No findings gives 0 with no_findings set.
inline FprResult fpr(const std::vector<ReportedInconsistency>& incs, const Labels& labels) {
  std::set<Labels::Key> pairs;
  for (const auto& i : incs) pairs.insert(Labels::key(i.inconsistency.source, i.inconsistency.target));
  FprResult out;
  if (pairs.empty()) {
    out.no_findings = true;
    return out;
  }
  std::string missing;
  for (const auto& [a, b] : pairs) {
    const auto l = labels.find(a, b);
    if (!l) {
      missing += (missing.empty() ? "" : ", ") + a + " / " + b;
      continue;
    }
    (*l ? out.true_positives : out.false_positives)++;
  }
  if (!missing.empty()) throw LabelError("unlabeled inconsistent pairs: " + missing);
  out.rate = static_cast<double>(out.false_positives) /
             static_cast<double>(out.true_positives + out.false_positives);
  return out;
}

inline FprResult fpr(const CampaignReport& r, const Labels& labels) { return fpr(r.inconsistencies, labels); }

class Campaign {
 public:
  // `db` is updated in place and must outlive the campaign.
  Campaign(CorpusDb& db, CampaignConfig config, ClientFactory factory,
           std::shared_ptr<const DocumentEmbedder> embedder = nullptr)
      : db_(db), config_(std::move(config)), factory_(std::move(factory)),
        matcher_(db, std::move(embedder)) {
    config_.validate();
    report_.config = config_;
    report_.total_apis = db_.entries().size();
    report_.initial_covered = db_.covered().size();
    report_.covered.assign(db_.covered().begin(), db_.covered().end());
  }

  // One pass of the four phases for `sources`, stopping after `last`.
  IterationDetail run_iteration(const std::set<std::string>& sources, std::size_t iteration,
                                Phase last = Phase::Fuzz) {
    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point t0) {
      return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    };
    IterationDetail d;
    auto& st = d.stats;
    st.iteration = iteration;
    st.sources.assign(sources.begin(), sources.end());

    auto t0 = Clock::now();
    for (const auto& s : sources) {
      auto c = matcher_.candidates_for(s, config_.top_k);
      d.candidates.insert(d.candidates.end(), c.begin(), c.end());
    }
    st.candidate_pairs = d.candidates.size();
    for (const auto& c : d.candidates) st.template_pairs += c.channel == Channel::Template;
    st.timings.match_ms = ms_since(t0);

    if (last != Phase::Match) {
      t0 = Clock::now();
      synthesize(d);
      st.timings.synthesize_ms = ms_since(t0);
    }
    if (last == Phase::Verify || last == Phase::Fuzz) {
      t0 = Clock::now();
      verify(d, iteration);
      st.timings.verify_ms = ms_since(t0);
    }
    if (last == Phase::Fuzz) {
      t0 = Clock::now();
      fuzz(d, iteration);
      st.timings.fuzz_ms = ms_since(t0);
    }
    st.covered_after = db_.covered().size();
    report_.covered.assign(db_.covered().begin(), db_.covered().end());
    report_.iterations.push_back(st);
    return d;
  }

  // Fixpoint loop. The first iteration starts from every covered API.
  const CampaignReport& run() {
    std::set<std::string> sources = db_.covered();
    for (std::size_t it = 1; it <= config_.iterations; ++it) {
      const auto d = run_iteration(sources, it);
      if (d.stats.newly_covered.empty()) break;
      sources = std::set<std::string>(d.stats.newly_covered.begin(), d.stats.newly_covered.end());
    }
    return report_;
  }

  const CampaignReport& report() const { return report_; }
  CampaignReport& report() { return report_; }
  const CorpusDb& db() const { return db_; }
  const ApiMatcher& matcher() const { return matcher_; }

  std::size_t executor_restarts() const {
    std::size_t n = 0;
    for (const auto& c : clients_) n += c->restarts();
    return n;
  }

 private:
  void synthesize(IterationDetail& d) {
    std::set<std::string> seen;
    for (const auto& c : d.candidates) {
      const auto& s = db_.api(c.source);
      const auto& t = db_.api(c.target);
      std::vector<InvocationPlan> plans;
      if (c.channel == Channel::Template) {
        for (const auto& tpl : extract_templates(s, db_))
          if (tpl.invoked == c.target) plans.push_back(plan_from_template(tpl));
      } else {
        auto r = synthesize_by_matching(s, t);
        if (!r) {
          d.aborts.push_back({c.source, c.target, r.abort_reason});
          continue;
        }
        plans.push_back(std::move(*r.plan));
      }
      for (auto& p : plans) {
        const auto id = p.id();
        if (evaluated_.count(id) || !seen.insert(id).second) continue;
        d.plans.push_back({std::move(p), c.channel, c.score});
      }
    }
    d.stats.plans = d.plans.size();
    d.stats.synthesis_aborts = d.aborts.size();
  }

  void ensure_clients() {
    while (clients_.size() < config_.workers) clients_.push_back(factory_(clients_.size()));
  }

  void verify(IterationDetail& d, std::size_t iteration) {
    auto& st = d.stats;
    std::vector<PairVerdict> results(d.plans.size());
    if (!d.plans.empty()) ensure_clients();
    parallel_for(d.plans.size(), config_.workers, [&](std::size_t i, std::size_t w) {
      const auto& plan = d.plans[i].plan;
      const auto& s = db_.api(plan.source);
      const auto& t = db_.api(plan.target);
      VerifyOptions opts;
      opts.tolerance = config_.tolerance;
      opts.timeout_ms = config_.timeout_ms;
      opts.compare_values = !s.nondeterministic && !t.nondeterministic;
      opts.collect_target_records = !db_.is_covered(plan.target);
      results[i] = verify_pair(plan, s, t, db_.valid_invocations(plan.source, config_.verify_cap),
                               *clients_[w], opts);
    });

    // Single writer: insertions happen here, in plan order.
    for (std::size_t i = 0; i < d.plans.size(); ++i) {
      evaluated_.insert(d.plans[i].plan.id());
      auto& r = results[i];
      VerifiedPair v{iteration, d.plans[i], r.verdict, r.evidence.size(), 0, 0};
      for (const auto& e : r.evidence) {
        if (!e.status_match()) ++v.status_mismatches;
        else if (!e.value_match()) ++v.value_mismatches;
      }
      switch (r.verdict) {
        case Verdict::ValueEquivalent: ++st.value_equivalent; break;
        case Verdict::StatusEquivalent: ++st.status_equivalent; break;
        case Verdict::Rejected: ++st.rejected; break;
      }
      for (auto& rec : r.target_records) {
        rec.origin = Origin{static_cast<int>(iteration)};
        try {
          db_.check_record(rec);
        } catch (const CorpusError&) {
          continue;  // a template call that does not fit the signature
        }
        if (db_.record_new_invocation(std::move(rec))) st.newly_covered.push_back(d.plans[i].plan.target);
      }
      if (r.verdict != Verdict::Rejected) report_.verified_pairs.push_back(v);
      d.verdicts.push_back(std::move(v));
    }
  }

  void fuzz(IterationDetail& d, std::size_t iteration) {
    std::vector<const VerifiedPair*> pairs;
    for (const auto& v : d.verdicts)
      if (v.verdict != Verdict::Rejected) pairs.push_back(&v);
    std::vector<FuzzResult> results(pairs.size());
    if (config_.fuzz_n == 0 || pairs.empty()) return;
    ensure_clients();
    std::map<std::string, std::vector<InvocationRecord>> seeds;
    for (const auto* v : pairs)
      if (!seeds.count(v->pair.plan.source))
        seeds[v->pair.plan.source] =
            db_.valid_invocations(v->pair.plan.source, std::numeric_limits<std::size_t>::max());

    FuzzOptions opts;
    opts.count = config_.fuzz_n;
    opts.seed = config_.seed;
    opts.tolerance = config_.tolerance;
    opts.timeout_ms = config_.timeout_ms;
    opts.mutation.inject_nonfinite = config_.inject_nonfinite;
    parallel_for(pairs.size(), config_.workers, [&](std::size_t i, std::size_t w) {
      const auto& plan = pairs[i]->pair.plan;
      results[i] = fuzz_pair(plan, pairs[i]->verdict, db_.api(plan.source), db_.api(plan.target),
                             seeds.at(plan.source), *clients_[w], opts);
    });
    for (auto& r : results) {
      d.stats.inconsistencies += r.inconsistencies.size();
      d.stats.crashes += r.crashes.size();
      for (auto& inc : r.inconsistencies) report_.inconsistencies.push_back({iteration, std::move(inc)});
      for (auto& c : r.crashes) report_.crashes.push_back({iteration, std::move(c)});
    }
  }

  CorpusDb& db_;
  CampaignConfig config_;
  ClientFactory factory_;
  ApiMatcher matcher_;
  std::vector<std::unique_ptr<ExecutorClient>> clients_;
  std::set<std::string> evaluated_;
  CampaignReport report_;
};

}  // namespace relfuzz
