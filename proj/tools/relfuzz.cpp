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

// Command-line front end.
//
//   relfuzz match|synth|verify|fuzz|run --corpus PATH [options]
//
// Exit status: 0 ran clean, 1 inconsistencies found, 2 infrastructure or
// input error.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "relfuzz/relfuzz.hpp"

namespace {

using relfuzz::json;

constexpr int kExitClean = 0;
constexpr int kExitFindings = 1;
constexpr int kExitError = 2;

struct Options {
  relfuzz::CampaignConfig config;
  std::string timings_path;
  bool quiet = false;
};

void add_common(CLI::App& sub, Options& o, bool needs_executor) {
  auto& c = o.config;
  sub.add_option("--corpus", c.corpus_path, "invocation database (JSON)")->required()->check(CLI::ExistingFile);
  sub.add_option("--embeddings", c.embeddings_path, "precomputed description vectors (JSON)")
      ->check(CLI::ExistingFile);
  sub.add_option("--top-k", c.top_k, "candidate partners per source API")->capture_default_str();
  sub.add_option("--out", c.out_path, "write JSON here instead of stdout");
  sub.add_flag("--quiet", o.quiet, "no progress on stderr");
  if (!needs_executor) return;
  sub.add_option("--verify-cap", c.verify_cap, "verifying inputs per pair")->capture_default_str();
  sub.add_option("--rtol", c.tolerance.rtol, "relative tolerance")->capture_default_str();
  sub.add_option("--atol", c.tolerance.atol, "absolute tolerance")->capture_default_str();
  sub.add_option("--executor-cmd", c.executor_cmd, "executor launch command, or mock:SCRIPT")->required();
  sub.add_option("--workers", c.workers, "executor clients")->capture_default_str();
  sub.add_option("--timeout-ms", c.timeout_ms, "per-request timeout")->capture_default_str();
  sub.add_option("--max-restarts", c.max_restarts, "executor restarts per client")->capture_default_str();
}

void add_fuzzing(CLI::App& sub, Options& o) {
  auto& c = o.config;
  sub.add_option("--fuzz-count", c.fuzz_n, "mutants per verified pair")->capture_default_str();
  sub.add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  sub.add_flag("--inject-nonfinite", c.inject_nonfinite, "allow NaN/Inf in mutants");
  sub.add_option("--labels", c.labels_path, "ground-truth labels for FPR")->check(CLI::ExistingFile);
  sub.add_option("--timings", o.timings_path, "write per-phase wall-clock timings here");
}

void emit(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw relfuzz::InfraError("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw relfuzz::InfraError("write to '" + path + "' failed");
}

void progress(const Options& o, const relfuzz::IterationStats& s) {
  if (o.quiet) return;
  std::cerr << "iteration " << s.iteration << ": " << s.sources.size() << " sources, " << s.candidate_pairs
            << " candidates, " << s.plans << " plans, " << s.value_equivalent + s.status_equivalent
            << " verified (" << s.rejected << " rejected), " << s.newly_covered.size()
            << " newly covered, " << s.inconsistencies << " inconsistencies\n";
}

int run_command(const std::string& name, Options& o) {
  auto& c = o.config;
  c.validate();
  relfuzz::CorpusDb db = relfuzz::load_corpus(c.corpus_path);
  std::shared_ptr<const relfuzz::DocumentEmbedder> embedder;
  if (!c.embeddings_path.empty())
    embedder = relfuzz::PrecomputedEmbedder::load(c.embeddings_path);

  relfuzz::ClientFactory factory;
  if (name == "match" || name == "synth") {
    factory = [](std::size_t) -> std::unique_ptr<relfuzz::ExecutorClient> {
      throw relfuzz::InfraError("no executor available in this mode");
    };
  } else {
    factory = relfuzz::make_client_factory(c.executor_cmd, c.max_restarts);
  }
  if (name != "run") c.iterations = 1;

  relfuzz::Campaign campaign(db, c, factory, embedder);
  const std::set<std::string> sources = db.covered();

  if (name == "match" || name == "synth" || name == "verify") {
    const auto phase = name == "match"   ? relfuzz::Phase::Match
                       : name == "synth" ? relfuzz::Phase::Synthesize
                                         : relfuzz::Phase::Verify;
    const auto d = campaign.run_iteration(sources, 1, phase);
    json out;
    if (phase == relfuzz::Phase::Match) {
      out["candidates"] = json::array();
      for (const auto& p : d.candidates) out["candidates"].push_back(relfuzz::to_json(p));
    } else if (phase == relfuzz::Phase::Synthesize) {
      out["plans"] = json::array();
      for (const auto& p : d.plans) out["plans"].push_back(relfuzz::to_json(p, db));
      out["aborts"] = json::array();
      for (const auto& a : d.aborts)
        out["aborts"].push_back({{"source", a.source}, {"target", a.target}, {"reason", a.reason}});
    } else {
      out["pairs"] = json::array();
      for (const auto& v : d.verdicts) out["pairs"].push_back(relfuzz::to_json(v, db));
      out["newly_covered"] = d.stats.newly_covered;
      progress(o, d.stats);
    }
    emit(out, c.out_path);
    return kExitClean;
  }

  auto& report = name == "run" ? campaign.run() : (campaign.run_iteration(sources, 1), campaign.report());
  for (const auto& s : report.iterations) progress(o, s);
  if (!c.labels_path.empty()) campaign.report().fpr = relfuzz::fpr(report, relfuzz::Labels::load(c.labels_path));
  emit(relfuzz::to_json(campaign.report(), db), c.out_path);
  if (!o.timings_path.empty()) emit(relfuzz::timings_to_json(report), o.timings_path);
  if (!o.quiet && campaign.executor_restarts() > 0)
    std::cerr << "executor restarts: " << campaign.executor_restarts() << "\n";
  return report.inconsistencies.empty() ? kExitClean : kExitFindings;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relfuzz: relation-based API fuzzing"};
  app.require_subcommand(1);
  Options o;
  auto* match = app.add_subcommand("match", "rank candidate API pairs");
  auto* synth = app.add_subcommand("synth", "synthesize invocation plans for candidate pairs");
  auto* verify = app.add_subcommand("verify", "verify synthesized pairs on traced inputs");
  auto* fuzz = app.add_subcommand("fuzz", "one iteration: match, synthesize, verify, fuzz");
  auto* run = app.add_subcommand("run", "iterate to a fixpoint");
  add_common(*match, o, false);
  add_common(*synth, o, false);
  add_common(*verify, o, true);
  add_common(*fuzz, o, true);
  add_fuzzing(*fuzz, o);
  add_common(*run, o, true);
  add_fuzzing(*run, o);
  run->add_option("--iterations", o.config.iterations, "iteration cap")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitClean : kExitError;
  }

  try {
    return run_command(app.get_subcommands().front()->get_name(), o);
  } catch (const std::exception& e) {
    std::cerr << "relfuzz: error: " << e.what() << "\n";
    return kExitError;
  }
}
