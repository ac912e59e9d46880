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

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>

#include "test_util.hpp"

namespace relfuzz {
namespace {

using testing::fixture;
using testing::tensor;

// Chain corpus: chain.a<i> takes i + 1 required arguments and documents a
// call of chain.a<i+1> that repeats its last argument. Differing arities make
// every argument-matching plan abort, so coverage can only advance one link
// per iteration through the documented calls. Only chain.a0 starts covered.
CorpusDb chain_corpus(std::size_t length) {
  CorpusDb db;
  for (std::size_t i = 0; i < length; ++i) {
    ApiEntry e;
    e.qualified_name = "chain.a" + std::to_string(i);
    std::string call = "chain.a" + std::to_string(i + 1) + "(";
    for (std::size_t k = 0; k <= i; ++k) {
      e.args.push_back(ArgSpec{"x" + std::to_string(k), k, false, {}, {}});
      call += "x" + std::to_string(k) + ", ";
    }
    call += "x" + std::to_string(i) + ")";
    if (i + 1 < length) e.code_blocks = {">>> " + call};
    e.description = "Link " + std::to_string(i) + " of the chain.";
    db.add_api(std::move(e));
  }
  db.record_new_invocation({"chain.a0", {tensor({2, 2}, 1)}, {}, Origin{}});
  return db;
}

ClientFactory chain_factory(std::size_t length) {
  json apis = json::object();
  for (std::size_t i = 0; i < length; ++i) {
    json params = json::array();
    for (std::size_t k = 0; k <= i; ++k) params.push_back({{"name", "x" + std::to_string(k)}});
    apis["chain.a" + std::to_string(i)] = {{"params", params}, {"value_class", "chain"}};
  }
  auto script = std::make_shared<const MockScript>(MockScript::from_json({{"apis", apis}}));
  return [script](std::size_t) { return std::make_unique<MockExecutor>(script); };
}

CampaignConfig small_config() {
  CampaignConfig c;
  c.fuzz_n = 20;
  c.seed = 5;
  return c;
}

TEST(Campaign, ChainAdvancesOneLinkPerIteration) {
  auto db = chain_corpus(6);
  Campaign campaign(db, small_config(), chain_factory(6));
  const auto& r = campaign.run();
  ASSERT_EQ(r.iterations.size(), 6u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.iterations[i].newly_covered, std::vector<std::string>{"chain.a" + std::to_string(i + 1)});
    EXPECT_EQ(r.iterations[i].covered_after, i + 2);
  }
  EXPECT_TRUE(r.iterations[5].newly_covered.empty());
  EXPECT_EQ(r.final_covered(), 6u);
  // each iteration is sourced by the previous iteration's new coverage only
  EXPECT_EQ(r.iterations[3].sources, std::vector<std::string>{"chain.a3"});
}

TEST(Campaign, IterationCapIsHonoured) {
  auto db = chain_corpus(6);
  auto config = small_config();
  config.iterations = 3;
  Campaign campaign(db, config, chain_factory(6));
  const auto& r = campaign.run();
  ASSERT_EQ(r.iterations.size(), 3u);
  EXPECT_FALSE(r.iterations.back().newly_covered.empty());
  EXPECT_EQ(r.final_covered(), 4u);
  EXPECT_EQ(r.initial_covered, 1u);
}

TEST(Campaign, InsertedRecordsCarryIterationOrigin) {
  auto db = chain_corpus(3);
  Campaign campaign(db, small_config(), chain_factory(3));
  campaign.run();
  const auto recs = db.valid_invocations("chain.a2", 10);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].origin, Origin{2});
  EXPECT_EQ(recs[0].positional.size(), 3u);
}

TEST(Campaign, StopsAfterOneIterationWithoutNewCoverage) {
  CorpusDb db;
  for (const char* name : {"m.a", "m.b"}) {
    ApiEntry e;
    e.qualified_name = name;
    e.args = {ArgSpec{"input", 0, false, {}, {}}};
    db.add_api(e);
    db.record_new_invocation({name, {tensor({3}, 1)}, {}, {}});
  }
  auto config = small_config();
  config.iterations = 10;
  Campaign campaign(db, config, [](std::size_t) {
    json m = {{"params", {{{"name", "input"}}}}, {"value_class", "v"}};
    return std::make_unique<MockExecutor>(
        std::make_shared<const MockScript>(MockScript::from_json({{"apis", {{"m.a", m}, {"m.b", m}}}})));
  });
  const auto& r = campaign.run();
  ASSERT_EQ(r.iterations.size(), 1u);
  EXPECT_EQ(r.iterations[0].value_equivalent, 2u);  // both directions
  EXPECT_TRUE(r.inconsistencies.empty());
}

TEST(Campaign, PhasesCanStopEarly) {
  auto db = chain_corpus(3);
  Campaign campaign(db, small_config(), chain_factory(3));
  const auto m = campaign.run_iteration({"chain.a0"}, 1, Phase::Match);
  EXPECT_FALSE(m.candidates.empty());
  EXPECT_TRUE(m.plans.empty());
  const auto s = campaign.run_iteration({"chain.a0"}, 1, Phase::Synthesize);
  ASSERT_EQ(s.plans.size(), 1u);
  EXPECT_EQ(s.plans[0].plan.kind, PlanKind::Template);
  EXPECT_FALSE(s.aborts.empty());
  EXPECT_EQ(db.covered().size(), 1u);
  const auto v = campaign.run_iteration({"chain.a0"}, 1, Phase::Verify);
  EXPECT_EQ(v.verdicts.size(), 1u);
  EXPECT_EQ(db.covered().size(), 2u);
  // already evaluated plans are not planned again
  EXPECT_TRUE(campaign.run_iteration({"chain.a0"}, 2, Phase::Synthesize).plans.empty());
}

json fixture_report(std::size_t workers, std::size_t fuzz_n = 1000) {
  auto db = load_corpus(fixture("mini_corpus.json"));
  CampaignConfig c;
  c.seed = 42;
  c.workers = workers;
  c.fuzz_n = fuzz_n;
  Campaign campaign(db, c, make_client_factory("mock:" + fixture("mini_mock.json")));
  campaign.run();
  campaign.report().fpr = fpr(campaign.report(), Labels::load(fixture("mini_labels.json")));
  return to_json(campaign.report(), db);
}

TEST(Campaign, FixtureMatchesGoldenReport) {
  const auto golden = testing::read_file(std::string(RELFUZZ_GOLDEN) + "/mini_run_seed42.json");
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(fixture_report(1).dump(2) + "\n", golden);
}

TEST(Campaign, ReportIndependentOfWorkerCount) {
  const auto one = fixture_report(1, 100).dump();
  EXPECT_EQ(fixture_report(3, 100).dump(), one);
  EXPECT_EQ(fixture_report(8, 100).dump(), one);
}

TEST(Campaign, FixtureFindsSeededBugs) {
  const auto r = fixture_report(2);
  std::set<std::pair<std::string, std::string>> found;
  for (const auto& i : r["inconsistencies"]) found.insert({i["source"].get<std::string>(), i["target"].get<std::string>()});
  EXPECT_TRUE(found.count({"mini.avg_pool", "mini.max_pool"}) || found.count({"mini.max_pool", "mini.avg_pool"}));
  EXPECT_TRUE(found.count({"mini.kth_value", "mini.Tensor.kth_value"}) ||
              found.count({"mini.Tensor.kth_value", "mini.kth_value"}));
  const auto& per = r["coverage"]["per_iteration"];
  for (std::size_t i = 1; i < per.size(); ++i) EXPECT_GE(per[i].get<int>(), per[i - 1].get<int>());
  EXPECT_GE(per[0].get<int>(), r["coverage"]["initial"].get<int>());
}

TEST(Campaign, TimingsStayOutOfTheReport) {
  auto db = chain_corpus(2);
  Campaign campaign(db, small_config(), chain_factory(2));
  campaign.run();
  EXPECT_EQ(to_json(campaign.report(), db).dump().find("_ms"), std::string::npos);
  const auto t = timings_to_json(campaign.report());
  ASSERT_EQ(t.size(), campaign.report().iterations.size());
  EXPECT_TRUE(t[0].contains("verify_ms"));
}

TEST(Campaign, InvalidConfigIsRejected) {
  auto db = chain_corpus(2);
  for (auto mutate : std::vector<std::function<void(CampaignConfig&)>>{
           [](CampaignConfig& c) { c.top_k = 0; }, [](CampaignConfig& c) { c.iterations = 0; },
           [](CampaignConfig& c) { c.workers = 0; }, [](CampaignConfig& c) { c.tolerance.rtol = -1; },
           [](CampaignConfig& c) { c.verify_cap = 0; }}) {
    auto c = small_config();
    mutate(c);
    EXPECT_THROW(Campaign(db, c, chain_factory(2)), ConfigError);
  }
}

ReportedInconsistency inc(std::string s, std::string t) {
  ReportedInconsistency r;
  r.inconsistency.source = std::move(s);
  r.inconsistency.target = std::move(t);
  return r;
}

TEST(Fpr, Examples) {
  Labels l;
  l.set("a", "b", true);
  l.set("c", "d", true);
  l.set("e", "f", false);
  auto r = fpr({inc("a", "b"), inc("c", "d")}, l);
  EXPECT_EQ(r.rate, 0.0);
  EXPECT_EQ(r.true_positives, 2u);
  r = fpr({inc("a", "b"), inc("e", "f"), inc("b", "a")}, l);
  EXPECT_EQ(r.rate, 0.5);
  r = fpr(std::vector<ReportedInconsistency>{}, l);
  EXPECT_EQ(r.rate, 0.0);
  EXPECT_TRUE(r.no_findings);
}

TEST(Fpr, UnlabeledPairsAreNamed) {
  Labels l;
  l.set("a", "b", true);
  try {
    fpr({inc("a", "b"), inc("x", "y")}, l);
    FAIL() << "expected LabelError";
  } catch (const LabelError& e) {
    EXPECT_NE(std::string(e.what()).find("x / y"), std::string::npos);
  }
}

TEST(Labels, Parsing) {
  const auto l = Labels::from_json(json::parse(R"({"bugs": [], "inconsistencies": [
      {"source": "a", "target": "b", "label": "tp"},
      {"source": "d", "target": "c", "label": "false_positive"}]})"));
  EXPECT_EQ(l.find("b", "a"), true);
  EXPECT_EQ(l.find("c", "d"), false);
  EXPECT_FALSE(l.find("a", "c"));
  EXPECT_THROW(Labels::from_json(json::parse(R"({"inconsistencies": [{"source": "a", "target": "b", "label": "maybe"}]})")),
               LabelError);
  EXPECT_THROW(Labels::from_json(json::array()), LabelError);
  EXPECT_THROW(Labels::load("/nonexistent/labels.json"), LabelError);
  EXPECT_NO_THROW(Labels::load(fixture("mini_labels.json")));
}

TEST(ParallelFor, StaticPartition) {
  std::vector<std::size_t> owner(101, 99);
  std::mutex mu;
  std::vector<std::vector<std::size_t>> order(4);
  parallel_for(101, 4, [&](std::size_t i, std::size_t w) {
    owner[i] = w;
    std::lock_guard lock(mu);
    order[w].push_back(i);
  });
  for (std::size_t i = 0; i < 101; ++i) EXPECT_EQ(owner[i], i % 4);
  for (const auto& o : order) EXPECT_TRUE(std::is_sorted(o.begin(), o.end()));
  std::atomic<int> calls = 0;
  parallel_for(0, 4, [&](std::size_t, std::size_t) { ++calls; });
  parallel_for(3, 16, [&](std::size_t, std::size_t w) { EXPECT_LT(w, 3u); ++calls; });
  EXPECT_EQ(calls, 3);
}

TEST(ParallelFor, RethrowsLowestFailingItem) {
  for (std::size_t workers : {1, 3}) {
    try {
      parallel_for(20, workers, [](std::size_t i, std::size_t) {
        if (i == 7 || i == 5 || i == 13) throw std::runtime_error(std::to_string(i));
      });
      FAIL();
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "5");
    }
  }
}

}  // namespace
}  // namespace relfuzz
