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

#include "test_util.hpp"

namespace relfuzz {
namespace {

using testing::tensor;
using testing::TempDir;

PairedRequest request(std::uint64_t seed = 1) {
  PairedRequest r;
  r.id = 7;
  r.source = CallSpec{"m.s", {tensor({2, 3}, seed), Value::integer(-1)}, {{"keepdim", Value::boolean(true)}}, {}, {}};
  r.target = CallSpec{"m.t", {}, {}, std::string("m.t(m.zeros(#2), #1)"), {tensor({2, 3}, seed), Value::integer(-1)}};
  r.tolerance = {1e-4, 1e-7};
  r.timeout_ms = 1234;
  return r;
}

TEST(Wire, RequestRoundTrip) {
  const auto r = request();
  const auto line = to_json(r).dump();
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(request_from_json(json::parse(line)), r);
  const auto j = json::parse(line);
  EXPECT_EQ(j["target"]["template"], "m.t(m.zeros(#2), #1)");
  EXPECT_FALSE(j["target"].contains("positional"));
  EXPECT_EQ(j["source"]["keyword"]["keepdim"]["kind"], "bool");
}

TEST(Wire, ResponseRoundTrip) {
  PairedResponse r;
  r.id = 3;
  r.value_equal = false;
  ValueSummary s;
  s.shape = {2};
  s.dtype = "float32";
  s.numel = 2;
  s.values = {std::numeric_limits<double>::quiet_NaN(), -0.0};
  s.hash = "ab";
  r.value_summary_s = s;
  r.value_summary_t = s;
  EXPECT_EQ(response_from_json(json::parse(to_json(r).dump())), r);

  PairedResponse c = crash_response(4, false, Status::Crash, "timeout");
  EXPECT_EQ(c.detail_s, "timeout");
  EXPECT_EQ(c.detail_t, "not-executed (timeout)");
  EXPECT_EQ(response_from_json(to_json(c)), c);
}

TEST(Wire, ValueEqualPresentExactlyWhenBothSucceed) {
  EXPECT_THROW(response_from_json({{"id", 1}, {"status_s", "Success"}, {"status_t", "Success"}}), ValueError);
  EXPECT_THROW(response_from_json({{"id", 1}, {"status_s", "Success"}, {"status_t", "Exception"}, {"value_equal", true}}),
               ValueError);
  EXPECT_NO_THROW(response_from_json({{"id", 1}, {"status_s", "Crash"}, {"status_t", "Crash"}}));
  EXPECT_THROW(response_from_json({{"id", 1}, {"status_s", "Fine"}, {"status_t", "Crash"}}), ValueError);
}

TEST(Wire, CrashWhileTargetRunsKeepsSourceStatus) {
  const auto r = crash_response(9, true, Status::Exception, "signal 6");
  EXPECT_EQ(r.status_s, Status::Exception);
  EXPECT_EQ(r.status_t, Status::Crash);
  EXPECT_EQ(r.detail_t, "signal 6");
  EXPECT_FALSE(r.detail_s);
}

// Subprocess executor driven by the mock binary with a generated script.
class SubprocessTest : public ::testing::Test {
 protected:
  std::unique_ptr<SubprocessClient> client(json extra, std::size_t max_restarts = 4) {
    json model = {{"params", {{{"name", "input"}}}}, {"value_class", "c"}};
    json script = {{"apis", {{"m.s", model}, {"m.t", model}}}};
    script.update(extra);
    const auto path = dir_.write("script.json", script.dump());
    SubprocessOptions o;
    o.command = std::string("exec '") + RELFUZZ_MOCK_EXEC + "' --script '" + path + "'";
    o.max_restarts = max_restarts;
    o.forward_stderr = false;
    return std::make_unique<SubprocessClient>(o);
  }

  static PairedRequest plain(std::uint64_t seed, int timeout_ms = 5000) {
    PairedRequest r;
    r.source = CallSpec{"m.s", {tensor({3}, seed)}, {}, {}, {}};
    r.target = CallSpec{"m.t", {tensor({3}, seed)}, {}, {}, {}};
    r.timeout_ms = timeout_ms;
    return r;
  }

  TempDir dir_;
};

TEST_F(SubprocessTest, HandshakeAndSuccess) {
  auto c = client(json::object());
  for (std::uint64_t i = 1; i <= 3; ++i) {
    const auto r = c->call_paired(plain(i));
    EXPECT_EQ(r.id, i);
    EXPECT_EQ(r.status_s, Status::Success);
    EXPECT_EQ(r.status_t, Status::Success);
    EXPECT_EQ(r.value_equal, true);
  }
  EXPECT_EQ(c->restarts(), 0u);
}

TEST_F(SubprocessTest, ResultsMatchInProcessMock) {
  json model = {{"params", {{{"name", "input"}}}}, {"value_class", "c"}};
  const auto script = std::make_shared<MockScript>(MockScript::from_json({{"apis", {{"m.s", model}, {"m.t", model}}}}));
  MockExecutor local(script);
  auto c = client(json::object());
  for (std::uint64_t i = 1; i <= 5; ++i) EXPECT_EQ(c->call_paired(plain(i)), local.call_paired(plain(i)));
}

TEST_F(SubprocessTest, DeathIsContainedAndLaterRequestsSucceed) {
  auto c = client({{"die_on_request", {2}}});
  EXPECT_EQ(c->call_paired(plain(1)).status_s, Status::Success);
  const auto dead = c->call_paired(plain(2));
  EXPECT_EQ(dead.id, 2u);
  EXPECT_EQ(dead.status_s, Status::Crash);
  EXPECT_EQ(dead.status_t, Status::Crash);
  EXPECT_EQ(dead.detail_s, "signal 11");
  EXPECT_EQ(dead.detail_t, "not-executed");
  const auto after = c->call_paired(plain(3));
  EXPECT_EQ(after.id, 3u);
  EXPECT_EQ(after.status_s, Status::Success);
  EXPECT_EQ(c->restarts(), 1u);
}

TEST_F(SubprocessTest, DeathDuringTargetUsesProgressMarker) {
  auto c = client({{"die_on_request", {1}}, {"die_side", "target"}});
  const auto r = c->call_paired(plain(1));
  EXPECT_EQ(r.status_s, Status::Success);
  EXPECT_EQ(r.status_t, Status::Crash);
  EXPECT_EQ(r.detail_t, "signal 11");
  EXPECT_EQ(c->call_paired(plain(2)).status_t, Status::Success);
}

TEST_F(SubprocessTest, HangBecomesTimeoutCrash) {
  auto c = client({{"hang_on_request", {1}}});
  const auto r = c->call_paired(plain(1, 300));
  EXPECT_EQ(r.status_s, Status::Crash);
  EXPECT_EQ(r.detail_s, "timeout");
  EXPECT_EQ(r.detail_t, "not-executed (timeout)");
  EXPECT_EQ(c->call_paired(plain(2)).status_s, Status::Success);
  EXPECT_EQ(c->restarts(), 1u);
}

TEST_F(SubprocessTest, RestartBudgetExhaustionIsInfraError) {
  auto c = client({{"die_on_request", {1, 2, 3}}}, 2);
  EXPECT_EQ(c->call_paired(plain(1)).status_s, Status::Crash);
  EXPECT_EQ(c->call_paired(plain(2)).status_s, Status::Crash);
  EXPECT_THROW(c->call_paired(plain(3)), InfraError);
}

TEST(Subprocess, UnlaunchableCommandIsInfraError) {
  SubprocessOptions o;
  o.command = "/nonexistent/relfuzz-executor";
  o.forward_stderr = false;
  EXPECT_THROW(SubprocessClient{o}, InfraError);
  o.command = "echo '{\"ready\": false}'";
  EXPECT_THROW(SubprocessClient{o}, InfraError);
  o.command = "echo '{\"ready\": true, \"protocol\": 99}'";
  EXPECT_THROW(SubprocessClient{o}, InfraError);
}

TEST(Subprocess, MockPrefixSelectsInProcessClient) {
  TempDir dir;
  const auto path = dir.write("s.json", R"({"apis": {}})");
  auto factory = make_client_factory("mock:" + path);
  EXPECT_NE(dynamic_cast<MockExecutor*>(factory(0).get()), nullptr);
  EXPECT_THROW(make_client_factory(""), InfraError);
  EXPECT_THROW(make_client_factory("mock:" + dir.file("missing.json")), MockScriptError);
}

}  // namespace
}  // namespace relfuzz
