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

// Scriptable executor for tests and hermetic campaigns.
//
// A script is JSON with three optional parts:
//
//   "entries": exact outcomes keyed by (source, target, input_hash), where
//              input_hash is relfuzz::input_hash of the source call or "*":
//     {"source": "a", "target": "b", "input_hash": "*",
//      "status_s": "Success", "status_t": "Exception",
//      "value_equal": true, "exception_class_t": "ValueError"}
//
//   "apis": behaviour models used when no entry matches:
//     {"mini.sum": {"params": [{"name": "input", "kinds": ["tensor"]},
//                              {"name": "dim", "default": {"kind": "none"}}],
//                   "value_class": "sum",
//                   "value_args": ["input"],
//                   "exception_on": [{"when": "negative_dim", "class": "RuntimeError"}],
//                   "crash_on": [...], "unstable_on": [...]}}
//     A side's result is a fingerprint of its value class and the values of
//     its value_args, so APIs sharing a value class agree on equal inputs.
//     Conditions: always, negative_dim, empty_tensor, negative_int,
//     index_out_of_range (param k outside [1, last dim of first tensor]),
//     dim_out_of_range (param), rank_below (min), dtype_in (dtypes).
//
//   "die_on_request": [k, ...] request ids (the client numbers requests from 1,
//   across restarts) on which the executor dies while running "die_side" ("source" by default); "hang_on_request"
//   likewise hangs.
//
// Requests matching neither an entry nor models for both APIs raise
// MockScriptError.

#pragma once

#include <csignal>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "relfuzz/protocol.hpp"

namespace relfuzz {

class MockScriptError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MockCondition {
  std::string when;
  std::string param;
  std::int64_t min = 0;
  std::set<std::string> dtypes;
  std::string exception_class = "RuntimeError";
};

struct MockParam {
  std::string name;
  std::set<std::string> kinds;  // empty: any kind
  std::optional<Value> default_value;
};

struct MockApi {
  std::vector<MockParam> params;
  std::string value_class;
  std::vector<std::string> value_args;  // empty: all params
  std::string result_dtype = "float32";
  std::vector<MockCondition> exception_on;
  std::vector<MockCondition> crash_on;
  std::vector<MockCondition> unstable_on;
};

struct MockEntry {
  std::string source;
  std::string target;
  std::string input_hash = "*";
  PairedResponse outcome;
};

struct SideResult {
  Status status = Status::Success;
  std::optional<std::string> exception_class;
  std::optional<ValueSummary> summary;
  std::optional<std::string> detail;
};

class MockScript {
 public:
  std::map<std::string, MockApi> apis;
  std::vector<MockEntry> entries;
  std::set<std::uint64_t> die_on_request;
  std::set<std::uint64_t> hang_on_request;
  bool die_during_target = false;

  static MockScript from_json(const json& j) {
    MockScript s;
    auto conditions = [](const json& arr) {
      std::vector<MockCondition> out;
      for (const auto& c : arr) {
        MockCondition m;
        m.when = c.at("when").get<std::string>();
        m.param = c.value("param", "");
        m.min = c.value("min", std::int64_t{0});
        if (c.contains("dtypes")) m.dtypes = c["dtypes"].get<std::set<std::string>>();
        m.exception_class = c.value("class", "RuntimeError");
        out.push_back(std::move(m));
      }
      return out;
    };
    if (auto it = j.find("apis"); it != j.end()) {
      for (const auto& [name, a] : it->items()) {
        MockApi api;
        for (const auto& p : a.value("params", json::array())) {
          MockParam mp;
          mp.name = p.at("name").get<std::string>();
          if (p.contains("kinds")) mp.kinds = p["kinds"].get<std::set<std::string>>();
          if (p.contains("default")) mp.default_value = value_from_json(p["default"]);
          api.params.push_back(std::move(mp));
        }
        api.value_class = a.value("value_class", name);
        api.value_args = a.value("value_args", std::vector<std::string>{});
        api.result_dtype = a.value("result_dtype", "float32");
        api.exception_on = conditions(a.value("exception_on", json::array()));
        api.crash_on = conditions(a.value("crash_on", json::array()));
        api.unstable_on = conditions(a.value("unstable_on", json::array()));
        s.apis.emplace(name, std::move(api));
      }
    }
    for (const auto& e : j.value("entries", json::array())) {
      MockEntry m;
      m.source = e.at("source").get<std::string>();
      m.target = e.at("target").get<std::string>();
      m.input_hash = e.value("input_hash", "*");
      json o = e;
      o["id"] = 0;
      const bool both = o.value("status_s", "Success") == "Success" && o.value("status_t", "Success") == "Success";
      o["status_s"] = o.value("status_s", "Success");
      o["status_t"] = o.value("status_t", "Success");
      if (both && !o.contains("value_equal")) o["value_equal"] = true;
      if (!both) o.erase("value_equal");
      m.outcome = response_from_json(o);
      s.entries.push_back(std::move(m));
    }
    for (auto k : j.value("die_on_request", std::vector<std::uint64_t>{})) s.die_on_request.insert(k);
    for (auto k : j.value("hang_on_request", std::vector<std::uint64_t>{})) s.hang_on_request.insert(k);
    s.die_during_target = j.value("die_side", "source") == "target";
    return s;
  }

  static MockScript load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MockScriptError("cannot open mock script '" + path + "'");
    try {
      return from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw MockScriptError("mock script '" + path + "': " + e.what());
    }
  }

  // Scripted entry for this request, if any.
  const MockEntry* find_entry(const PairedRequest& req) const {
    const std::string hash = input_hash(InvocationRecord{req.source.api, req.source.positional,
                                                         req.source.keyword, {}});
    const MockEntry* wildcard = nullptr;
    for (const auto& e : entries) {
      if (e.source != req.source.api || e.target != req.target.api) continue;
      if (e.input_hash == hash) return &e;
      if (e.input_hash == "*" && !wildcard) wildcard = &e;
    }
    return wildcard;
  }

  // Outcome of one side from the behaviour models.
  SideResult run_side(const CallSpec& call) const {
    auto it = apis.find(call.api);
    if (it == apis.end()) throw MockScriptError("unscripted api '" + call.api + "'");
    const MockApi& api = it->second;

    std::vector<std::pair<std::string, Value>> args;
    SideResult r;
    auto type_error = [&](std::string why) {
      r.status = Status::Exception;
      r.exception_class = "TypeError";
      r.detail = std::move(why);
      return r;
    };
    if (call.template_text) {
      for (std::size_t i = 0; i < call.bindings.size(); ++i)
        args.emplace_back("#" + std::to_string(i + 1), call.bindings[i]);
    } else {
      if (call.positional.size() > api.params.size()) return type_error("too many positional arguments");
      std::vector<std::optional<Value>> slots(api.params.size());
      for (std::size_t i = 0; i < call.positional.size(); ++i) slots[i] = call.positional[i];
      for (const auto& [k, v] : call.keyword) {
        std::size_t i = 0;
        while (i < api.params.size() && api.params[i].name != k) ++i;
        if (i == api.params.size()) return type_error("unexpected keyword '" + k + "'");
        if (slots[i]) return type_error("duplicate argument '" + k + "'");
        slots[i] = v;
      }
      for (std::size_t i = 0; i < api.params.size(); ++i) {
        const auto& p = api.params[i];
        if (!slots[i]) {
          if (!p.default_value) return type_error("missing argument '" + p.name + "'");
          slots[i] = p.default_value;
        }
        if (!p.kinds.empty() && !p.kinds.count(kind_name(slots[i]->kind())))
          return type_error("argument '" + p.name + "' has kind " + kind_name(slots[i]->kind()));
        args.emplace_back(p.name, *slots[i]);
      }
    }

    for (const auto& c : api.crash_on) {
      if (holds(c, args)) {
        r.status = Status::Crash;
        r.detail = "signal 11";
        return r;
      }
    }
    for (const auto& c : api.exception_on) {
      if (holds(c, args)) {
        r.status = Status::Exception;
        r.exception_class = c.exception_class;
        return r;
      }
    }

    json fp = json::array({api.value_class});
    if (call.template_text || api.value_args.empty()) {
      for (const auto& [name, v] : args) fp.push_back(to_json(v));
    } else {
      for (const auto& want : api.value_args)
        for (const auto& [name, v] : args)
          if (name == want) fp.push_back(to_json(v));
    }
    std::uint64_t h = fnv1a64(fp.dump());
    for (const auto& c : api.unstable_on) {
      if (holds(c, args)) h = splitmix64(h ^ fnv1a64("unstable"));
    }
    ValueSummary s;
    s.kind = "tensor";
    s.shape = {4};
    s.dtype = api.result_dtype;
    s.numel = 4;
    std::uint64_t x = h;
    for (int i = 0; i < 4; ++i) {
      x = splitmix64(x);
      s.values.push_back(static_cast<double>(x >> 11) * 0x1.0p-53);
    }
    s.hash = to_hex(h);
    r.summary = std::move(s);
    return r;
  }

  // Full paired evaluation, ignoring die/hang scripting.
  PairedResponse evaluate(const PairedRequest& req) const {
    if (const auto* e = find_entry(req)) {
      PairedResponse r = e->outcome;
      r.id = req.id;
      return r;
    }
    const SideResult s = run_side(req.source);
    if (s.status == Status::Crash) {
      auto r = crash_response(req.id, false, Status::Crash, *s.detail);
      return r;
    }
    const SideResult t = run_side(req.target);
    PairedResponse r;
    r.id = req.id;
    r.status_s = s.status;
    r.status_t = t.status;
    r.exception_class_s = s.exception_class;
    r.exception_class_t = t.exception_class;
    r.value_summary_s = s.summary;
    r.value_summary_t = t.summary;
    if (t.status == Status::Crash) r.detail_t = t.detail;
    if (s.status == Status::Success && t.status == Status::Success)
      r.value_equal = compare_values(*s.summary, *t.summary, req.tolerance);
    return r;
  }

 private:
  static const TensorSpec* first_tensor(const std::vector<std::pair<std::string, Value>>& args) {
    for (const auto& [n, v] : args)
      if (v.is<TensorSpec>()) return &v.as<TensorSpec>();
    return nullptr;
  }

  template <typename Pred>
  static bool any_value(const Value& v, Pred&& pred) {
    if (pred(v)) return true;
    if (const auto* items = v.items())
      for (const auto& i : *items)
        if (any_value(i, pred)) return true;
    return false;
  }

  static bool holds(const MockCondition& c, const std::vector<std::pair<std::string, Value>>& args) {
    auto selected = [&](const std::string& name) { return c.param.empty() || c.param == name; };
    if (c.when == "always") return true;
    if (c.when == "negative_dim" || c.when == "empty_tensor") {
      const bool neg = c.when == "negative_dim";
      for (const auto& [n, v] : args) {
        if (!selected(n)) continue;
        if (any_value(v, [&](const Value& x) {
              if (!x.is<TensorSpec>()) return false;
              const auto& t = x.as<TensorSpec>();
              if (neg) return t.has_negative_dim();
              return !t.has_negative_dim() && t.element_count() == 0;
            }))
          return true;
      }
      return false;
    }
    if (c.when == "negative_int") {
      for (const auto& [n, v] : args) {
        if (!selected(n)) continue;
        if (any_value(v, [](const Value& x) { return x.is<std::int64_t>() && x.as<std::int64_t>() < 0; }))
          return true;
      }
      return false;
    }
    if (c.when == "index_out_of_range" || c.when == "dim_out_of_range") {
      const auto* t = first_tensor(args);
      const auto rank = t ? static_cast<std::int64_t>(t->shape.size()) : 0;
      for (const auto& [n, v] : args) {
        if (!selected(n) || !v.is<std::int64_t>()) continue;
        const auto k = v.as<std::int64_t>();
        if (c.when == "index_out_of_range") {
          const std::int64_t size = rank == 0 ? 1 : t->shape.back();
          if (k < 1 || k > size) return true;
        } else {
          const std::int64_t r = std::max<std::int64_t>(rank, 1);
          if (k < -r || k >= r) return true;
        }
      }
      return false;
    }
    if (c.when == "rank_below") {
      const auto* t = first_tensor(args);
      return t && static_cast<std::int64_t>(t->shape.size()) < c.min;
    }
    if (c.when == "dtype_in") {
      for (const auto& [n, v] : args) {
        if (!selected(n)) continue;
        if (any_value(v, [&](const Value& x) { return x.is<TensorSpec>() && c.dtypes.count(x.as<TensorSpec>().dtype); }))
          return true;
      }
      return false;
    }
    throw MockScriptError("unknown mock condition '" + c.when + "'");
  }
};

// In-process client replaying a script. Scripted deaths and hangs are
// reported the way SubprocessClient reports a real one, and count as
// restarts.
class MockExecutor final : public ExecutorClient {
 public:
  explicit MockExecutor(std::shared_ptr<const MockScript> script, std::size_t max_restarts = 32)
      : script_(std::move(script)), max_restarts_(max_restarts) {}

  PairedResponse call_paired(PairedRequest req) override {
    req.id = ++requests_;
    const bool die = script_->die_on_request.count(req.id) != 0;
    const bool hang = script_->hang_on_request.count(req.id) != 0;
    if (die || hang) {
      if (restarts_ >= max_restarts_)
        throw InfraError("executor restart budget (" + std::to_string(max_restarts_) + ") exhausted");
      ++restarts_;
      const std::string detail = hang ? "timeout" : "signal 11";
      if (!hang && script_->die_during_target) {
        Status source = Status::Success;
        const auto* entry = script_->find_entry(req);
        if (entry) source = entry->outcome.status_s;
        else source = script_->run_side(req.source).status;
        if (source != Status::Crash) return crash_response(req.id, true, source, detail);
      }
      return crash_response(req.id, false, Status::Crash, detail);
    }
    return script_->evaluate(req);
  }

  std::size_t restarts() const override { return restarts_; }
  std::uint64_t requests() const { return requests_; }

 private:
  std::shared_ptr<const MockScript> script_;
  std::size_t max_restarts_;
  std::uint64_t requests_ = 0;
  std::size_t restarts_ = 0;
};

// Executor main loop over standard streams, used by the mock executor
// binary. Scripted deaths really kill the process; hangs really hang.
inline int serve_mock(const MockScript& script, std::istream& in, std::ostream& out, std::ostream& err) {
  out << json{{"ready", true}, {"protocol", kProtocolVersion}}.dump() << "\n" << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    PairedRequest req;
    try {
      req = request_from_json(json::parse(line));
    } catch (const std::exception& e) {
      err << "bad request: " << e.what() << "\n" << std::flush;
      return 2;
    }
    err << kPhaseMarker << req.id << " source\n" << std::flush;
    if (script.hang_on_request.count(req.id)) {
      while (true) std::this_thread::sleep_for(std::chrono::seconds(1));
    }
    const bool die = script.die_on_request.count(req.id) != 0;
    if (die && !script.die_during_target) {
      std::signal(SIGSEGV, SIG_DFL);
      std::raise(SIGSEGV);
    }
    PairedResponse resp = script.evaluate(req);
    if (resp.status_s != Status::Crash)
      err << kPhaseMarker << req.id << " target " << status_name(resp.status_s) << "\n" << std::flush;
    if (die || resp.status_s == Status::Crash || resp.status_t == Status::Crash) {
      std::signal(SIGSEGV, SIG_DFL);
      std::raise(SIGSEGV);
    }
    out << to_json(resp).dump() << "\n" << std::flush;
  }
  return 0;
}

}  // namespace relfuzz
