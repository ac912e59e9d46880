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

// Mutation-based fuzzing of verified pairs.

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relfuzz/hash.hpp"
#include "relfuzz/verifier.hpp"

namespace relfuzz {

enum class MutationRule {
  TensorShape,
  TensorDtype,
  TensorContent,
  IntBoundary,
  FloatBoundary,
  BoolFlip,
  StrPool,
  ListResize,
};

inline const char* rule_name(MutationRule r) {
  switch (r) {
    case MutationRule::TensorShape: return "tensor-shape";
    case MutationRule::TensorDtype: return "tensor-dtype";
    case MutationRule::TensorContent: return "tensor-content";
    case MutationRule::IntBoundary: return "int-boundary";
    case MutationRule::FloatBoundary: return "float-boundary";
    case MutationRule::BoolFlip: return "bool-flip";
    case MutationRule::StrPool: return "str-pool";
    case MutationRule::ListResize: return "list-resize";
  }
  return "?";
}

struct MutationOptions {
  bool inject_nonfinite = false;
};

inline constexpr std::array<const char*, 8> kDtypePool = {
    "float16", "bfloat16", "float32", "float64", "int32", "int64", "bool", "complex64"};
inline constexpr std::array<const char*, 8> kStrPool = {
    "", "mean", "sum", "none", "max", "same", "valid", "zzz_invalid"};

// Rules that can rewrite a value of this kind.
inline std::vector<MutationRule> applicable_rules(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Tensor:
      return {MutationRule::TensorShape, MutationRule::TensorDtype, MutationRule::TensorContent};
    case ValueKind::Int: return {MutationRule::IntBoundary};
    case ValueKind::Float: return {MutationRule::FloatBoundary};
    case ValueKind::Bool: return {MutationRule::BoolFlip};
    case ValueKind::Str: return {MutationRule::StrPool};
    case ValueKind::List:
    case ValueKind::Tuple: return {MutationRule::ListResize};
    case ValueKind::None:
    case ValueKind::Raw: return {};
  }
  return {};
}

// Boundary values used by int-boundary, given the current value.
inline std::vector<std::int64_t> int_boundaries(std::int64_t v) {
  constexpr auto big = std::numeric_limits<std::int32_t>::max();
  std::vector<std::int64_t> out = {0, -1, 1, -2, big, -static_cast<std::int64_t>(big) - 1,
                                   std::numeric_limits<std::int64_t>::max()};
  if (v != std::numeric_limits<std::int64_t>::min()) out.push_back(-v);
  if (v != std::numeric_limits<std::int64_t>::max()) out.push_back(v + 1);
  if (v != std::numeric_limits<std::int64_t>::min()) out.push_back(v - 1);
  return out;
}

Value mutate(const Value& v, Rng& rng, const MutationOptions& opts = {});

// Applies one specific rule. Values the rule does not apply to are returned
// unchanged.
inline Value apply_rule(MutationRule rule, const Value& v, Rng& rng, const MutationOptions& opts = {}) {
  switch (rule) {
    case MutationRule::TensorShape: {
      if (!v.is<TensorSpec>()) return v;
      TensorSpec t = v.as<TensorSpec>();
      const auto choice = rng.below(t.shape.empty() ? 2 : 4);
      if (t.shape.empty() || choice == 0) {
        // add a dim
        const std::int64_t dims[] = {1, 2, 3, 0, -1};
        t.shape.push_back(rng.pick(dims));
      } else if (choice == 1) {
        t.shape.pop_back();
      } else {
        // boundary value for one dim: 0, -1, -2, 1 or doubled
        auto& d = t.shape[rng.below(t.shape.size())];
        const std::int64_t options[] = {0, -1, -2, 1, d * 2};
        d = rng.pick(options);
      }
      t.content = rng.next();
      return Value::tensor(std::move(t));
    }
    case MutationRule::TensorDtype: {
      if (!v.is<TensorSpec>()) return v;
      TensorSpec t = v.as<TensorSpec>();
      std::string dtype = t.dtype;
      while (dtype == t.dtype) dtype = rng.pick(kDtypePool);
      t.dtype = dtype;
      if (t.has_inline_values()) t.content = rng.next();
      return Value::tensor(std::move(t));
    }
    case MutationRule::TensorContent: {
      if (!v.is<TensorSpec>()) return v;
      TensorSpec t = v.as<TensorSpec>();
      const auto n = t.element_count();
      if (!t.has_negative_dim() && n > 0 && n <= 64 && rng.chance(1, 2)) {
        // inline content with an extreme magnitude planted somewhere
        std::vector<double> vals(static_cast<std::size_t>(n));
        for (auto& x : vals) x = std::round((rng.unit() * 20.0 - 10.0) * 8.0) / 8.0;
        std::vector<double> extremes = {0.0, -1.0, 1e30, -1e30, 1e-30};
        if (opts.inject_nonfinite) {
          extremes.push_back(std::numeric_limits<double>::quiet_NaN());
          extremes.push_back(std::numeric_limits<double>::infinity());
          extremes.push_back(-std::numeric_limits<double>::infinity());
        }
        vals[rng.below(vals.size())] = rng.pick(extremes);
        t.content = std::move(vals);
      } else {
        t.content = rng.next();
      }
      return Value::tensor(std::move(t));
    }
    case MutationRule::IntBoundary: {
      if (!v.is<std::int64_t>()) return v;
      const auto options = int_boundaries(v.as<std::int64_t>());
      return Value::integer(rng.pick(options));
    }
    case MutationRule::FloatBoundary: {
      if (!v.is<double>()) return v;
      const double x = v.as<double>();
      std::vector<double> options = {0.0, -0.0, 1.0, -1.0, 1e-30, 1e30, -1e30, -x, x * 2};
      if (opts.inject_nonfinite) {
        options.push_back(std::numeric_limits<double>::quiet_NaN());
        options.push_back(std::numeric_limits<double>::infinity());
        options.push_back(-std::numeric_limits<double>::infinity());
      }
      return Value::real(rng.pick(options));
    }
    case MutationRule::BoolFlip:
      return v.is<bool>() ? Value::boolean(!v.as<bool>()) : v;
    case MutationRule::StrPool: {
      if (!v.is<std::string>()) return v;
      std::string s = v.as<std::string>();
      while (s == v.as<std::string>()) s = rng.pick(kStrPool);
      return Value::str(std::move(s));
    }
    case MutationRule::ListResize: {
      const auto* items = v.items();
      if (!items) return v;
      std::vector<Value> out = *items;
      const auto choice = rng.below(out.empty() ? 2 : 4);
      if (choice == 0 && !out.empty()) {
        out.push_back(out[rng.below(out.size())]);  // grow by duplicating
      } else if (choice == 1 || out.empty()) {
        if (out.empty()) out.push_back(Value::integer(1));
        else out.pop_back();
      } else {
        // element-wise mutation keeps the length
        auto& e = out[rng.below(out.size())];
        e = mutate(e, rng, opts);
      }
      return v.kind() == ValueKind::List ? Value::list(std::move(out)) : Value::tuple(std::move(out));
    }
  }
  return v;
}

// Applies one applicable rule chosen uniformly. Kinds without rules (None,
// raw expressions) are returned unchanged.
inline Value mutate(const Value& v, Rng& rng, const MutationOptions& opts) {
  const auto rules = applicable_rules(v);
  if (rules.empty()) return v;
  return apply_rule(rng.pick(rules), v, rng, opts);
}

// Mutates one mutable argument of `rec`, chosen uniformly.
inline InvocationRecord mutate_invocation(const InvocationRecord& rec, Rng& rng,
                                          const MutationOptions& opts = {}) {
  InvocationRecord out = rec;
  std::vector<Value*> slots;
  for (auto& v : out.positional)
    if (!applicable_rules(v).empty()) slots.push_back(&v);
  for (auto& [k, v] : out.keyword)
    if (!applicable_rules(v).empty()) slots.push_back(&v);
  if (slots.empty()) return out;
  Value* target = slots[rng.below(slots.size())];
  *target = mutate(*target, rng, opts);
  return out;
}

enum class Oracle { Value, Status };

inline const char* oracle_name(Oracle o) { return o == Oracle::Value ? "value" : "status"; }

struct SideOutcome {
  Status status = Status::Success;
  std::optional<std::string> exception_class;
  std::optional<ValueSummary> summary;
  std::optional<std::string> detail;

  friend bool operator==(const SideOutcome&, const SideOutcome&) = default;
};

struct Inconsistency {
  std::string source;
  std::string target;
  std::string plan_id;
  Oracle oracle = Oracle::Status;
  InvocationRecord input;
  SideOutcome outcome_s;
  SideOutcome outcome_t;
  std::string dedup_key;

  friend bool operator==(const Inconsistency&, const Inconsistency&) = default;
};

// A crash observed while fuzzing, reported whatever the other side did.
struct CrashReport {
  std::string api;
  std::string plan_id;
  std::string side;
  std::string detail;
  InvocationRecord input;

  friend bool operator==(const CrashReport&, const CrashReport&) = default;
};

inline json to_json(const SideOutcome& o) {
  json j = {{"status", status_name(o.status)}};
  if (o.exception_class) j["exception_class"] = *o.exception_class;
  if (o.summary) j["value_summary"] = to_json(*o.summary);
  if (o.detail) j["detail"] = *o.detail;
  return j;
}

// Mutants have no origin, so the input is written without one.
inline json mutant_json(const InvocationRecord& r) {
  json j = to_json(r);
  j.erase("origin");
  return j;
}

inline json to_json(const Inconsistency& i) {
  return {{"source", i.source}, {"target", i.target}, {"plan", i.plan_id},
          {"oracle", oracle_name(i.oracle)}, {"input", mutant_json(i.input)},
          {"outcome_s", to_json(i.outcome_s)}, {"outcome_t", to_json(i.outcome_t)},
          {"dedup_key", i.dedup_key}};
}

inline json to_json(const CrashReport& c) {
  return {{"api", c.api}, {"plan", c.plan_id}, {"side", c.side}, {"detail", c.detail},
          {"input", mutant_json(c.input)}};
}

// (pair, oracle, status signature, exception classes).
inline std::string dedup_key(const std::string& plan_id, Oracle oracle, const PairedResponse& r) {
  return plan_id + "|" + oracle_name(oracle) + "|" + status_name(r.status_s) + "/" +
         status_name(r.status_t) + "|" + r.exception_class_s.value_or("-") + "/" +
         r.exception_class_t.value_or("-");
}

// Keeps the first report per dedup key.
class InconsistencySet {
 public:
  bool add(Inconsistency inc) {
    if (!keys_.insert(inc.dedup_key).second) return false;
    items_.push_back(std::move(inc));
    return true;
  }
  const std::vector<Inconsistency>& items() const { return items_; }

 private:
  std::set<std::string> keys_;
  std::vector<Inconsistency> items_;
};

struct FuzzOptions {
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  Tolerance tolerance;
  int timeout_ms = 5000;
  MutationOptions mutation;
};

struct FuzzResult {
  std::vector<Inconsistency> inconsistencies;
  std::vector<CrashReport> crashes;
};

// Generates `count` mutants cycling over `seeds` and checks them against the
// oracle the verdict allows: value and status for ValueEquivalent pairs,
// status only for StatusEquivalent pairs. The RNG stream depends only on
// (seed, plan id).
inline FuzzResult fuzz_pair(const InvocationPlan& plan, Verdict verdict, const ApiEntry& source,
                            const ApiEntry& target, const std::vector<InvocationRecord>& seeds,
                            ExecutorClient& exec, const FuzzOptions& opts) {
  if (verdict == Verdict::Rejected) throw std::invalid_argument("cannot fuzz a rejected pair");
  FuzzResult out;
  if (seeds.empty() || opts.count == 0) return out;
  const std::string pid = plan.id();
  Rng rng = Rng::derive(opts.seed, pid);
  InconsistencySet found;
  std::set<std::string> crash_keys;

  for (std::size_t i = 0; i < opts.count; ++i) {
    InvocationRecord input = mutate_invocation(seeds[i % seeds.size()], rng, opts.mutation);
    input.origin = {};
    const auto resp =
        exec.call_paired(make_request(plan, source, target, input, opts.tolerance, opts.timeout_ms));

    auto side = [](Status s, const std::optional<std::string>& exc, const std::optional<ValueSummary>& sum,
                   const std::optional<std::string>& detail) { return SideOutcome{s, exc, sum, detail}; };
    std::optional<Oracle> violated;
    if (resp.status_s != resp.status_t) violated = Oracle::Status;
    else if (verdict == Verdict::ValueEquivalent && resp.value_equal == false) violated = Oracle::Value;
    if (violated) {
      Inconsistency inc{source.qualified_name, target.qualified_name, pid, *violated, input,
                        side(resp.status_s, resp.exception_class_s, resp.value_summary_s, resp.detail_s),
                        side(resp.status_t, resp.exception_class_t, resp.value_summary_t, resp.detail_t),
                        dedup_key(pid, *violated, resp)};
      found.add(std::move(inc));
    }
    auto note_crash = [&](const std::string& api, const char* which, Status s,
                          const std::optional<std::string>& detail) {
      if (s != Status::Crash) return;
      const std::string d = detail.value_or("crash");
      if (d.starts_with("not-executed")) return;
      if (crash_keys.insert(api + "|" + d).second)
        out.crashes.push_back(CrashReport{api, pid, which, d, input});
    };
    note_crash(source.qualified_name, "source", resp.status_s, resp.detail_s);
    note_crash(target.qualified_name, "target", resp.status_t, resp.detail_t);
  }
  out.inconsistencies = found.items();
  return out;
}

}  // namespace relfuzz
