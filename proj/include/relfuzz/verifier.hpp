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

// Pair verification over the verifying inputs D (traced valid invocations of
// the source API):
//
//   value-equivalent   S(x) = T(x)                 for every x in D
//   status-equivalent  status(S(x)) = status(T(x)) for every x in D
//
// Value equivalence implies status equivalence. A pair that satisfies
// neither is rejected.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relfuzz/corpus.hpp"
#include "relfuzz/protocol.hpp"
#include "relfuzz/synthesizer.hpp"

namespace relfuzz {

enum class Verdict { ValueEquivalent, StatusEquivalent, Rejected };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::ValueEquivalent: return "ValueEquivalent";
    case Verdict::StatusEquivalent: return "StatusEquivalent";
    case Verdict::Rejected: return "Rejected";
  }
  return "?";
}

// Paired outcome on one verifying input.
struct Evidence {
  std::size_t input_index = 0;
  Status status_s = Status::Success;
  Status status_t = Status::Success;
  // Present iff both sides succeeded.
  std::optional<bool> value_equal;
  std::optional<std::string> exception_class_s;
  std::optional<std::string> exception_class_t;
  std::optional<std::string> detail_s;
  std::optional<std::string> detail_t;

  // A source crash leaves the target unexecuted. Its status was never
  // observed, so the input cannot support an equivalence claim.
  bool target_executed() const { return !(detail_t && detail_t->starts_with("not-executed")); }
  bool status_match() const { return status_s == status_t && target_executed(); }
  bool value_match() const { return status_match() && value_equal.value_or(true); }

  static Evidence from(std::size_t index, const PairedResponse& r) {
    return {index, r.status_s, r.status_t, r.value_equal, r.exception_class_s,
            r.exception_class_t, r.detail_s, r.detail_t};
  }

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

inline json to_json(const Evidence& e) {
  json j = {{"input", e.input_index}, {"status_s", status_name(e.status_s)},
            {"status_t", status_name(e.status_t)}};
  if (e.value_equal) j["value_equal"] = *e.value_equal;
  if (e.exception_class_s) j["exception_class_s"] = *e.exception_class_s;
  if (e.exception_class_t) j["exception_class_t"] = *e.exception_class_t;
  if (e.detail_s) j["detail_s"] = *e.detail_s;
  if (e.detail_t) j["detail_t"] = *e.detail_t;
  return j;
}

// Status-only rule: statuses agree on every input.
inline bool status_equivalent(const std::vector<Evidence>& evidence) {
  for (const auto& e : evidence)
    if (!e.status_match()) return false;
  return true;
}

// Value rule first, status rule as fallback. With `compare_values` false
// (nondeterministic APIs) the best possible verdict is StatusEquivalent.
inline Verdict classify(const std::vector<Evidence>& evidence, bool compare_values = true) {
  if (!status_equivalent(evidence)) return Verdict::Rejected;
  if (!compare_values) return Verdict::StatusEquivalent;
  for (const auto& e : evidence)
    if (!e.value_match()) return Verdict::StatusEquivalent;
  return Verdict::ValueEquivalent;
}

struct PairVerdict {
  Verdict verdict = Verdict::Rejected;
  std::vector<Evidence> evidence;
  // Successful target invocations, for insertion into the database when the
  // target was not covered.
  std::vector<InvocationRecord> target_records;
};

struct VerifyOptions {
  Tolerance tolerance;
  int timeout_ms = 5000;
  bool compare_values = true;
  // Collect successful target invocations as database records.
  bool collect_target_records = false;
};

inline PairedRequest make_request(const InvocationPlan& plan, const ApiEntry& source, const ApiEntry& target,
                                  const InvocationRecord& input, const Tolerance& tol, int timeout_ms,
                                  TargetCall* call_out = nullptr) {
  TargetCall call = instantiate(plan, source, target, input);
  PairedRequest req;
  req.source = CallSpec::from(InvocationRecord{input.api, input.positional, input.keyword, {}});
  req.target = CallSpec::from(call);
  req.tolerance = tol;
  req.timeout_ms = timeout_ms;
  if (call_out) *call_out = std::move(call);
  return req;
}

// Runs `plan` on every input and classifies the pair. Executor failures
// other than crashes propagate as InfraError.
inline PairVerdict verify_pair(const InvocationPlan& plan, const ApiEntry& source, const ApiEntry& target,
                               const std::vector<InvocationRecord>& inputs, ExecutorClient& exec,
                               const VerifyOptions& opts = {}) {
  if (inputs.empty()) throw std::invalid_argument("verify_pair needs at least one input");
  PairVerdict out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    TargetCall call;
    auto req = make_request(plan, source, target, inputs[i], opts.tolerance, opts.timeout_ms, &call);
    const auto resp = exec.call_paired(std::move(req));
    out.evidence.push_back(Evidence::from(i, resp));
    if (opts.collect_target_records && resp.status_t == Status::Success) {
      if (auto rec = call.as_record()) out.target_records.push_back(std::move(*rec));
    }
  }
  out.verdict = classify(out.evidence, opts.compare_values);
  return out;
}

}  // namespace relfuzz
