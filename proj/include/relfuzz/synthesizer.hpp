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

// Invocation synthesis: how to call a target API with the argument values of
// a traced source API invocation.
//
// Argument matching scores every (source arg a, target arg b) edge with
//
//   Sim_arg(a, b) = Sim_name + Sim_type + Sim_pos
//   Sim_name      = 1 - Levenshtein(a.name, b.name) / max(|a.name|, |b.name|)
//   Sim_type      = |a.types & b.types| / |a.types|
//   Sim_pos       = 1 - |a.idx - b.idx| / max(|S.args|, |T.args|)
//
// and keeps the maximum-weight bipartite matching. Unmatched optional
// arguments fall back to defaults; an unmatched required argument on either
// side aborts synthesis for the pair.

#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relfuzz/corpus.hpp"
#include "relfuzz/expr.hpp"
#include "relfuzz/hungarian.hpp"
#include "relfuzz/templates.hpp"
#include "relfuzz/text.hpp"

namespace relfuzz {

inline double name_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

inline double name_similarity(const ArgSpec& a, const ArgSpec& b) {
  return name_similarity(a.name, b.name);
}

// Not symmetric: the fraction of a's possible types that b also accepts.
inline double type_similarity(const ArgSpec& a, const ArgSpec& b) {
  if (a.observed_types.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a.observed_types) common += b.observed_types.count(t);
  return static_cast<double>(common) / static_cast<double>(a.observed_types.size());
}

inline double pos_similarity(const ArgSpec& a, const ArgSpec& b, std::size_t len_s, std::size_t len_t) {
  const std::size_t longest = std::max(len_s, len_t);
  if (longest == 0) return 1.0;
  const auto gap = a.position > b.position ? a.position - b.position : b.position - a.position;
  return 1.0 - static_cast<double>(gap) / static_cast<double>(longest);
}

inline double arg_similarity(const ArgSpec& a, const ArgSpec& b, std::size_t len_s, std::size_t len_t) {
  return name_similarity(a, b) + type_similarity(a, b) + pos_similarity(a, b, len_s, len_t);
}

enum class PlanKind { ArgMatch, Template };

inline const char* plan_kind_name(PlanKind k) {
  return k == PlanKind::ArgMatch ? "arg-match" : "template";
}

struct InvocationPlan {
  std::string source;
  std::string target;
  PlanKind kind = PlanKind::ArgMatch;
  // target argument position -> source argument position
  std::map<std::size_t, std::size_t> slot_map;
  // unmatched optional target arguments, by name
  std::map<std::string, Value> default_fills;
  std::optional<Expr> template_expr;

  // Stable identifier used for RNG streams and deduplication.
  std::string id() const {
    std::string s = source + "->" + target + "#" + plan_kind_name(kind);
    if (template_expr) s += ":" + render(*template_expr);
    return s;
  }

  friend bool operator==(const InvocationPlan&, const InvocationPlan&) = default;
};

// "api(#1, #2, ...)" over every argument of the source.
inline std::string render_source_call(const ApiEntry& source) {
  std::string out = source.qualified_name + "(";
  for (std::size_t i = 0; i < source.args.size(); ++i)
    out += (i ? ", #" : "#") + std::to_string(i + 1);
  return out + ")";
}

// Target invocation with #i placeholders. Mapped arguments are positional
// while they form a prefix of the target signature, keywords afterwards;
// default fills are always keywords.
inline std::string render_target_call(const InvocationPlan& plan, const ApiEntry& target) {
  if (plan.kind == PlanKind::Template && plan.template_expr) return render(*plan.template_expr);
  std::string out = target.qualified_name + "(";
  bool first = true;
  auto sep = [&] {
    std::string s = first ? "" : ", ";
    first = false;
    return s;
  };
  bool positional = true;
  for (const auto& arg : target.args) {
    auto it = plan.slot_map.find(arg.position);
    if (it != plan.slot_map.end()) {
      out += sep() + (positional ? "" : arg.name + "=") + "#" + std::to_string(it->second + 1);
    } else {
      positional = false;
      auto fill = plan.default_fills.find(arg.name);
      if (fill != plan.default_fills.end()) out += sep() + arg.name + "=" + render(fill->second);
    }
  }
  return out + ")";
}

inline json to_json(const InvocationPlan& plan, const ApiEntry& source, const ApiEntry& target) {
  json slots = json::object();
  for (const auto& [t, s] : plan.slot_map) slots[std::to_string(t)] = s;
  json fills = json::object();
  for (const auto& [name, v] : plan.default_fills) fills[name] = to_json(v);
  json j = {{"source", plan.source},
            {"target", plan.target},
            {"kind", plan_kind_name(plan.kind)},
            {"slot_map", std::move(slots)},
            {"default_fills", std::move(fills)},
            {"source_call", render_source_call(source)},
            {"target_call", render_target_call(plan, target)}};
  j["template_expr"] = plan.template_expr ? json(render(*plan.template_expr)) : json(nullptr);
  return j;
}

struct SynthesisResult {
  std::optional<InvocationPlan> plan;
  std::string abort_reason;

  explicit operator bool() const { return plan.has_value(); }
};

inline WeightMatrix arg_similarity_matrix(const ApiEntry& s, const ApiEntry& t) {
  WeightMatrix w(s.args.size(), t.args.size());
  for (const auto& a : s.args)
    for (const auto& b : t.args)
      w(a.position, b.position) = arg_similarity(a, b, s.args.size(), t.args.size());
  return w;
}

inline SynthesisResult synthesize_by_matching(const ApiEntry& s, const ApiEntry& t) {
  InvocationPlan plan;
  plan.source = s.qualified_name;
  plan.target = t.qualified_name;
  plan.kind = PlanKind::ArgMatch;

  const auto match = max_weight_match(arg_similarity_matrix(s, t));
  std::vector<bool> source_used(s.args.size(), false);
  for (const auto& [a, b] : match.pairs) {
    plan.slot_map.emplace(b, a);
    source_used[a] = true;
  }
  for (const auto& b : t.args) {
    if (plan.slot_map.count(b.position)) continue;
    if (!b.optional)
      return {std::nullopt, "required target argument '" + b.name + "' is unmatched"};
    plan.default_fills.emplace(b.name, *b.default_value);
  }
  for (const auto& a : s.args) {
    if (!source_used[a.position] && !a.optional)
      return {std::nullopt, "required source argument '" + a.name + "' is unmatched"};
  }
  return {std::move(plan), {}};
}

inline InvocationPlan plan_from_template(const MatchingTemplate& tpl) {
  InvocationPlan plan;
  plan.source = tpl.owner;
  plan.target = tpl.invoked;
  plan.kind = PlanKind::Template;
  plan.template_expr = tpl.expr;
  return plan;
}

// Concrete call of the target for one source invocation.
struct TargetCall {
  std::string api;
  std::vector<Value> positional;
  std::map<std::string, Value> keyword;
  // Template plans: expression text and values for #1..#n.
  std::optional<std::string> template_text;
  std::vector<Value> bindings;

  // The target invocation as a database record, when the plan passes source
  // values straight through (always for argument matching; for templates only
  // if the invoked call's arguments are all bare placeholders).
  std::optional<InvocationRecord> as_record() const {
    if (!template_text) return InvocationRecord{api, positional, keyword, {}};
    return direct_record;
  }

  std::optional<InvocationRecord> direct_record;
};

inline TargetCall instantiate(const InvocationPlan& plan, const ApiEntry& source, const ApiEntry& target,
                              const InvocationRecord& input) {
  const auto bound = bind_arguments(source, input);
  auto source_value = [&](std::size_t pos) { return bound[pos].value_or(Value::none()); };

  TargetCall call;
  call.api = target.qualified_name;
  if (plan.kind == PlanKind::Template && plan.template_expr) {
    call.template_text = render(*plan.template_expr);
    for (std::size_t i = 0; i < bound.size(); ++i) call.bindings.push_back(source_value(i));

    // Locate the invoked call and check whether it only forwards placeholders.
    const Expr* invoked = nullptr;
    visit_preorder(*plan.template_expr, [&](const Expr& e) {
      if (!invoked && e.kind == Expr::Kind::Call && dotted_name(e.children[0]) == target.qualified_name)
        invoked = &e;
    });
    if (invoked) {
      InvocationRecord rec{target.qualified_name, {}, {}, {}};
      bool direct = true;
      auto bind = [&](const Expr& e) -> std::optional<Value> {
        if (e.kind != Expr::Kind::Placeholder || e.index < 1 ||
            static_cast<std::size_t>(e.index) > call.bindings.size())
          return std::nullopt;
        return call.bindings[static_cast<std::size_t>(e.index - 1)];
      };
      for (std::size_t i = 1; i < invoked->children.size() && direct; ++i) {
        auto v = bind(invoked->children[i]);
        if (v) rec.positional.push_back(*v);
        else direct = false;
      }
      for (const auto& [k, e] : invoked->keywords) {
        auto v = bind(e);
        if (v) rec.keyword.emplace(k, *v);
        else direct = false;
      }
      if (direct) call.direct_record = std::move(rec);
    }
    return call;
  }

  bool positional = true;
  for (const auto& arg : target.args) {
    auto it = plan.slot_map.find(arg.position);
    if (it != plan.slot_map.end()) {
      if (positional) call.positional.push_back(source_value(it->second));
      else call.keyword.emplace(arg.name, source_value(it->second));
    } else {
      positional = false;
      auto fill = plan.default_fills.find(arg.name);
      if (fill != plan.default_fills.end()) call.keyword.emplace(arg.name, fill->second);
    }
  }
  return call;
}

}  // namespace relfuzz
