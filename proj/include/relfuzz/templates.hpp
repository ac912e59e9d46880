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

#pragma once

#include <string>
#include <vector>

#include "relfuzz/corpus.hpp"
#include "relfuzz/expr.hpp"

namespace relfuzz {

// A documentation snippet of `owner` that expresses an invocation of another
// corpus API (`invoked`) in terms of the owner's arguments, which appear as
// placeholders #1..#n.
struct MatchingTemplate {
  std::string owner;
  std::string invoked;
  Expr expr;

  friend bool operator==(const MatchingTemplate&, const MatchingTemplate&) = default;
};

// Scans the code blocks of `entry`. A block becomes a template when it parses
// to a single expression that calls a corpus API other than the owner, uses
// at least one of the owner's arguments and has no other free variables.
// The invoked API is the first such call in pre-order.
inline std::vector<MatchingTemplate> extract_templates(const ApiEntry& entry,
                                                       const CorpusDb& corpus) {
  std::vector<MatchingTemplate> out;
  for (const auto& block : entry.code_blocks) {
    auto parsed = parse_code_block(block);
    if (!parsed) continue;
    Expr expr = std::move(*parsed);

    // Bare names are variables; the root of a dotted path is a module.
    bool unbound = false;
    bool uses_args = false;
    auto rewrite = [&](Expr& e, auto&& self, bool is_path_root) -> void {
      if (e.kind == Expr::Kind::Name) {
        if (const auto* a = entry.find_arg(e.text)) {
          e = Expr::placeholder(static_cast<int>(a->position) + 1);
          uses_args = true;
        } else if (!is_path_root) {
          unbound = true;
        }
        return;
      }
      if (e.kind == Expr::Kind::Attribute) {
        self(e.children[0], self, true);
        return;
      }
      for (auto& c : e.children) self(c, self, false);
      for (auto& kv : e.keywords) self(kv.second, self, false);
    };
    rewrite(expr, rewrite, false);
    if (unbound || !uses_args) continue;

    std::string invoked;
    visit_preorder(expr, [&](const Expr& e) {
      if (!invoked.empty() || e.kind != Expr::Kind::Call) return;
      const auto callee = dotted_name(e.children[0]);
      if (callee && *callee != entry.qualified_name && corpus.contains(*callee))
        invoked = *callee;
    });
    if (invoked.empty()) continue;
    out.push_back(MatchingTemplate{entry.qualified_name, invoked, std::move(expr)});
  }
  return out;
}

}  // namespace relfuzz
