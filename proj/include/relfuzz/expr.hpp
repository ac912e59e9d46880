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

// A small expression language for invocation templates, parsed from Python
// documentation snippets. Supported forms: names, #i placeholders, attribute
// access, calls with positional and keyword arguments, number/string/
// None/True/False literals, list and tuple displays. Anything else is a parse
// failure and the snippet is ignored.

#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace relfuzz {

struct Expr {
  enum class Kind { Name, Placeholder, Attribute, Call, Literal, List, Tuple };

  Kind kind = Kind::Literal;
  // Name: identifier. Attribute: attribute name. Literal: source text.
  std::string text;
  // Placeholder: 1-based source argument index.
  int index = 0;
  // Attribute: [base]. Call: [callee, args...]. List/Tuple: elements.
  std::vector<Expr> children;
  // Call keyword arguments in source order.
  std::vector<std::pair<std::string, Expr>> keywords;

  static Expr name(std::string n) { return Expr{Kind::Name, std::move(n), 0, {}, {}}; }
  static Expr placeholder(int i) { return Expr{Kind::Placeholder, {}, i, {}, {}}; }
  static Expr literal(std::string t) { return Expr{Kind::Literal, std::move(t), 0, {}, {}}; }

  friend bool operator==(const Expr&, const Expr&) = default;
};

inline std::string render(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Name:
    case Expr::Kind::Literal:
      return e.text;
    case Expr::Kind::Placeholder:
      return "#" + std::to_string(e.index);
    case Expr::Kind::Attribute:
      return render(e.children[0]) + "." + e.text;
    case Expr::Kind::Call: {
      std::string out = render(e.children[0]) + "(";
      bool first = true;
      for (std::size_t i = 1; i < e.children.size(); ++i) {
        out += (first ? "" : ", ") + render(e.children[i]);
        first = false;
      }
      for (const auto& [k, v] : e.keywords) {
        out += (first ? "" : ", ") + k + "=" + render(v);
        first = false;
      }
      return out + ")";
    }
    case Expr::Kind::List:
    case Expr::Kind::Tuple: {
      const bool list = e.kind == Expr::Kind::List;
      std::string out = list ? "[" : "(";
      for (std::size_t i = 0; i < e.children.size(); ++i)
        out += (i ? ", " : "") + render(e.children[i]);
      if (!list && e.children.size() == 1) out += ",";
      return out + (list ? "]" : ")");
    }
  }
  return {};
}

// "a.b.c" for a chain of attribute accesses rooted at a name, nullopt
// otherwise.
inline std::optional<std::string> dotted_name(const Expr& e) {
  if (e.kind == Expr::Kind::Name) return e.text;
  if (e.kind == Expr::Kind::Attribute) {
    auto base = dotted_name(e.children[0]);
    if (base) return *base + "." + e.text;
  }
  return std::nullopt;
}

template <typename Fn>
void visit_preorder(const Expr& e, Fn&& fn) {
  fn(e);
  for (const auto& c : e.children) visit_preorder(c, fn);
  for (const auto& kv : e.keywords) visit_preorder(kv.second, fn);
}

template <typename Fn>
void visit_preorder_mut(Expr& e, Fn&& fn) {
  fn(e);
  for (auto& c : e.children) visit_preorder_mut(c, fn);
  for (auto& kv : e.keywords) visit_preorder_mut(kv.second, fn);
}

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view src) : src_(src) {}

  std::optional<Expr> parse_all() {
    auto e = parse_expr();
    skip_ws();
    if (!e || pos_ != src_.size()) return std::nullopt;
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }
  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  std::optional<std::string> identifier() {
    skip_ws();
    if (pos_ >= src_.size() || !ident_start(src_[pos_])) return std::nullopt;
    const std::size_t start = pos_;
    while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  std::optional<std::string> number() {
    skip_ws();
    const std::size_t start = pos_;
    bool digits = false;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      digits |= src_[pos_] != '.';
      ++pos_;
    }
    if (digits && pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    if (!digits) {
      pos_ = start;
      return std::nullopt;
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::optional<std::string> string_literal() {
    skip_ws();
    if (pos_ >= src_.size() || (src_[pos_] != '\'' && src_[pos_] != '"')) return std::nullopt;
    const char quote = src_[pos_];
    const std::size_t start = pos_++;
    while (pos_ < src_.size() && src_[pos_] != quote) {
      if (src_[pos_] == '\\') ++pos_;
      ++pos_;
    }
    if (pos_ >= src_.size()) return std::nullopt;
    ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  // Comma-separated items up to `close`; returns nullopt on syntax error.
  // `trailing_comma` reports whether the list ended in a comma.
  std::optional<std::vector<Expr>> items(char close, bool* trailing_comma) {
    std::vector<Expr> out;
    *trailing_comma = false;
    if (eat(close)) return out;
    while (true) {
      auto e = parse_expr();
      if (!e) return std::nullopt;
      out.push_back(std::move(*e));
      if (eat(close)) return out;
      if (!eat(',')) return std::nullopt;
      if (eat(close)) {
        *trailing_comma = true;
        return out;
      }
    }
  }

  std::optional<Expr> primary() {
    skip_ws();
    if (pos_ >= src_.size()) return std::nullopt;
    const char c = src_[pos_];
    if (c == '-') {
      ++pos_;
      auto n = number();
      if (!n) return std::nullopt;
      return Expr::literal("-" + *n);
    }
    if (c == '#') {
      ++pos_;
      auto n = number();
      if (!n || n->find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
      return Expr::placeholder(std::stoi(*n));
    }
    if (auto s = string_literal()) return Expr::literal(*s);
    if (auto n = number()) return Expr::literal(*n);
    if (auto id = identifier()) {
      if (*id == "None" || *id == "True" || *id == "False") return Expr::literal(*id);
      return Expr::name(*id);
    }
    if (eat('[')) {
      bool trailing = false;
      auto elems = items(']', &trailing);
      if (!elems) return std::nullopt;
      Expr e{Expr::Kind::List, {}, 0, std::move(*elems), {}};
      return e;
    }
    if (eat('(')) {
      bool trailing = false;
      auto elems = items(')', &trailing);
      if (!elems) return std::nullopt;
      if (elems->size() == 1 && !trailing) return std::move(elems->front());
      Expr e{Expr::Kind::Tuple, {}, 0, std::move(*elems), {}};
      return e;
    }
    return std::nullopt;
  }

  std::optional<Expr> call_args(Expr callee) {
    Expr call{Expr::Kind::Call, {}, 0, {}, {}};
    call.children.push_back(std::move(callee));
    if (eat(')')) return call;
    while (true) {
      skip_ws();
      // keyword argument: identifier '=' (but not '==')
      const std::size_t save = pos_;
      auto id = identifier();
      if (id && eat('=') && !peek('=')) {
        auto v = parse_expr();
        if (!v) return std::nullopt;
        call.keywords.emplace_back(*id, std::move(*v));
      } else {
        pos_ = save;
        if (!call.keywords.empty()) return std::nullopt;  // positional after keyword
        auto v = parse_expr();
        if (!v) return std::nullopt;
        call.children.push_back(std::move(*v));
      }
      if (eat(')')) return call;
      if (!eat(',')) return std::nullopt;
      if (eat(')')) return call;
    }
  }

  std::optional<Expr> parse_expr() {
    auto e = primary();
    if (!e) return std::nullopt;
    while (true) {
      if (eat('.')) {
        auto attr = identifier();
        if (!attr) return std::nullopt;
        Expr a{Expr::Kind::Attribute, *attr, 0, {}, {}};
        a.children.push_back(std::move(*e));
        e = std::move(a);
      } else if (eat('(')) {
        e = call_args(std::move(*e));
        if (!e) return std::nullopt;
      } else {
        return e;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::optional<Expr> parse_expr(std::string_view src) {
  return detail::ExprParser(src).parse_all();
}

// Reduces a documentation code block to a single expression. Interactive
// prompts (">>> ", "... ") are stripped and output lines dropped, comments
// removed, and a single "name = expr" statement is reduced to its right-hand
// side. Blocks holding more than one statement yield nullopt.
inline std::optional<Expr> parse_code_block(std::string_view block) {
  std::vector<std::string> lines;
  bool prompted = false;
  {
    std::size_t start = 0;
    while (start <= block.size()) {
      std::size_t end = block.find('\n', start);
      if (end == std::string_view::npos) end = block.size();
      lines.emplace_back(block.substr(start, end - start));
      if (lines.back().find(">>>") != std::string::npos) prompted = true;
      start = end + 1;
    }
  }

  std::vector<std::string> statements;
  std::string current;
  int depth = 0;
  for (auto line : lines) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    line = line.substr(first);
    if (prompted) {
      if (line.starts_with(">>>") || line.starts_with("...")) {
        line = line.substr(3);
      } else if (depth == 0) {
        continue;  // printed output
      }
    }
    // strip comments outside string literals
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quote) {
        if (c == '\\') ++i;
        else if (c == quote) quote = 0;
      } else if (c == '\'' || c == '"') {
        quote = c;
      } else if (c == '#') {
        line.resize(i);
        break;
      } else if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if (c == ')' || c == ']' || c == '}') {
        --depth;
      }
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    current += (current.empty() ? "" : " ") + line;
    if (depth <= 0) {
      statements.push_back(std::move(current));
      current.clear();
      depth = 0;
    }
  }
  if (!current.empty()) return std::nullopt;
  if (statements.size() != 1) return std::nullopt;

  std::string_view stmt = statements.front();
  // single assignment "target = value"
  int d = 0;
  char quote = 0;
  for (std::size_t i = 0; i < stmt.size(); ++i) {
    const char c = stmt[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '(' || c == '[') ++d;
    else if (c == ')' || c == ']') --d;
    else if (c == '=' && d == 0) {
      const bool comparison = (i + 1 < stmt.size() && stmt[i + 1] == '=') ||
                              (i > 0 && std::string_view("=!<>").find(stmt[i - 1]) !=
                                            std::string_view::npos);
      if (comparison) return std::nullopt;
      auto lhs = parse_expr(stmt.substr(0, i));
      if (!lhs || lhs->kind != Expr::Kind::Name) return std::nullopt;
      return parse_expr(stmt.substr(i + 1));
    }
  }
  return parse_expr(stmt);
}

}  // namespace relfuzz
