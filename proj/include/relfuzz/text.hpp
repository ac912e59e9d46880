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

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace relfuzz {

// Hook for stemming or other token standardization. Identity by default.
using TokenNormalizer = std::function<std::string(std::string)>;

namespace detail {
inline bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
inline bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
}  // namespace detail

// Splits identifiers and free text into lowercase subwords.
//
// Any non-alphanumeric character separates tokens ('.', '_', '(', ',', ' ').
// Inside an alphanumeric run a new token starts at a lower->Upper transition
// ("AvgPool" -> avg, pool), before the last capital of an acronym followed by
// a lowercase letter ("HTTPServer" -> http, server) and at a letter->digit
// transition ("Pool3d" -> pool, 3d). A digit->letter transition does not
// split, so "3d" stays one token.
inline std::vector<std::string> tokenize_text(std::string_view text,
                                              const TokenNormalizer& normalize = {}) {
  using namespace detail;
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    std::string t;
    t.reserve(cur.size());
    for (char c : cur) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (normalize) t = normalize(std::move(t));
    if (!t.empty()) tokens.push_back(std::move(t));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      const char prev = cur.back();
      const char next = i + 1 < text.size() ? text[i + 1] : '\0';
      const bool camel = is_lower(prev) && is_upper(c);
      const bool acronym_end = is_upper(prev) && is_upper(c) && is_lower(next);
      const bool to_digit = is_alpha(prev) && is_digit(c);
      if (camel || acronym_end || to_digit) flush();
    }
    cur.push_back(c);
  }
  flush();
  return tokens;
}

// Edit distance with unit insert/delete/substitute costs, two-row DP.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace relfuzz
