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

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relfuzz/value.hpp"

namespace relfuzz {

// Execution status of one invocation. Crash covers process death, signals,
// internal assertion failures and timeouts.
enum class Status { Success, Exception, Crash };

inline const char* status_name(Status s) {
  switch (s) {
    case Status::Success: return "Success";
    case Status::Exception: return "Exception";
    case Status::Crash: return "Crash";
  }
  return "?";
}

inline Status status_from_name(const std::string& s) {
  if (s == "Success") return Status::Success;
  if (s == "Exception") return Status::Exception;
  if (s == "Crash") return Status::Crash;
  throw ValueError("unknown status '" + s + "'");
}

struct Tolerance {
  double rtol = 1e-3;
  double atol = 1e-6;

  friend bool operator==(const Tolerance&, const Tolerance&) = default;
};

// Compact description of an invocation result: shape, dtype, the first
// elements and a content hash. `numel` counts all elements; `values` may be
// truncated.
struct ValueSummary {
  std::string kind = "tensor";
  std::vector<std::int64_t> shape;
  std::string dtype;
  std::int64_t numel = 0;
  std::vector<double> values;
  std::string hash;

  friend bool operator==(const ValueSummary& a, const ValueSummary& b) {
    if (a.kind != b.kind || a.shape != b.shape || a.dtype != b.dtype || a.numel != b.numel ||
        a.hash != b.hash || a.values.size() != b.values.size())
      return false;
    for (std::size_t i = 0; i < a.values.size(); ++i)
      if (!detail::same_bits(a.values[i], b.values[i])) return false;
    return true;
  }
};

inline bool is_float_dtype(const std::string& dtype) {
  return dtype.starts_with("float") || dtype.starts_with("bfloat") ||
         dtype.starts_with("complex") || dtype == "half" || dtype == "double";
}

inline json to_json(const ValueSummary& s) {
  json vals = json::array();
  for (double d : s.values) vals.push_back(detail::encode_double(d));
  return {{"kind", s.kind}, {"shape", s.shape}, {"dtype", s.dtype},
          {"numel", s.numel}, {"values", std::move(vals)}, {"hash", s.hash}};
}

inline ValueSummary summary_from_json(const json& j) {
  ValueSummary s;
  s.kind = j.value("kind", "tensor");
  s.shape = j.value("shape", std::vector<std::int64_t>{});
  s.dtype = j.value("dtype", "");
  s.numel = j.value("numel", std::int64_t{0});
  if (auto it = j.find("values"); it != j.end())
    for (const auto& v : *it) s.values.push_back(detail::decode_double(v));
  s.hash = j.value("hash", "");
  return s;
}

// Result equality for two Success invocations. Kind, shape and dtype must
// match exactly. Float dtypes compare the transmitted elements with
// |x - y| <= atol + rtol * |y| (NaN equals NaN); other dtypes require equal
// elements and equal content hash.
inline bool compare_values(const ValueSummary& a, const ValueSummary& b, const Tolerance& tol) {
  if (a.kind != b.kind || a.shape != b.shape || a.dtype != b.dtype || a.numel != b.numel ||
      a.values.size() != b.values.size())
    return false;
  if (!is_float_dtype(a.dtype)) {
    for (std::size_t i = 0; i < a.values.size(); ++i)
      if (a.values[i] != b.values[i]) return false;
    return a.hash == b.hash;
  }
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double x = a.values[i];
    const double y = b.values[i];
    if (std::isnan(x) || std::isnan(y)) {
      if (std::isnan(x) != std::isnan(y)) return false;
      continue;
    }
    if (std::isinf(x) || std::isinf(y)) {
      if (x != y) return false;
      continue;
    }
    if (std::abs(x - y) > tol.atol + tol.rtol * std::abs(y)) return false;
  }
  return true;
}

}  // namespace relfuzz
