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

// Language-neutral argument values. These appear in traced invocations, are
// rewritten by the mutator and travel over the executor wire protocol.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "relfuzz/hash.hpp"

namespace relfuzz {

using json = nlohmann::json;

class ValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueKind { Tensor, Int, Float, Bool, Str, None, List, Tuple, Raw };

inline const char* kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Tensor: return "tensor";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Bool: return "bool";
    case ValueKind::Str: return "str";
    case ValueKind::None: return "none";
    case ValueKind::List: return "list";
    case ValueKind::Tuple: return "tuple";
    case ValueKind::Raw: return "raw";
  }
  return "?";
}

namespace detail {
inline bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}
}  // namespace detail

// Tensor description: shape, dtype and either inline elements or a seed that
// fully determines them on the executor side.
struct TensorSpec {
  std::vector<std::int64_t> shape;
  std::string dtype = "float32";
  std::variant<std::vector<double>, std::uint64_t> content = std::uint64_t{0};

  bool has_inline_values() const {
    return std::holds_alternative<std::vector<double>>(content);
  }
  const std::vector<double>& values() const {
    return std::get<std::vector<double>>(content);
  }

  // Product of the non-negative dims; negative dims are legal fuzz inputs.
  std::int64_t element_count() const {
    std::int64_t n = 1;
    for (auto d : shape) {
      if (d >= 0) n *= d;
    }
    return n;
  }

  bool has_negative_dim() const {
    for (auto d : shape) {
      if (d < 0) return true;
    }
    return false;
  }

  friend bool operator==(const TensorSpec& a, const TensorSpec& b) {
    if (a.shape != b.shape || a.dtype != b.dtype ||
        a.content.index() != b.content.index())
      return false;
    if (!a.has_inline_values())
      return std::get<std::uint64_t>(a.content) ==
             std::get<std::uint64_t>(b.content);
    const auto& x = a.values();
    const auto& y = b.values();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!detail::same_bits(x[i], y[i])) return false;
    }
    return true;
  }
};

struct NoneVal {
  friend bool operator==(const NoneVal&, const NoneVal&) { return true; }
};

struct RawExpr {
  std::string text;
  friend bool operator==(const RawExpr&, const RawExpr&) = default;
};

struct Value;

struct ListOf {
  std::vector<Value> items;
  friend bool operator==(const ListOf& a, const ListOf& b);
};

struct TupleOf {
  std::vector<Value> items;
  friend bool operator==(const TupleOf& a, const TupleOf& b);
};

struct Value {
  using Storage = std::variant<TensorSpec, std::int64_t, double, bool,
                               std::string, NoneVal, ListOf, TupleOf, RawExpr>;
  Storage data = NoneVal{};

  Value() = default;

  static Value tensor(TensorSpec t) { return Value(Storage(std::move(t))); }
  static Value integer(std::int64_t v) { return Value(Storage(v)); }
  static Value real(double v) { return Value(Storage(v)); }
  static Value boolean(bool v) { return Value(Storage(v)); }
  static Value str(std::string v) { return Value(Storage(std::move(v))); }
  static Value none() { return Value(); }
  static Value list(std::vector<Value> items) {
    return Value(Storage(ListOf{std::move(items)}));
  }
  static Value tuple(std::vector<Value> items) {
    return Value(Storage(TupleOf{std::move(items)}));
  }
  static Value raw(std::string text) {
    return Value(Storage(RawExpr{std::move(text)}));
  }

  ValueKind kind() const { return static_cast<ValueKind>(data.index()); }

  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(data);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(data);
  }
  template <typename T>
  T& as() {
    return std::get<T>(data);
  }

  // Element list for list/tuple values, nullptr otherwise.
  const std::vector<Value>* items() const {
    if (auto* l = std::get_if<ListOf>(&data)) return &l->items;
    if (auto* t = std::get_if<TupleOf>(&data)) return &t->items;
    return nullptr;
  }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.data.index() != b.data.index()) return false;
    if (a.is<double>()) return detail::same_bits(a.as<double>(), b.as<double>());
    return a.data == b.data;
  }

 private:
  explicit Value(Storage s) : data(std::move(s)) {}
};

inline bool operator==(const ListOf& a, const ListOf& b) { return a.items == b.items; }
inline bool operator==(const TupleOf& a, const TupleOf& b) { return a.items == b.items; }

// Type tag used for argument type sets ("Tensor", "int", ...).
inline std::string type_tag(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Tensor: return "Tensor";
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Bool: return "bool";
    case ValueKind::Str: return "str";
    case ValueKind::None: return "None";
    case ValueKind::List: return "list";
    case ValueKind::Tuple: return "tuple";
    case ValueKind::Raw: return "expr";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// JSON encoding: {"kind": "...", ...}. Non-finite doubles are written as the
// strings "nan", "inf" and "-inf" since JSON has no literal for them.

namespace detail {

inline json encode_double(double d) {
  if (std::isnan(d)) return std::signbit(d) ? "-nan" : "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  return d;
}

inline double decode_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "-nan") return -std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ValueError("expected a number, got " + j.dump());
}

inline const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ValueError(std::string("value is missing '") + key + "': " + j.dump());
  return *it;
}

}  // namespace detail

inline json to_json(const Value& v) {
  json j;
  j["kind"] = kind_name(v.kind());
  switch (v.kind()) {
    case ValueKind::Tensor: {
      const auto& t = v.as<TensorSpec>();
      j["shape"] = t.shape;
      j["dtype"] = t.dtype;
      if (t.has_inline_values()) {
        json vals = json::array();
        for (double d : t.values()) vals.push_back(detail::encode_double(d));
        j["values"] = std::move(vals);
      } else {
        j["seed"] = std::get<std::uint64_t>(t.content);
      }
      break;
    }
    case ValueKind::Int: j["value"] = v.as<std::int64_t>(); break;
    case ValueKind::Float: j["value"] = detail::encode_double(v.as<double>()); break;
    case ValueKind::Bool: j["value"] = v.as<bool>(); break;
    case ValueKind::Str: j["value"] = v.as<std::string>(); break;
    case ValueKind::None: break;
    case ValueKind::List:
    case ValueKind::Tuple: {
      json items = json::array();
      for (const auto& item : *v.items()) items.push_back(to_json(item));
      j["items"] = std::move(items);
      break;
    }
    case ValueKind::Raw: j["text"] = v.as<RawExpr>().text; break;
  }
  return j;
}

inline Value value_from_json(const json& j) {
  if (!j.is_object()) throw ValueError("value must be an object: " + j.dump());
  const auto& kind_j = detail::require(j, "kind");
  if (!kind_j.is_string()) throw ValueError("value kind must be a string");
  const auto& kind = kind_j.get_ref<const std::string&>();
  try {
    if (kind == "tensor") {
      TensorSpec t;
      t.shape = detail::require(j, "shape").get<std::vector<std::int64_t>>();
      t.dtype = detail::require(j, "dtype").get<std::string>();
      if (auto it = j.find("values"); it != j.end()) {
        std::vector<double> vals;
        for (const auto& e : *it) vals.push_back(detail::decode_double(e));
        if (t.has_negative_dim() ||
            static_cast<std::int64_t>(vals.size()) != t.element_count())
          throw ValueError("inline tensor content does not match shape: " +
                           j.dump());
        t.content = std::move(vals);
      } else {
        t.content = detail::require(j, "seed").get<std::uint64_t>();
      }
      return Value::tensor(std::move(t));
    }
    if (kind == "int") {
      const auto& v = detail::require(j, "value");
      if (!v.is_number_integer() ||
          (v.is_number_unsigned() &&
           v.get<std::uint64_t>() >
               static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())))
        throw ValueError("int value out of range: " + v.dump());
      return Value::integer(v.get<std::int64_t>());
    }
    if (kind == "float") return Value::real(detail::decode_double(detail::require(j, "value")));
    if (kind == "bool") return Value::boolean(detail::require(j, "value").get<bool>());
    if (kind == "str") return Value::str(detail::require(j, "value").get<std::string>());
    if (kind == "none") return Value::none();
    if (kind == "list" || kind == "tuple") {
      std::vector<Value> items;
      for (const auto& e : detail::require(j, "items")) items.push_back(value_from_json(e));
      return kind == "list" ? Value::list(std::move(items))
                            : Value::tuple(std::move(items));
    }
    if (kind == "raw") return Value::raw(detail::require(j, "text").get<std::string>());
  } catch (const json::exception& e) {
    throw ValueError(std::string("malformed ") + kind + " value: " + e.what());
  }
  throw ValueError("unknown value kind '" + kind + "'");
}

// Deterministic text form: nlohmann objects keep keys sorted.
inline std::string canonical(const Value& v) { return to_json(v).dump(); }

// Python-flavoured rendering for plans and reports.
inline std::string render(const Value& v) {
  std::ostringstream os;
  switch (v.kind()) {
    case ValueKind::Tensor: {
      const auto& t = v.as<TensorSpec>();
      os << "<tensor [";
      for (std::size_t i = 0; i < t.shape.size(); ++i) os << (i ? ", " : "") << t.shape[i];
      os << "] " << t.dtype << ">";
      break;
    }
    case ValueKind::Int: os << v.as<std::int64_t>(); break;
    case ValueKind::Float: os << detail::encode_double(v.as<double>()).dump(); break;
    case ValueKind::Bool: os << (v.as<bool>() ? "True" : "False"); break;
    case ValueKind::Str: os << "'" << v.as<std::string>() << "'"; break;
    case ValueKind::None: os << "None"; break;
    case ValueKind::List:
    case ValueKind::Tuple: {
      const bool list = v.kind() == ValueKind::List;
      const auto& items = *v.items();
      os << (list ? "[" : "(");
      for (std::size_t i = 0; i < items.size(); ++i) os << (i ? ", " : "") << render(items[i]);
      if (!list && items.size() == 1) os << ",";
      os << (list ? "]" : ")");
      break;
    }
    case ValueKind::Raw: os << v.as<RawExpr>().text; break;
  }
  return os.str();
}

}  // namespace relfuzz
