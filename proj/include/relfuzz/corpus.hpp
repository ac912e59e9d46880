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

// API corpus and invocation database.
//
// The corpus file is a single JSON document:
//
//   {"apis": [{"name", "args": [{"name", "position", "optional", "default",
//              "observed_types"}], "description", "code_blocks",
//              "nondeterministic"?}],
//    "invocations": [{"api", "positional", "keyword", "origin"}]}
//
// Method-style APIs (e.g. "mini.Tensor.kth_value") take their receiver as
// positional argument 0.

#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "relfuzz/value.hpp"

namespace relfuzz {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct ArgSpec {
  std::string name;
  std::size_t position = 0;
  bool optional = false;
  std::optional<Value> default_value;
  std::set<std::string> observed_types;

  friend bool operator==(const ArgSpec&, const ArgSpec&) = default;
};

struct ApiEntry {
  std::string qualified_name;
  std::vector<ArgSpec> args;
  std::string description;
  std::vector<std::string> code_blocks;
  // Random ops: verification never compares their values.
  bool nondeterministic = false;

  const ArgSpec* find_arg(std::string_view name) const {
    for (const auto& a : args) {
      if (a.name == name) return &a;
    }
    return nullptr;
  }
  std::size_t required_count() const {
    return static_cast<std::size_t>(std::count_if(
        args.begin(), args.end(), [](const ArgSpec& a) { return !a.optional; }));
  }

  friend bool operator==(const ApiEntry&, const ApiEntry&) = default;
};

// Where a record came from: iteration 0 is the seed database, n > 0 means it
// was synthesized during iteration n.
struct Origin {
  int iteration = 0;

  bool is_seed() const { return iteration == 0; }
  std::string to_string() const {
    return is_seed() ? "seed" : "synthesized@" + std::to_string(iteration);
  }
  static Origin parse(std::string_view s) {
    if (s == "seed") return {};
    constexpr std::string_view prefix = "synthesized@";
    if (s.starts_with(prefix)) {
      try {
        int n = std::stoi(std::string(s.substr(prefix.size())));
        if (n > 0) return Origin{n};
      } catch (const std::exception&) {
      }
    }
    throw CorpusError("bad invocation origin '" + std::string(s) + "'");
  }

  friend bool operator==(const Origin&, const Origin&) = default;
};

struct InvocationRecord {
  std::string api;
  std::vector<Value> positional;
  std::map<std::string, Value> keyword;
  Origin origin;

  friend bool operator==(const InvocationRecord&, const InvocationRecord&) = default;
};

inline json to_json(const ArgSpec& a) {
  json j = {{"name", a.name},
            {"position", a.position},
            {"optional", a.optional},
            {"observed_types", a.observed_types}};
  j["default"] = a.default_value ? to_json(*a.default_value) : json(nullptr);
  return j;
}

inline json to_json(const ApiEntry& e) {
  json args = json::array();
  for (const auto& a : e.args) args.push_back(to_json(a));
  json j = {{"name", e.qualified_name},
            {"args", std::move(args)},
            {"description", e.description},
            {"code_blocks", e.code_blocks}};
  if (e.nondeterministic) j["nondeterministic"] = true;
  return j;
}

inline json to_json(const InvocationRecord& r) {
  json pos = json::array();
  for (const auto& v : r.positional) pos.push_back(to_json(v));
  json kw = json::object();
  for (const auto& [k, v] : r.keyword) kw[k] = to_json(v);
  return {{"api", r.api},
          {"positional", std::move(pos)},
          {"keyword", std::move(kw)},
          {"origin", r.origin.to_string()}};
}

inline InvocationRecord invocation_from_json(const json& j) {
  InvocationRecord r;
  r.api = j.at("api").get<std::string>();
  if (auto it = j.find("positional"); it != j.end()) {
    for (const auto& v : *it) r.positional.push_back(value_from_json(v));
  }
  if (auto it = j.find("keyword"); it != j.end()) {
    for (const auto& [k, v] : it->items()) r.keyword.emplace(k, value_from_json(v));
  }
  if (auto it = j.find("origin"); it != j.end()) r.origin = Origin::parse(it->get<std::string>());
  return r;
}

// Hash of the argument values only (origin excluded), hex encoded.
inline std::string input_hash(const InvocationRecord& r) {
  json j = to_json(r);
  j.erase("origin");
  return to_hex(fnv1a64(j.dump()));
}

// Resolves a record against its entry: one slot per declared argument,
// filled from positional values, keywords, then defaults. Returns nullopt
// for slots that remain unbound.
inline std::vector<std::optional<Value>> bind_arguments(const ApiEntry& entry,
                                                        const InvocationRecord& rec) {
  std::vector<std::optional<Value>> slots(entry.args.size());
  for (std::size_t i = 0; i < rec.positional.size() && i < slots.size(); ++i)
    slots[i] = rec.positional[i];
  for (const auto& [name, v] : rec.keyword) {
    if (const auto* a = entry.find_arg(name)) slots[a->position] = v;
  }
  for (const auto& a : entry.args) {
    if (!slots[a.position] && a.default_value) slots[a.position] = a.default_value;
  }
  return slots;
}

class CorpusDb {
 public:
  void add_api(ApiEntry entry) {
    validate_entry(entry);
    const std::string name = entry.qualified_name;
    if (!entries_.emplace(name, std::move(entry)).second)
      throw CorpusError("duplicate api '" + name + "'");
  }

  bool contains(std::string_view name) const {
    return entries_.find(std::string(name)) != entries_.end();
  }

  const ApiEntry& api(std::string_view name) const {
    auto it = entries_.find(std::string(name));
    if (it == entries_.end()) throw LookupError("unknown api '" + std::string(name) + "'");
    return it->second;
  }

  const std::map<std::string, ApiEntry>& entries() const { return entries_; }
  const std::set<std::string>& covered() const { return covered_; }
  bool is_covered(std::string_view name) const {
    return covered_.count(std::string(name)) != 0;
  }

  std::size_t invocation_count(std::string_view name) const {
    auto it = invocations_.find(std::string(name));
    return it == invocations_.end() ? 0 : it->second.size();
  }

  // First `cap` records of `name` in insertion order.
  std::vector<InvocationRecord> valid_invocations(std::string_view name,
                                                  std::size_t cap) const {
    api(name);
    std::vector<InvocationRecord> out;
    auto it = invocations_.find(std::string(name));
    if (it == invocations_.end()) return out;
    const auto n = std::min(cap, it->second.size());
    out.assign(it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }

  // Appends `rec`. Returns true iff its api had no records before, i.e. the
  // api is newly covered.
  bool record_new_invocation(InvocationRecord rec) {
    check_record(rec);
    auto& entry = entries_.at(rec.api);
    note_types(entry, rec);
    auto& list = invocations_[rec.api];
    list.push_back(std::move(rec));
    if (list.size() == 1) {
      covered_.insert(list.front().api);
      return true;
    }
    return false;
  }

  // Throws CorpusError if `rec` does not fit its api's signature.
  void check_record(const InvocationRecord& rec) const {
    const auto it = entries_.find(rec.api);
    if (it == entries_.end()) throw CorpusError("unknown api '" + rec.api + "'");
    const auto& entry = it->second;
    if (rec.positional.size() > entry.args.size())
      throw CorpusError("invocation of '" + rec.api + "' passes " +
                        std::to_string(rec.positional.size()) +
                        " positional arguments, signature has " +
                        std::to_string(entry.args.size()));
    std::vector<bool> bound(entry.args.size(), false);
    for (std::size_t i = 0; i < rec.positional.size(); ++i) bound[i] = true;
    for (const auto& [name, v] : rec.keyword) {
      const auto* a = entry.find_arg(name);
      if (!a) throw CorpusError("invocation of '" + rec.api + "' has unknown keyword '" + name + "'");
      if (bound[a->position])
        throw CorpusError("invocation of '" + rec.api + "' binds '" + name + "' twice");
      bound[a->position] = true;
    }
    for (const auto& a : entry.args) {
      if (!a.optional && !bound[a.position])
        throw CorpusError("invocation of '" + rec.api + "' misses required argument '" +
                          a.name + "'");
    }
  }

  json to_json() const {
    json apis = json::array();
    for (const auto& [name, e] : entries_) apis.push_back(relfuzz::to_json(e));
    json invs = json::array();
    for (const auto& [name, list] : invocations_) {
      for (const auto& r : list) invs.push_back(relfuzz::to_json(r));
    }
    return {{"apis", std::move(apis)}, {"invocations", std::move(invs)}};
  }

  friend bool operator==(const CorpusDb& a, const CorpusDb& b) {
    return a.entries_ == b.entries_ && a.invocations_ == b.invocations_ &&
           a.covered_ == b.covered_;
  }

 private:
  static void validate_entry(const ApiEntry& e) {
    if (e.qualified_name.empty()) throw CorpusError("api with empty name");
    std::set<std::string> names;
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      const auto& a = e.args[i];
      if (a.position != i)
        throw CorpusError("api '" + e.qualified_name + "': argument '" + a.name +
                          "' has position " + std::to_string(a.position) + ", expected " +
                          std::to_string(i));
      if (a.optional != a.default_value.has_value())
        throw CorpusError("api '" + e.qualified_name + "': argument '" + a.name +
                          (a.optional ? "' is optional but has no default"
                                      : "' is required but has a default"));
      if (!names.insert(a.name).second)
        throw CorpusError("api '" + e.qualified_name + "': duplicate argument '" + a.name + "'");
    }
  }

  static void note_types(ApiEntry& entry, const InvocationRecord& rec) {
    for (std::size_t i = 0; i < rec.positional.size(); ++i)
      entry.args[i].observed_types.insert(type_tag(rec.positional[i]));
    for (const auto& [name, v] : rec.keyword) {
      for (auto& a : entry.args) {
        if (a.name == name) a.observed_types.insert(type_tag(v));
      }
    }
  }

  std::map<std::string, ApiEntry> entries_;
  std::map<std::string, std::vector<InvocationRecord>> invocations_;
  std::set<std::string> covered_;
};

inline ArgSpec arg_from_json(const json& j) {
  ArgSpec a;
  a.name = j.at("name").get<std::string>();
  a.position = j.at("position").get<std::size_t>();
  a.optional = j.value("optional", false);
  if (auto it = j.find("default"); it != j.end() && !it->is_null())
    a.default_value = value_from_json(*it);
  if (auto it = j.find("observed_types"); it != j.end())
    a.observed_types = it->get<std::set<std::string>>();
  return a;
}

inline ApiEntry api_from_json(const json& j) {
  ApiEntry e;
  e.qualified_name = j.at("name").get<std::string>();
  for (const auto& a : j.at("args")) e.args.push_back(arg_from_json(a));
  e.description = j.value("description", "");
  if (auto it = j.find("code_blocks"); it != j.end())
    e.code_blocks = it->get<std::vector<std::string>>();
  e.nondeterministic = j.value("nondeterministic", false);
  return e;
}

inline CorpusDb corpus_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("apis") || !doc["apis"].is_array())
    throw CorpusError("corpus must be an object with an 'apis' array");
  CorpusDb db;
  for (std::size_t i = 0; i < doc["apis"].size(); ++i) {
    const auto& j = doc["apis"][i];
    const std::string label =
        j.is_object() && j.contains("name") && j["name"].is_string()
            ? "'" + j["name"].get<std::string>() + "'"
            : "#" + std::to_string(i);
    ApiEntry e;
    try {
      e = api_from_json(j);
    } catch (const json::exception& ex) {
      throw CorpusError("api " + label + ": " + ex.what());
    } catch (const ValueError& ex) {
      throw CorpusError("api " + label + ": " + ex.what());
    }
    db.add_api(std::move(e));
  }
  if (auto it = doc.find("invocations"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      InvocationRecord r;
      try {
        r = invocation_from_json((*it)[i]);
      } catch (const json::exception& ex) {
        throw CorpusError("invocation #" + std::to_string(i) + ": " + ex.what());
      } catch (const ValueError& ex) {
        throw CorpusError("invocation #" + std::to_string(i) + ": " + ex.what());
      }
      db.record_new_invocation(std::move(r));
    }
  }
  return db;
}

inline CorpusDb load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorpusError("corpus file '" + path + "' is not valid JSON: " + e.what());
  }
  return corpus_from_json(doc);
}

}  // namespace relfuzz
