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

// API matcher: similarity of every API pair from signatures and documents,
// and the candidate pairs handed to the synthesizer.
//
//   Sim_API(S, T) = max(Sim_sig(S, T), Sim_doc(S, T))
//
// Sim_sig is the cosine of TF-IDF signature embeddings where the weight of
// token j for API S is c_j(S) / sum over all APIs S' of c_j(S'). Sim_doc is
// the cosine of description embeddings from a pluggable embedder.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "relfuzz/corpus.hpp"
#include "relfuzz/templates.hpp"
#include "relfuzz/text.hpp"

namespace relfuzz {

// Sparse non-negative embedding, token index -> weight.
struct TfIdfVector {
  std::map<std::size_t, double> weights;

  bool empty() const { return weights.empty(); }
  double at(std::size_t token) const {
    auto it = weights.find(token);
    return it == weights.end() ? 0.0 : it->second;
  }
};

// Signature tokens: qualified name followed by every argument name.
inline std::vector<std::string> tokenize(const ApiEntry& entry,
                                         const TokenNormalizer& normalize = {}) {
  auto tokens = tokenize_text(entry.qualified_name, normalize);
  for (const auto& a : entry.args) {
    auto more = tokenize_text(a.name, normalize);
    tokens.insert(tokens.end(), more.begin(), more.end());
  }
  return tokens;
}

// Vocabulary indices follow lexicographic token order.
inline std::map<std::string, TfIdfVector> tfidf_embed(
    const std::map<std::string, std::vector<std::string>>& all_tokens) {
  std::map<std::string, std::size_t> vocab;
  for (const auto& [name, tokens] : all_tokens)
    for (const auto& t : tokens) vocab.emplace(t, 0);
  std::size_t next = 0;
  for (auto& [t, idx] : vocab) idx = next++;

  std::vector<double> totals(vocab.size(), 0.0);
  std::map<std::string, std::map<std::size_t, double>> counts;
  for (const auto& [name, tokens] : all_tokens) {
    auto& c = counts[name];
    for (const auto& t : tokens) {
      const auto idx = vocab.at(t);
      c[idx] += 1.0;
      totals[idx] += 1.0;
    }
  }
  std::map<std::string, TfIdfVector> out;
  for (auto& [name, c] : counts) {
    TfIdfVector v;
    for (const auto& [idx, n] : c) v.weights.emplace(idx, n / totals[idx]);
    out.emplace(name, std::move(v));
  }
  return out;
}

// x.y / (|x| |y|), 0 when either vector has zero norm.
inline double cosine(const TfIdfVector& x, const TfIdfVector& y) {
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (const auto& [i, w] : x.weights) {
    nx += w * w;
    dot += w * y.at(i);
  }
  for (const auto& [i, w] : y.weights) ny += w * w;
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

inline double cosine(std::span<const double> x, std::span<const double> y) {
  double dot = 0.0, nx = 0.0, ny = 0.0;
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) dot += x[i] * y[i];
  for (double v : x) nx += v * v;
  for (double v : y) ny += v * v;
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nx) * std::sqrt(ny)), -1.0, 1.0);
}

class DocumentEmbedder {
 public:
  virtual ~DocumentEmbedder() = default;
  virtual double similarity(const ApiEntry& s, const ApiEntry& t) const = 0;
};

// Default: TF-IDF over description words, same weighting as signatures.
class TfIdfDescriptionEmbedder final : public DocumentEmbedder {
 public:
  explicit TfIdfDescriptionEmbedder(const CorpusDb& db, const TokenNormalizer& normalize = {}) {
    std::map<std::string, std::vector<std::string>> tokens;
    for (const auto& [name, e] : db.entries()) tokens[name] = tokenize_text(e.description, normalize);
    vectors_ = tfidf_embed(tokens);
  }

  double similarity(const ApiEntry& s, const ApiEntry& t) const override {
    auto a = vectors_.find(s.qualified_name);
    auto b = vectors_.find(t.qualified_name);
    if (a == vectors_.end() || b == vectors_.end()) return 0.0;
    return cosine(a->second, b->second);
  }

 private:
  std::map<std::string, TfIdfVector> vectors_;
};

// Vectors supplied by an external sentence encoder, JSON {"api": [f, ...]}.
class PrecomputedEmbedder final : public DocumentEmbedder {
 public:
  explicit PrecomputedEmbedder(std::map<std::string, std::vector<double>> vectors)
      : vectors_(std::move(vectors)) {
    std::optional<std::size_t> dim;
    for (const auto& [name, v] : vectors_) {
      if (dim && *dim != v.size())
        throw CorpusError("embedding for '" + name + "' has length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(*dim));
      dim = v.size();
    }
  }

  static std::shared_ptr<PrecomputedEmbedder> load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open embeddings file '" + path + "'");
    try {
      return std::make_shared<PrecomputedEmbedder>(
          json::parse(in).get<std::map<std::string, std::vector<double>>>());
    } catch (const json::exception& e) {
      throw CorpusError("embeddings file '" + path + "': " + e.what());
    }
  }

  // Missing vectors score 0; each missing API is reported once on stderr.
  double similarity(const ApiEntry& s, const ApiEntry& t) const override {
    const auto* a = find(s.qualified_name);
    const auto* b = find(t.qualified_name);
    if (!a || !b) return 0.0;
    return cosine(*a, *b);
  }

 private:
  const std::vector<double>* find(const std::string& name) const {
    auto it = vectors_.find(name);
    if (it != vectors_.end()) return &it->second;
    std::lock_guard<std::mutex> lock(warn_mutex_);
    if (warned_.insert(name).second)
      std::cerr << "warning: no precomputed embedding for '" << name << "', document similarity is 0\n";
    return nullptr;
  }

  std::map<std::string, std::vector<double>> vectors_;
  mutable std::mutex warn_mutex_;
  mutable std::set<std::string> warned_;
};

inline double doc_similarity(const ApiEntry& s, const ApiEntry& t, const DocumentEmbedder& embedder) {
  return embedder.similarity(s, t);
}

enum class Channel { Signature, Document, Template };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Signature: return "signature";
    case Channel::Document: return "document";
    case Channel::Template: return "template";
  }
  return "?";
}

struct CandidatePair {
  std::string source;
  std::string target;
  double score = 0.0;
  Channel channel = Channel::Signature;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

inline json to_json(const CandidatePair& p) {
  return {{"source", p.source}, {"target", p.target}, {"score", p.score},
          {"channel", channel_name(p.channel)}};
}

class ApiMatcher {
 public:
  explicit ApiMatcher(const CorpusDb& db, std::shared_ptr<const DocumentEmbedder> embedder = nullptr,
                      const TokenNormalizer& normalize = {})
      : db_(db), embedder_(std::move(embedder)) {
    if (!embedder_) embedder_ = std::make_shared<TfIdfDescriptionEmbedder>(db, normalize);
    std::map<std::string, std::vector<std::string>> tokens;
    for (const auto& [name, e] : db.entries()) tokens[name] = tokenize(e, normalize);
    signatures_ = tfidf_embed(tokens);
  }

  double signature_similarity(const std::string& s, const std::string& t) const {
    return cosine(signatures_.at(s), signatures_.at(t));
  }
  double document_similarity(const std::string& s, const std::string& t) const {
    return embedder_->similarity(db_.api(s), db_.api(t));
  }
  double api_similarity(const std::string& s, const std::string& t) const {
    return std::max(signature_similarity(s, t), document_similarity(s, t));
  }

  // K best partners of `source` by Sim_API (ties: target name ascending),
  // then one template-channel pair per distinct API invoked from the
  // source's documentation templates, whatever its rank.
  std::vector<CandidatePair> candidates_for(const std::string& source, std::size_t k) const {
    std::vector<CandidatePair> ranked;
    for (const auto& [target, e] : db_.entries()) {
      if (target == source) continue;
      const double sig = signature_similarity(source, target);
      const double doc = document_similarity(source, target);
      ranked.push_back({source, target, std::max(sig, doc),
                        sig >= doc ? Channel::Signature : Channel::Document});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const CandidatePair& a, const CandidatePair& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.target < b.target;
    });
    if (ranked.size() > k) ranked.resize(k);

    std::set<std::string> invoked;
    for (const auto& t : extract_templates(db_.api(source), db_)) {
      if (invoked.insert(t.invoked).second)
        ranked.push_back({source, t.invoked, api_similarity(source, t.invoked), Channel::Template});
    }
    return ranked;
  }

 private:
  const CorpusDb& db_;
  std::shared_ptr<const DocumentEmbedder> embedder_;
  std::map<std::string, TfIdfVector> signatures_;
};

// Candidate pairs for every API in `sources` (all APIs when empty), in source
// name order.
inline std::vector<CandidatePair> top_k_pairs(const CorpusDb& db, std::size_t k,
                                              std::shared_ptr<const DocumentEmbedder> embedder = nullptr,
                                              const std::set<std::string>& sources = {}) {
  if (k == 0) throw std::invalid_argument("top-k must be at least 1");
  ApiMatcher matcher(db, std::move(embedder));
  std::vector<CandidatePair> out;
  for (const auto& [name, e] : db.entries()) {
    if (!sources.empty() && !sources.count(name)) continue;
    auto c = matcher.candidates_for(name, k);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

}  // namespace relfuzz
