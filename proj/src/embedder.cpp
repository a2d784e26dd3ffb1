// SPDX-License-Identifier: Apache-2.0

#include "moee/embedder.hpp"

#include <cmath>
#include <numeric>

#include "moee/error.hpp"

namespace moee {

namespace {

bool needs_all_tokens(TokenPool p) { return p == TokenPool::MeanAllTokens; }

void require_tokens(const ActivationBundle& b, TokenPool pool) {
  if (needs_all_tokens(pool) && b.token_mode == TokenMode::Last) {
    fail(ErrorKind::Strategy, "record '" + b.record_id +
                                  "' stores only the last token; mean pooling needs all tokens");
  }
  if (b.tokens_stored < 1) fail(ErrorKind::EmptyInput, "record '" + b.record_id + "' has no tokens");
}

// Mean over rows when pooling, else the final row, accumulated into `out`.
void add_pooled_row(const Matrix& m, TokenPool pool, double weight, std::span<double> out) {
  if (pool == TokenPool::LastToken) {
    auto r = m.row(m.rows - 1);
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += weight * r[c];
    return;
  }
  const double w = weight / static_cast<double>(m.rows);
  for (std::size_t t = 0; t < m.rows; ++t) {
    auto r = m.row(t);
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += w * r[c];
  }
}

std::string pool_name(TokenPool p) { return p == TokenPool::LastToken ? "last" : "mean"; }

}  // namespace

EmbeddingStrategy parse_strategy(std::string_view name) {
  EmbeddingStrategy s;
  if (name == "hs:last:last") {
    s.kind = EmbeddingKind::Hs;
  } else if (name == "hs:last:all") {
    s.kind = EmbeddingKind::Hs;
    s.hs.layer_pool = LayerPool::MeanAllLayers;
  } else if (name == "hs:mean:last") {
    s.kind = EmbeddingKind::Hs;
    s.hs.token_pool = TokenPool::MeanAllTokens;
  } else if (name == "hs:mean:all") {
    s.kind = EmbeddingKind::Hs;
    s.hs = {TokenPool::MeanAllTokens, LayerPool::MeanAllLayers};
  } else if (name == "rw:last") {
    s.kind = EmbeddingKind::Rw;
  } else if (name == "rw:mean") {
    s.kind = EmbeddingKind::Rw;
    s.rw_pool = TokenPool::MeanAllTokens;
  } else if (name == "concat") {
    s.kind = EmbeddingKind::Concat;
  } else if (name == "concat:raw") {
    s.kind = EmbeddingKind::Concat;
    s.normalize = false;
  } else {
    fail(ErrorKind::Strategy, "unknown embedding strategy '" + std::string(name) + "'");
  }
  return s;
}

std::string strategy_name(const EmbeddingStrategy& s) {
  switch (s.kind) {
    case EmbeddingKind::Hs:
      return "hs:" + pool_name(s.hs.token_pool) + ":" +
             (s.hs.layer_pool == LayerPool::LastLayer ? "last" : "all");
    case EmbeddingKind::Rw:
      return "rw:" + pool_name(s.rw_pool);
    case EmbeddingKind::Concat:
      return s.normalize ? "concat" : "concat:raw";
  }
  return "?";
}

const std::vector<PromptTemplate>& prompt_templates() {
  static const std::vector<PromptTemplate> templates = {
      {0, "*sent*"},
      {1, "This sentence: *sent* means in one word: "},
      {2, "In one word, describe the style of the following sentence - *sent*: "},
      {3, "In one word, describe the sentiment of the following sentence (positive, neutral, or "
          "negative) - *sent*: "},
      {4, "In one word, describe the tone of the following sentence - *sent* (e.g., formal, "
          "informal, humorous, serious): "},
      {5, "In one word, describe the intent behind the following sentence (e.g., request, "
          "suggestion, command) - *sent*: "},
      {6, "In one word, rate the complexity of the following sentence (simple, moderate, "
          "complex) - *sent*: "},
      {7, "In one word, describe whether the following sentence is subjective or objective - "
          "*sent*: "},
      {8, "In one word, describe the language style of the following sentence (e.g., academic, "
          "conversational, literary) - *sent*: "},
      {9, "In one word, describe the grammatical structure of the following sentence (simple, "
          "compound, complex) - *sent*: "},
      {10, "This sentence: \"*sent*\" means in one word: "},
  };
  return templates;
}

const PromptTemplate& prompt_template(int id) {
  const auto& all = prompt_templates();
  if (id < 0 || static_cast<std::size_t>(id) >= all.size()) {
    fail(ErrorKind::Template, "unknown prompt id " + std::to_string(id));
  }
  return all[static_cast<std::size_t>(id)];
}

std::string apply_prompt(const PromptTemplate& tmpl, std::string_view text) {
  if (tmpl.id == kPromptNone) return std::string(text);
  const auto pos = tmpl.text.find(kPromptPlaceholder);
  if (pos == std::string::npos ||
      tmpl.text.find(kPromptPlaceholder, pos + kPromptPlaceholder.size()) != std::string::npos) {
    fail(ErrorKind::Template, "prompt template " + std::to_string(tmpl.id) +
                                  " must contain *sent* exactly once");
  }
  std::string out = tmpl.text.substr(0, pos);
  out.append(text);
  out.append(tmpl.text, pos + kPromptPlaceholder.size());
  return out;
}

EmbeddingVector extract_hs(const ActivationBundle& bundle, HsStrategy strategy) {
  require_tokens(bundle, strategy.token_pool);
  EmbeddingVector e;
  e.strategy.kind = EmbeddingKind::Hs;
  e.strategy.hs = strategy;
  e.record_id = bundle.record_id;
  const auto d = static_cast<std::size_t>(bundle.hidden_dim);
  e.values.assign(d, 0.0);

  if (strategy.layer_pool == LayerPool::LastLayer) {
    add_pooled_row(bundle.hidden_states.back(), strategy.token_pool, 1.0, e.values);
  } else {
    const double w = 1.0 / static_cast<double>(bundle.hidden_states.size());
    for (const auto& m : bundle.hidden_states) add_pooled_row(m, strategy.token_pool, w, e.values);
  }
  return e;
}

EmbeddingVector extract_rw(const ActivationBundle& bundle, TokenPool token_pool) {
  require_tokens(bundle, token_pool);
  EmbeddingVector e;
  e.strategy.kind = EmbeddingKind::Rw;
  e.strategy.rw_pool = token_pool;
  e.record_id = bundle.record_id;
  std::size_t total = 0;
  for (const auto& g : bundle.routing_weights) total += g.cols;
  e.values.assign(total, 0.0);
  std::size_t off = 0;
  for (const auto& g : bundle.routing_weights) {
    add_pooled_row(g, token_pool, 1.0, std::span(e.values).subspan(off, g.cols));
    off += g.cols;
  }
  return e;
}

std::vector<double> l2_normalized(const std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double norm = std::sqrt(ss);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    fail(ErrorKind::DegenerateInput, "cannot normalize a zero-norm vector");
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

EmbeddingVector moee_concat(const EmbeddingVector& hs, const EmbeddingVector& rw, bool normalize,
                            double rw_scale) {
  if (hs.strategy.kind != EmbeddingKind::Hs || rw.strategy.kind != EmbeddingKind::Rw) {
    fail(ErrorKind::Pairing, "concatenation needs an HS and an RW embedding");
  }
  if (hs.record_id != rw.record_id) {
    fail(ErrorKind::Pairing, "HS from '" + hs.record_id + "' paired with RW from '" +
                                 rw.record_id + "'");
  }
  EmbeddingVector e;
  e.strategy.kind = EmbeddingKind::Concat;
  e.strategy.hs = hs.strategy.hs;
  e.strategy.rw_pool = rw.strategy.rw_pool;
  e.strategy.normalize = normalize;
  e.strategy.rw_scale = rw_scale;
  e.record_id = hs.record_id;
  const auto a = normalize ? l2_normalized(hs.values) : hs.values;
  const auto b = normalize ? l2_normalized(rw.values) : rw.values;
  e.values.reserve(a.size() + b.size());
  e.values.insert(e.values.end(), a.begin(), a.end());
  for (double x : b) e.values.push_back(rw_scale * x);
  return e;
}

EmbeddingVector embed(const ActivationBundle& bundle, const EmbeddingStrategy& strategy) {
  switch (strategy.kind) {
    case EmbeddingKind::Hs:
      return extract_hs(bundle, strategy.hs);
    case EmbeddingKind::Rw:
      return extract_rw(bundle, strategy.rw_pool);
    case EmbeddingKind::Concat:
      return moee_concat(extract_hs(bundle, strategy.hs), extract_rw(bundle, strategy.rw_pool),
                         strategy.normalize, strategy.rw_scale);
  }
  fail(ErrorKind::Strategy, "unhandled strategy");
}

}  // namespace moee
