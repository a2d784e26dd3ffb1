// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moee/store.hpp"

namespace moee {

enum class TokenPool { LastToken, MeanAllTokens };
enum class LayerPool { LastLayer, MeanAllLayers };

struct HsStrategy {
  TokenPool token_pool = TokenPool::LastToken;
  LayerPool layer_pool = LayerPool::LastLayer;

  bool operator==(const HsStrategy&) const = default;
};

enum class EmbeddingKind { Hs, Rw, Concat };

struct EmbeddingStrategy {
  EmbeddingKind kind = EmbeddingKind::Hs;
  HsStrategy hs;                           // Hs, and the HS part of Concat
  TokenPool rw_pool = TokenPool::LastToken;  // Rw, and the RW part of Concat
  bool normalize = true;                   // Concat only
  double rw_scale = 1.0;                   // Concat only: weight on the RW part

  bool operator==(const EmbeddingStrategy&) const = default;
};

/// Names: hs:last:last, hs:last:all, hs:mean:last, hs:mean:all, rw:last,
/// rw:mean, concat, concat:raw. Unknown names throw ErrorKind::Strategy.
EmbeddingStrategy parse_strategy(std::string_view name);
std::string strategy_name(const EmbeddingStrategy& s);

struct EmbeddingVector {
  std::vector<double> values;
  EmbeddingStrategy strategy;
  bool normalized = false;
  std::string record_id;

  std::size_t dim() const { return values.size(); }
};

struct PromptTemplate {
  int id = 0;
  std::string text;  // contains "*sent*" exactly once unless id == 0
};

inline constexpr int kPromptNone = 0;
inline constexpr int kPromptEol = 10;
inline constexpr std::string_view kPromptPlaceholder = "*sent*";

/// 0 = no prompt, 1-9 = the nine analysis prompts, 10 = PromptEOL.
const PromptTemplate& prompt_template(int id);
const std::vector<PromptTemplate>& prompt_templates();

std::string apply_prompt(const PromptTemplate& tmpl, std::string_view text);

EmbeddingVector extract_hs(const ActivationBundle& bundle, HsStrategy strategy);
EmbeddingVector extract_rw(const ActivationBundle& bundle, TokenPool token_pool);

/// [e_HS; rw_scale * e_RW], each part L2-normalized first when `normalize`.
EmbeddingVector moee_concat(const EmbeddingVector& hs, const EmbeddingVector& rw, bool normalize,
                            double rw_scale = 1.0);

/// Dispatches on strategy.kind.
EmbeddingVector embed(const ActivationBundle& bundle, const EmbeddingStrategy& strategy);

std::vector<double> l2_normalized(const std::vector<double>& v);

}  // namespace moee
