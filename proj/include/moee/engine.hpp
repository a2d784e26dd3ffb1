// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale decoder-only transformer with mixture-of-experts feed-forward
// blocks. The forward pass records every layer's full gate distribution and
// post-layer hidden state so they can be turned into embeddings.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moee/tensor.hpp"

namespace moee {

inline constexpr int kBosToken = 256;
inline constexpr int kByteVocabSize = 257;

struct MoEConfig {
  int num_layers = 2;
  int hidden_dim = 8;
  int ffn_dim = 16;
  int num_heads = 2;
  std::vector<int> experts_per_layer = {4, 4};
  int top_k = 2;
  int vocab_size = kByteVocabSize;
  int max_seq_len = 512;
  std::uint64_t rng_seed = 0;

  /// Throws ErrorKind::Config on any violated invariant.
  void validate() const;

  int total_experts() const;

  bool operator==(const MoEConfig&) const = default;
};

struct Expert {
  Matrix w_in;   // [d x ffn_dim]
  Matrix w_out;  // [ffn_dim x d]
};

struct LayerWeights {
  std::vector<float> attn_norm;  // [d]
  Matrix wq, wk, wv, wo;         // [d x d]
  std::vector<float> ffn_norm;   // [d]
  Matrix gate;                   // [d x N]
  std::vector<Expert> experts;

  int num_experts() const { return static_cast<int>(experts.size()); }
};

struct MoEModel {
  MoEConfig config;
  Matrix token_embedding;  // [vocab x d]
  std::vector<LayerWeights> layers;
  std::vector<float> final_norm;  // [d]
};

struct ForwardTrace {
  std::vector<int> token_ids;
  /// hidden_states[l] is [T x d]: residual stream after layer l. The last
  /// entry has the final RMS norm applied.
  std::vector<Matrix> hidden_states;
  /// routing_weights[l] is [T x N_l], the full softmax before top-k.
  std::vector<Matrix> routing_weights;
  /// top_k_masks[l] is row-major [T x N_l].
  std::vector<std::vector<std::uint8_t>> top_k_masks;

  bool operator==(const ForwardTrace&) const = default;
};

struct MoELayerOutput {
  Matrix output;                    // [T x d]
  Matrix gates;                     // [T x N]
  std::vector<std::uint8_t> mask;   // [T x N]
};

/// Draws every weight from Rng(config.rng_seed) as symmetric() / sqrt(d), in
/// declaration order: token_embedding, then per layer wq, wk, wv, wo, gate,
/// and each expert's w_in, w_out. Norm scales are 1.
MoEModel gen_toy_model(const MoEConfig& config);

/// Numerically stable softmax (max-subtracted). Throws ErrorKind::Numeric on
/// non-finite input.
std::vector<double> gate_softmax(std::span<const double> logits);

/// Expert activation: x * sigmoid(1.702 x).
double expert_activation(double x);

/// Gates every row of `h`, then mixes the top-k experts weighted by their
/// un-renormalized gate values. Ties in gate value prefer the lower expert
/// index.
MoELayerOutput moe_layer_apply(const Matrix& h, const LayerWeights& layer, int top_k);

ForwardTrace forward(const MoEModel& model, std::span<const int> token_ids);

/// Byte-level tokenizer: BOS (256) followed by the UTF-8 bytes.
std::vector<int> tokenize(std::string_view text);

/// Inverse of tokenize; BOS tokens are dropped. Ids outside 0..256 throw
/// ErrorKind::Vocab.
std::string detokenize(std::span<const int> ids);

// MOEM model files: "MOEM" | version u32 LE | header length u64 LE |
// JSON header | little-endian f32 payload.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> encode_model(const MoEModel& model);
MoEModel decode_model(std::span<const std::uint8_t> bytes);
void save_model(const MoEModel& model, const std::filesystem::path& path);
MoEModel load_model(const std::filesystem::path& path);

}  // namespace moee
