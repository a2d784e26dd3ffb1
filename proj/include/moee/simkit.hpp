// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "moee/embedder.hpp"

namespace moee {

enum class SimilarityMode { HsOnly, RwOnly, ConcatCosine, WeightedSum };

struct SimilaritySpec {
  SimilarityMode mode = SimilarityMode::WeightedSum;
  double alpha = 1.0;  // meaningful only for WeightedSum

  static SimilaritySpec hs_only() { return {SimilarityMode::HsOnly, 0.0}; }
  static SimilaritySpec rw_only() { return {SimilarityMode::RwOnly, 0.0}; }
  static SimilaritySpec concat_cosine() { return {SimilarityMode::ConcatCosine, 0.0}; }
  static SimilaritySpec weighted_sum(double alpha);

  /// 1 + alpha for WeightedSum, 1 otherwise.
  double self_similarity() const;
};

/// Cosine similarity accumulated in double, clamped to [-1, 1].
double cosine(std::span<const double> a, std::span<const double> b);

/// cosine(hs_a, hs_b) + alpha * cosine(rw_a, rw_b).
double moee_sum_similarity(std::span<const double> hs_a, std::span<const double> hs_b,
                           std::span<const double> rw_a, std::span<const double> rw_b,
                           double alpha);

/// What a similarity spec compares for one input: the HS and RW embeddings
/// (Hs/Rw/WeightedSum) or the concatenated embedding (ConcatCosine).
struct SimilarityInput {
  EmbeddingVector hs;
  EmbeddingVector rw;
  EmbeddingVector concat;
};

double similarity(const SimilarityInput& a, const SimilarityInput& b, const SimilaritySpec& spec);

/// Symmetric matrix of pairwise similarities. Throws ErrorKind::Spec when an
/// input's embeddings do not carry the strategy kinds the spec reads.
std::vector<std::vector<double>> similarity_matrix(std::span<const SimilarityInput> inputs,
                                                   const SimilaritySpec& spec);

}  // namespace moee
