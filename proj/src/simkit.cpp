// SPDX-License-Identifier: Apache-2.0

#include "moee/simkit.hpp"

#include <algorithm>
#include <cmath>

#include "moee/error.hpp"

namespace moee {

namespace {

void require_kind(const EmbeddingVector& e, EmbeddingKind kind, const char* what) {
  if (e.strategy.kind != kind || e.values.empty()) {
    fail(ErrorKind::Spec, std::string("similarity spec needs a ") + what + " embedding");
  }
}

void check_input(const SimilarityInput& in, const SimilaritySpec& spec) {
  switch (spec.mode) {
    case SimilarityMode::HsOnly:
      require_kind(in.hs, EmbeddingKind::Hs, "HS");
      break;
    case SimilarityMode::RwOnly:
      require_kind(in.rw, EmbeddingKind::Rw, "RW");
      break;
    case SimilarityMode::ConcatCosine:
      require_kind(in.concat, EmbeddingKind::Concat, "concatenated");
      break;
    case SimilarityMode::WeightedSum:
      require_kind(in.hs, EmbeddingKind::Hs, "HS");
      require_kind(in.rw, EmbeddingKind::Rw, "RW");
      break;
  }
}

}  // namespace

SimilaritySpec SimilaritySpec::weighted_sum(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    fail(ErrorKind::Spec, "alpha must be a finite non-negative number");
  }
  return {SimilarityMode::WeightedSum, alpha};
}

double SimilaritySpec::self_similarity() const {
  return mode == SimilarityMode::WeightedSum ? 1.0 + alpha : 1.0;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::Shape, "cosine of vectors with dims " + std::to_string(a.size()) + " and " +
                               std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorKind::DegenerateInput, "cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double moee_sum_similarity(std::span<const double> hs_a, std::span<const double> hs_b,
                           std::span<const double> rw_a, std::span<const double> rw_b,
                           double alpha) {
  return cosine(hs_a, hs_b) + alpha * cosine(rw_a, rw_b);
}

double similarity(const SimilarityInput& a, const SimilarityInput& b, const SimilaritySpec& spec) {
  check_input(a, spec);
  check_input(b, spec);
  switch (spec.mode) {
    case SimilarityMode::HsOnly:
      return cosine(a.hs.values, b.hs.values);
    case SimilarityMode::RwOnly:
      return cosine(a.rw.values, b.rw.values);
    case SimilarityMode::ConcatCosine:
      return cosine(a.concat.values, b.concat.values);
    case SimilarityMode::WeightedSum:
      return moee_sum_similarity(a.hs.values, b.hs.values, a.rw.values, b.rw.values, spec.alpha);
  }
  fail(ErrorKind::Spec, "unhandled similarity mode");
}

std::vector<std::vector<double>> similarity_matrix(std::span<const SimilarityInput> inputs,
                                                   const SimilaritySpec& spec) {
  for (const auto& in : inputs) check_input(in, spec);
  const std::size_t n = inputs.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double s = similarity(inputs[i], inputs[j], spec);
      m[i][j] = s;
      m[j][i] = s;
    }
  }
  return m;
}

}  // namespace moee
