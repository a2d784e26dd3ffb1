// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "moee/embedder.hpp"
#include "moee/engine.hpp"
#include "moee/rng.hpp"
#include "moee/simkit.hpp"
#include "moee/store.hpp"
#include "test_support.hpp"

namespace moee {
namespace {

// Random bundle with softmax-normalized gate rows.
ActivationBundle synth(std::vector<int> experts, int tokens, int d, std::uint64_t seed,
                       std::string id = "rec") {
  Rng rng(seed);
  ActivationBundle b;
  b.record_id = std::move(id);
  b.num_layers = static_cast<int>(experts.size());
  b.tokens_stored = tokens;
  b.token_mode = tokens == 1 ? TokenMode::Last : TokenMode::All;
  b.hidden_dim = d;
  b.experts_per_layer = experts;
  for (int n : experts) {
    Matrix h(tokens, d);
    for (float& v : h.data) v = static_cast<float>(rng.normal());
    b.hidden_states.push_back(h);
    Matrix g(tokens, n);
    for (int t = 0; t < tokens; ++t) {
      std::vector<double> z(n);
      for (double& v : z) v = 2.0 * rng.normal();
      auto p = gate_softmax(z);
      for (int i = 0; i < n; ++i) g(t, i) = static_cast<float>(p[i]);
    }
    b.routing_weights.push_back(g);
  }
  return b;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// ---- prompts ----------------------------------------------------------------------

TEST(Prompt, Examples) {
  EXPECT_EQ(apply_prompt(prompt_template(0), "hello"), "hello");
  EXPECT_EQ(apply_prompt(prompt_template(kPromptEol), "cats purr"),
            "This sentence: \"cats purr\" means in one word: ");
  EXPECT_EQ(apply_prompt(prompt_template(1), "x"), "This sentence: x means in one word: ");
}

TEST(Prompt, EveryTemplateHasOnePlaceholder) {
  ASSERT_EQ(prompt_templates().size(), 11u);
  for (const auto& t : prompt_templates()) {
    std::size_t count = 0;
    for (auto pos = t.text.find(kPromptPlaceholder); pos != std::string::npos;
         pos = t.text.find(kPromptPlaceholder, pos + 1))
      ++count;
    EXPECT_EQ(count, 1u) << t.id;
  }
}

TEST(Prompt, Errors) {
  EXPECT_MOEE_ERROR(prompt_template(11), ErrorKind::Template);
  EXPECT_MOEE_ERROR(prompt_template(-1), ErrorKind::Template);
  EXPECT_MOEE_ERROR(apply_prompt(PromptTemplate{3, "no placeholder"}, "x"), ErrorKind::Template);
}

// ---- strategies -------------------------------------------------------------------

TEST(Strategy, NamesRoundTrip) {
  for (const char* n : {"hs:last:last", "hs:last:all", "hs:mean:last", "hs:mean:all", "rw:last",
                        "rw:mean", "concat", "concat:raw"}) {
    EXPECT_EQ(strategy_name(parse_strategy(n)), n);
  }
  EXPECT_MOEE_ERROR(parse_strategy("hs:first:last"), ErrorKind::Strategy);
}

// ---- extract_hs -------------------------------------------------------------------

TEST(ExtractHs, LastLastIsStoredRowVerbatim) {
  auto b = synth({4, 4}, 3, 5, 1);
  auto e = extract_hs(b, {});
  ASSERT_EQ(e.dim(), 5u);
  for (std::size_t j = 0; j < 5; ++j)
    EXPECT_EQ(e.values[j], static_cast<double>(b.hidden_states[1](2, j)));
  EXPECT_FALSE(e.normalized);
}

TEST(ExtractHs, SingleTokenPoolsAgree) {
  auto b = synth({4, 4}, 1, 5, 2);
  b.token_mode = TokenMode::All;
  auto a = extract_hs(b, {TokenPool::LastToken, LayerPool::MeanAllLayers});
  auto m = extract_hs(b, {TokenPool::MeanAllTokens, LayerPool::MeanAllLayers});
  EXPECT_EQ(a.values, m.values);
}

TEST(ExtractHs, ConstantLayersMeanEqualsLast) {
  auto b = synth({4, 4, 4}, 2, 3, 3);
  b.hidden_states[0] = b.hidden_states[2];
  b.hidden_states[1] = b.hidden_states[2];
  auto last = extract_hs(b, {TokenPool::LastToken, LayerPool::LastLayer});
  auto mean = extract_hs(b, {TokenPool::LastToken, LayerPool::MeanAllLayers});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(mean.values[j], last.values[j], 1e-7);
}

TEST(ExtractHs, MatchesLoopOracle) {
  auto b = synth({3, 5}, 3, 4, 4);
  auto all = extract_hs(b, {TokenPool::MeanAllTokens, LayerPool::MeanAllLayers});
  auto tok = extract_hs(b, {TokenPool::MeanAllTokens, LayerPool::LastLayer});
  auto lay = extract_hs(b, {TokenPool::LastToken, LayerPool::MeanAllLayers});
  for (std::size_t j = 0; j < 4; ++j) {
    double s_all = 0, s_tok = 0, s_lay = 0;
    for (std::size_t l = 0; l < 2; ++l) {
      for (std::size_t t = 0; t < 3; ++t) s_all += b.hidden_states[l](t, j);
      s_lay += b.hidden_states[l](2, j);
    }
    for (std::size_t t = 0; t < 3; ++t) s_tok += b.hidden_states[1](t, j);
    EXPECT_NEAR(all.values[j], s_all / 6.0, 1e-7);
    EXPECT_NEAR(tok.values[j], s_tok / 3.0, 1e-7);
    EXPECT_NEAR(lay.values[j], s_lay / 2.0, 1e-7);
  }
}

TEST(ExtractHs, MeanOnLastOnlyBundleIsStrategyError) {
  auto b = synth({4}, 1, 4, 5);
  EXPECT_MOEE_ERROR(extract_hs(b, {TokenPool::MeanAllTokens, LayerPool::LastLayer}),
                    ErrorKind::Strategy);
  EXPECT_MOEE_ERROR(extract_rw(b, TokenPool::MeanAllTokens), ErrorKind::Strategy);
}

// ---- extract_rw -------------------------------------------------------------------

TEST(ExtractRw, ReferenceModelDimensions) {
  struct Shape {
    int layers, experts, dim;
  };
  for (auto [L, N, want] : {Shape{28, 64, 1792}, Shape{24, 60, 1440}, Shape{16, 64, 1024}}) {
    auto b = synth(std::vector<int>(L, N), 1, 4, 6);
    EXPECT_EQ(static_cast<int>(extract_rw(b, TokenPool::LastToken).dim()), want);
  }
}

TEST(ExtractRw, LayerOrderAndSlicesSumToOne) {
  auto b = synth({3, 5, 2}, 4, 2, 7);
  auto e = extract_rw(b, TokenPool::LastToken);
  ASSERT_EQ(e.dim(), 10u);
  std::size_t off = 0;
  for (std::size_t l = 0; l < 3; ++l) {
    double s = 0;
    for (std::size_t i = 0; i < b.routing_weights[l].cols; ++i) {
      EXPECT_EQ(e.values[off + i], static_cast<double>(b.routing_weights[l](3, i)));
      s += e.values[off + i];
    }
    EXPECT_NEAR(s, 1.0, 1e-4);
    off += b.routing_weights[l].cols;
  }
}

TEST(ExtractRw, UniformGatesGiveUniformBlocks) {
  auto b = synth({4, 2}, 2, 3, 8);
  for (auto& g : b.routing_weights) std::fill(g.data.begin(), g.data.end(), 1.0f / g.cols);
  auto e = extract_rw(b, TokenPool::MeanAllTokens);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(e.values[i], 0.25f);
  for (std::size_t i = 4; i < 6; ++i) EXPECT_FLOAT_EQ(e.values[i], 0.5f);
}

TEST(ExtractRw, MeanIsNotRenormalized) {
  auto b = synth({4}, 3, 2, 9);
  auto e = extract_rw(b, TokenPool::MeanAllTokens);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t t = 0; t < 3; ++t) s += b.routing_weights[0](t, i);
    EXPECT_NEAR(e.values[i], s / 3.0, 1e-12);
  }
}

TEST(ExtractRw, LastTokenIgnoresEarlierRows) {
  auto a = synth({4, 4}, 3, 2, 10);
  auto b = a;
  for (auto& g : b.routing_weights)
    for (std::size_t i = 0; i < g.cols; ++i) g(0, i) = i == 0 ? 1.0f : 0.0f;
  EXPECT_EQ(extract_rw(a, TokenPool::LastToken).values, extract_rw(b, TokenPool::LastToken).values);
}

// ---- concat -----------------------------------------------------------------------

TEST(Concat, LayoutAndNormalization) {
  auto b = synth({4, 4}, 1, 4, 11);
  auto hs = extract_hs(b, {});
  auto rw = extract_rw(b, TokenPool::LastToken);
  auto raw = moee_concat(hs, rw, false);
  ASSERT_EQ(raw.dim(), 12u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(raw.values[j], hs.values[j]);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(raw.values[4 + j], rw.values[j]);

  auto n = moee_concat(hs, rw, true);
  std::vector<double> a(n.values.begin(), n.values.begin() + 4);
  std::vector<double> r(n.values.begin() + 4, n.values.end());
  EXPECT_NEAR(dot(a, a), 1.0, 1e-12);
  EXPECT_NEAR(dot(r, r), 1.0, 1e-12);
}

TEST(Concat, NormalizedCosineIsMeanOfPartCosines) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto x = synth({4, 6}, 1, 5, 100 + s, "x");
    auto y = synth({4, 6}, 1, 5, 200 + s, "y");
    auto hx = extract_hs(x, {}), hy = extract_hs(y, {});
    auto rx = extract_rw(x, TokenPool::LastToken), ry = extract_rw(y, TokenPool::LastToken);
    const double want = 0.5 * (cosine(hx.values, hy.values) + cosine(rx.values, ry.values));
    EXPECT_NEAR(cosine(moee_concat(hx, rx, true).values, moee_concat(hy, ry, true).values), want, 1e-6);
  }
}

TEST(Concat, Errors) {
  auto a = synth({4}, 1, 3, 12, "a");
  auto b = synth({4}, 1, 3, 13, "b");
  auto hs = extract_hs(a, {});
  EXPECT_MOEE_ERROR(moee_concat(hs, extract_rw(b, TokenPool::LastToken), true), ErrorKind::Pairing);
  EXPECT_MOEE_ERROR(moee_concat(hs, hs, true), ErrorKind::Pairing);
  a.hidden_states[0].data.assign(3, 0.0f);
  EXPECT_MOEE_ERROR(moee_concat(extract_hs(a, {}), extract_rw(a, TokenPool::LastToken), true),
                    ErrorKind::DegenerateInput);
}

TEST(Embed, ConcatDimensionAndUnitParts) {
  auto b = synth({3, 5}, 1, 4, 14);
  auto e = embed(b, parse_strategy("concat"));
  EXPECT_EQ(e.dim(), 4u + 8u);
  // Two unit parts: the whole vector has norm sqrt(2), so it is not flagged normalized.
  EXPECT_FALSE(e.normalized);
  EXPECT_NEAR(dot(e.values, e.values), 2.0, 1e-12);
  auto v = l2_normalized({3.0, 4.0});
  EXPECT_DOUBLE_EQ(v[0], 0.6);
}

TEST(Embed, WorksOnEngineTraces) {
  MoEConfig c;
  c.rng_seed = 1;
  auto m = gen_toy_model(c);
  auto tr = forward(m, tokenize(apply_prompt(prompt_template(kPromptEol), "cats purr")));
  auto b = make_bundle(tr, "a", "cats purr", kPromptEol, TokenMode::Last);
  EXPECT_EQ(embed(b, parse_strategy("rw:last")).dim(), 8u);
  EXPECT_EQ(embed(b, parse_strategy("hs:last:all")).dim(), 8u);
}

}  // namespace
}  // namespace moee
