// SPDX-License-Identifier: Apache-2.0

#include "moee/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "binary_io.hpp"
#include "moee/error.hpp"
#include "moee/rng.hpp"

namespace moee {

namespace {

constexpr double kRmsEps = 1e-6;

std::vector<double> rms_norm(std::span<const float> x, std::span<const float> scale) {
  double ss = 0.0;
  for (float v : x) ss += static_cast<double>(v) * v;
  double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + kRmsEps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * scale[i];
  return out;
}

// y = x * W for a row vector x and W [x.size() x cols].
std::vector<double> row_times(std::span<const double> x, const Matrix& w) {
  std::vector<double> y(w.cols, 0.0);
  for (std::size_t j = 0; j < w.rows; ++j) {
    const double xj = x[j];
    auto wr = w.row(j);
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += xj * wr[c];
  }
  return y;
}

std::vector<double> expert_apply(std::span<const double> x, const Expert& e) {
  auto hidden = row_times(x, e.w_in);
  for (double& v : hidden) v = expert_activation(v);
  return row_times(hidden, e.w_out);
}

void fill_uniform(Rng& rng, double scale, std::span<float> out) {
  for (float& v : out) v = static_cast<float>(rng.symmetric() * scale);
}

// Canonical tensor order, shared by generation and (de)serialization.
template <typename Model, typename Fn>
void for_each_tensor(Model& model, Fn&& fn) {
  const auto d = static_cast<std::size_t>(model.config.hidden_dim);
  fn("token_embedding", std::vector<std::size_t>{model.token_embedding.rows, d},
     std::span(model.token_embedding.data));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    fn(p + "attn_norm", std::vector<std::size_t>{d}, std::span(layer.attn_norm));
    fn(p + "wq", std::vector<std::size_t>{d, d}, std::span(layer.wq.data));
    fn(p + "wk", std::vector<std::size_t>{d, d}, std::span(layer.wk.data));
    fn(p + "wv", std::vector<std::size_t>{d, d}, std::span(layer.wv.data));
    fn(p + "wo", std::vector<std::size_t>{d, d}, std::span(layer.wo.data));
    fn(p + "ffn_norm", std::vector<std::size_t>{d}, std::span(layer.ffn_norm));
    fn(p + "gate", std::vector<std::size_t>{d, layer.gate.cols}, std::span(layer.gate.data));
    for (std::size_t i = 0; i < layer.experts.size(); ++i) {
      auto& e = layer.experts[i];
      const std::string q = p + "experts." + std::to_string(i) + ".";
      fn(q + "w_in", std::vector<std::size_t>{d, e.w_in.cols}, std::span(e.w_in.data));
      fn(q + "w_out", std::vector<std::size_t>{e.w_out.rows, d}, std::span(e.w_out.data));
    }
  }
  fn("final_norm", std::vector<std::size_t>{d}, std::span(model.final_norm));
}

MoEModel allocate_model(const MoEConfig& config) {
  const auto d = static_cast<std::size_t>(config.hidden_dim);
  const auto f = static_cast<std::size_t>(config.ffn_dim);
  MoEModel model;
  model.config = config;
  model.token_embedding = Matrix(static_cast<std::size_t>(config.vocab_size), d);
  model.layers.resize(static_cast<std::size_t>(config.num_layers));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    const auto n = static_cast<std::size_t>(config.experts_per_layer[l]);
    layer.attn_norm.assign(d, 1.0f);
    layer.ffn_norm.assign(d, 1.0f);
    layer.wq = layer.wk = layer.wv = layer.wo = Matrix(d, d);
    layer.gate = Matrix(d, n);
    layer.experts.assign(n, Expert{Matrix(d, f), Matrix(f, d)});
  }
  model.final_norm.assign(d, 1.0f);
  return model;
}

nlohmann::json config_to_json(const MoEConfig& c) {
  return {{"num_layers", c.num_layers},   {"hidden_dim", c.hidden_dim},
          {"ffn_dim", c.ffn_dim},         {"num_heads", c.num_heads},
          {"experts_per_layer", c.experts_per_layer},
          {"top_k", c.top_k},             {"vocab_size", c.vocab_size},
          {"max_seq_len", c.max_seq_len}, {"rng_seed", c.rng_seed}};
}

MoEConfig config_from_json(const nlohmann::json& j) {
  MoEConfig c;
  c.num_layers = j.at("num_layers").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.experts_per_layer = j.at("experts_per_layer").get<std::vector<int>>();
  c.top_k = j.at("top_k").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void MoEConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Config, what);
  };
  require(num_layers >= 1, "num_layers must be positive");
  require(hidden_dim >= 1, "hidden_dim must be positive");
  require(ffn_dim >= 1, "ffn_dim must be positive");
  require(num_heads >= 1, "num_heads must be positive");
  require(hidden_dim % num_heads == 0, "num_heads must divide hidden_dim");
  require(vocab_size >= 1, "vocab_size must be positive");
  require(max_seq_len >= 1, "max_seq_len must be positive");
  require(experts_per_layer.size() == static_cast<std::size_t>(num_layers),
          "experts_per_layer must have one entry per layer");
  for (int n : experts_per_layer) require(n >= 1, "every layer needs at least one expert");
  require(top_k >= 1, "top_k must be positive");
  for (int n : experts_per_layer) require(top_k <= n, "top_k exceeds experts");
}

int MoEConfig::total_experts() const {
  return std::accumulate(experts_per_layer.begin(), experts_per_layer.end(), 0);
}

MoEModel gen_toy_model(const MoEConfig& config) {
  config.validate();
  MoEModel model = allocate_model(config);
  Rng rng(config.rng_seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
  for_each_tensor(model, [&](const std::string& name, const std::vector<std::size_t>&,
                             std::span<float> data) {
    if (name.ends_with("norm")) return;
    fill_uniform(rng, scale, data);
  });
  return model;
}

std::vector<double> gate_softmax(std::span<const double> logits) {
  if (logits.empty()) fail(ErrorKind::Shape, "softmax over zero logits");
  for (double z : logits) {
    if (!std::isfinite(z)) fail(ErrorKind::Numeric, "non-finite gate logit");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double expert_activation(double x) { return x / (1.0 + std::exp(-1.702 * x)); }

MoELayerOutput moe_layer_apply(const Matrix& h, const LayerWeights& layer, int top_k) {
  const std::size_t d = h.cols;
  const std::size_t n = layer.gate.cols;
  if (layer.gate.rows != d) fail(ErrorKind::Shape, "gate matrix rows differ from hidden dim");
  if (layer.experts.size() != n) fail(ErrorKind::Shape, "gate columns differ from expert count");
  for (const auto& e : layer.experts) {
    if (e.w_in.rows != d || e.w_out.cols != d || e.w_in.cols != e.w_out.rows) {
      fail(ErrorKind::Shape, "expert weight shapes inconsistent with hidden dim");
    }
  }
  if (top_k < 1 || static_cast<std::size_t>(top_k) > n) {
    fail(ErrorKind::Config, "top_k exceeds experts");
  }

  MoELayerOutput result{Matrix(h.rows, d), Matrix(h.rows, n),
                        std::vector<std::uint8_t>(h.rows * n, 0)};
  std::vector<double> x(d);
  std::vector<std::size_t> order(n);
  for (std::size_t t = 0; t < h.rows; ++t) {
    auto hr = h.row(t);
    std::copy(hr.begin(), hr.end(), x.begin());
    auto gates = gate_softmax(row_times(x, layer.gate));

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gates[a] > gates[b]; });

    std::vector<double> mixed(d, 0.0);
    for (int r = 0; r < top_k; ++r) {
      const std::size_t i = order[static_cast<std::size_t>(r)];
      result.mask[t * n + i] = 1;
      auto y = expert_apply(x, layer.experts[i]);
      for (std::size_t c = 0; c < d; ++c) mixed[c] += gates[i] * y[c];
    }
    for (std::size_t c = 0; c < d; ++c) result.output(t, c) = static_cast<float>(mixed[c]);
    for (std::size_t i = 0; i < n; ++i) result.gates(t, i) = static_cast<float>(gates[i]);
  }
  return result;
}

ForwardTrace forward(const MoEModel& model, std::span<const int> token_ids) {
  const auto& cfg = model.config;
  if (token_ids.empty()) fail(ErrorKind::EmptyInput, "forward called with no tokens");
  if (token_ids.size() > static_cast<std::size_t>(cfg.max_seq_len)) {
    fail(ErrorKind::Shape, "sequence of " + std::to_string(token_ids.size()) +
                               " tokens exceeds max_seq_len " +
                               std::to_string(cfg.max_seq_len));
  }
  for (int id : token_ids) {
    if (id < 0 || id >= cfg.vocab_size) {
      fail(ErrorKind::Vocab, "token id " + std::to_string(id) + " outside vocabulary of " +
                                 std::to_string(cfg.vocab_size));
    }
  }

  const std::size_t T = token_ids.size();
  const auto d = static_cast<std::size_t>(cfg.hidden_dim);
  const auto heads = static_cast<std::size_t>(cfg.num_heads);
  const std::size_t hd = d / heads;
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

  ForwardTrace trace;
  trace.token_ids.assign(token_ids.begin(), token_ids.end());

  Matrix x(T, d);
  for (std::size_t t = 0; t < T; ++t) {
    auto src = model.token_embedding.row(static_cast<std::size_t>(token_ids[t]));
    std::copy(src.begin(), src.end(), x.row(t).begin());
  }

  std::vector<std::vector<double>> q(T), k(T), v(T);
  std::vector<double> scores(T);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];

    for (std::size_t t = 0; t < T; ++t) {
      auto a = rms_norm(x.row(t), layer.attn_norm);
      q[t] = row_times(a, layer.wq);
      k[t] = row_times(a, layer.wk);
      v[t] = row_times(a, layer.wv);
    }
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> attended(d, 0.0);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t off = h * hd;
        double mx = -INFINITY;
        for (std::size_t s = 0; s <= t; ++s) {
          double dot = 0.0;
          for (std::size_t c = 0; c < hd; ++c) dot += q[t][off + c] * k[s][off + c];
          scores[s] = dot * inv_sqrt_hd;
          mx = std::max(mx, scores[s]);
        }
        double denom = 0.0;
        for (std::size_t s = 0; s <= t; ++s) {
          scores[s] = std::exp(scores[s] - mx);
          denom += scores[s];
        }
        for (std::size_t s = 0; s <= t; ++s) {
          const double p = scores[s] / denom;
          for (std::size_t c = 0; c < hd; ++c) attended[off + c] += p * v[s][off + c];
        }
      }
      auto o = row_times(attended, layer.wo);
      auto xr = x.row(t);
      for (std::size_t c = 0; c < d; ++c) {
        xr[c] = static_cast<float>(static_cast<double>(xr[c]) + o[c]);
      }
    }

    Matrix normed(T, d);
    for (std::size_t t = 0; t < T; ++t) {
      auto b = rms_norm(x.row(t), layer.ffn_norm);
      auto nr = normed.row(t);
      for (std::size_t c = 0; c < d; ++c) nr[c] = static_cast<float>(b[c]);
    }
    auto moe = moe_layer_apply(normed, layer, cfg.top_k);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      x.data[i] = static_cast<float>(static_cast<double>(x.data[i]) + moe.output.data[i]);
    }

    trace.hidden_states.push_back(x);
    trace.routing_weights.push_back(std::move(moe.gates));
    trace.top_k_masks.push_back(std::move(moe.mask));
  }

  auto& last = trace.hidden_states.back();
  for (std::size_t t = 0; t < T; ++t) {
    auto y = rms_norm(last.row(t), model.final_norm);
    auto r = last.row(t);
    for (std::size_t c = 0; c < d; ++c) r[c] = static_cast<float>(y[c]);
  }
  return trace;
}

std::vector<int> tokenize(std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size() + 1);
  ids.push_back(kBosToken);
  for (char ch : text) ids.push_back(static_cast<unsigned char>(ch));
  return ids;
}

std::string detokenize(std::span<const int> ids) {
  std::string out;
  for (int id : ids) {
    if (id == kBosToken) continue;
    if (id < 0 || id > 255) fail(ErrorKind::Vocab, "token id " + std::to_string(id) + " is not a byte");
    out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
  }
  return out;
}

std::vector<std::uint8_t> encode_model(const MoEModel& model) {
  model.config.validate();
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<std::uint8_t> payload;
  for_each_tensor(model, [&](const std::string& name, const std::vector<std::size_t>& shape,
                             std::span<const float> data) {
    std::size_t numel = 1;
    for (auto s : shape) numel *= s;
    if (numel != data.size()) fail(ErrorKind::Shape, "tensor " + name + " does not match config");
    tensors.push_back({{"name", name},
                       {"shape", shape},
                       {"offset", payload.size()},
                       {"nbytes", 4 * data.size()}});
    detail::put_f32s(payload, data);
  });
  nlohmann::json header = {{"config", config_to_json(model.config)}, {"tensors", tensors}};
  return detail::encode_frame("MOEM", kModelFormatVersion, header.dump(), payload);
}

MoEModel decode_model(std::span<const std::uint8_t> bytes) {
  auto frame = detail::decode_frame(bytes, "MOEM");
  if (frame.version != kModelFormatVersion) {
    fail(ErrorKind::Format, "unsupported MOEM version " + std::to_string(frame.version));
  }
  nlohmann::json header;
  MoEConfig config;
  try {
    header = nlohmann::json::parse(frame.header);
    config = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed MOEM header: ") + e.what());
  }
  config.validate();

  std::map<std::string, nlohmann::json> table;
  try {
    for (const auto& entry : header.at("tensors")) {
      table[entry.at("name").get<std::string>()] = entry;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed tensor table: ") + e.what());
  }

  MoEModel model = allocate_model(config);
  for_each_tensor(model, [&](const std::string& name, const std::vector<std::size_t>& shape,
                             std::span<float> data) {
    auto it = table.find(name);
    if (it == table.end()) fail(ErrorKind::Format, "missing tensor " + name);
    std::vector<std::size_t> stored_shape;
    std::uint64_t offset = 0, nbytes = 0;
    try {
      stored_shape = it->second.at("shape").get<std::vector<std::size_t>>();
      offset = it->second.at("offset").get<std::uint64_t>();
      nbytes = it->second.at("nbytes").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Format, "tensor " + name + ": " + e.what());
    }
    if (stored_shape != shape || nbytes != 4 * data.size()) {
      fail(ErrorKind::Format, "tensor " + name + " has unexpected shape");
    }
    if (offset > frame.payload.size() || nbytes > frame.payload.size() - offset) {
      fail(ErrorKind::Corruption, "tensor " + name + " runs past end of payload");
    }
    detail::get_f32s(frame.payload.subspan(offset, nbytes), data);
    for (float v : data) {
      if (!std::isfinite(v)) fail(ErrorKind::Validation, "non-finite tensor " + name);
    }
  });
  return model;
}

void save_model(const MoEModel& model, const std::filesystem::path& path) {
  detail::write_file(path, encode_model(model));
}

MoEModel load_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path));
}

}  // namespace moee
