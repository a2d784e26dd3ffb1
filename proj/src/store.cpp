// SPDX-License-Identifier: Apache-2.0

#include "moee/store.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "moee/error.hpp"

namespace moee {

namespace {

using nlohmann::json;

std::string to_string(ActivationSource s) { return s == ActivationSource::Toy ? "toy" : "external"; }

ActivationSource parse_source(const std::string& s) {
  if (s == "toy") return ActivationSource::Toy;
  if (s == "external") return ActivationSource::External;
  fail(ErrorKind::Format, "unknown activation source '" + s + "'");
}

json fingerprint_to_json(const ModelFingerprint& f) {
  return {{"name", f.name},
          {"num_layers", f.num_layers},
          {"hidden_dim", f.hidden_dim},
          {"experts_per_layer", f.experts_per_layer},
          {"source", to_string(f.source)},
          {"attributes", f.attributes}};
}

ModelFingerprint fingerprint_from_json(const json& j) {
  ModelFingerprint f;
  f.name = j.at("name").get<std::string>();
  f.num_layers = j.at("num_layers").get<int>();
  f.hidden_dim = j.at("hidden_dim").get<int>();
  f.experts_per_layer = j.at("experts_per_layer").get<std::vector<int>>();
  f.source = parse_source(j.at("source").get<std::string>());
  if (j.contains("attributes")) {
    f.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
  }
  if (f.num_layers < 1 || f.hidden_dim < 1 ||
      f.experts_per_layer.size() != static_cast<std::size_t>(f.num_layers)) {
    fail(ErrorKind::Format, "fingerprint dimensions are inconsistent");
  }
  for (int n : f.experts_per_layer) {
    if (n < 1) fail(ErrorKind::Format, "fingerprint lists a layer with no experts");
  }
  return f;
}

std::uint64_t record_floats(const ModelFingerprint& f, int tokens) {
  std::uint64_t t = static_cast<std::uint64_t>(tokens);
  std::uint64_t n = 0;
  for (int e : f.experts_per_layer) n += static_cast<std::uint64_t>(e);
  return t * (static_cast<std::uint64_t>(f.num_layers) * static_cast<std::uint64_t>(f.hidden_dim) + n);
}

struct Header {
  std::uint32_t version = 0;
  ModelFingerprint fingerprint;
  std::vector<RecordIndexEntry> index;
};

Header parse_header(const detail::Frame& frame) {
  if (frame.version != kContainerFormatVersion) {
    fail(ErrorKind::Format, "unsupported MOEA version " + std::to_string(frame.version));
  }
  Header h;
  h.version = frame.version;
  try {
    json j = json::parse(frame.header);
    h.fingerprint = fingerprint_from_json(j.at("fingerprint"));
    for (const auto& r : j.at("records")) {
      RecordIndexEntry e;
      e.record_id = r.at("id").get<std::string>();
      e.text = r.at("text").get<std::string>();
      if (!r.at("prompt_id").is_null()) e.prompt_id = r.at("prompt_id").get<int>();
      e.token_mode = parse_token_mode(r.at("token_mode").get<std::string>());
      e.tokens_stored = r.at("tokens").get<int>();
      e.offset = r.at("offset").get<std::uint64_t>();
      e.nbytes = r.at("nbytes").get<std::uint64_t>();
      h.index.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed MOEA header: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("malformed MOEA header: ") + e.what());
  }
  return h;
}

// Problems with where a record lives, independent of its contents.
std::optional<std::string> check_placement(const ModelFingerprint& f, const RecordIndexEntry& e,
                                           std::uint64_t min_offset, std::size_t payload_size) {
  if (e.tokens_stored < 1) return "record stores no tokens";
  if (e.token_mode == TokenMode::Last && e.tokens_stored != 1) {
    return "token_mode last requires exactly one stored token";
  }
  if (e.nbytes != 4 * record_floats(f, e.tokens_stored)) {
    return "record byte length disagrees with its dimensions";
  }
  if (e.offset < min_offset) return "record offsets overlap or are not increasing";
  if (e.offset > payload_size || e.nbytes > payload_size - e.offset) {
    return "truncated payload";
  }
  return std::nullopt;
}

ActivationBundle decode_record(const ModelFingerprint& f, const RecordIndexEntry& e,
                               std::span<const std::uint8_t> payload) {
  ActivationBundle b;
  b.record_id = e.record_id;
  b.text = e.text;
  b.prompt_id = e.prompt_id;
  b.token_mode = e.token_mode;
  b.num_layers = f.num_layers;
  b.tokens_stored = e.tokens_stored;
  b.hidden_dim = f.hidden_dim;
  b.experts_per_layer = f.experts_per_layer;

  const auto T = static_cast<std::size_t>(e.tokens_stored);
  const auto d = static_cast<std::size_t>(f.hidden_dim);
  auto bytes = payload.subspan(e.offset, e.nbytes);
  std::size_t pos = 0;
  for (int l = 0; l < f.num_layers; ++l) {
    Matrix m(T, d);
    detail::get_f32s(bytes.subspan(pos, 4 * m.data.size()), m.data);
    pos += 4 * m.data.size();
    b.hidden_states.push_back(std::move(m));
  }
  for (int n : f.experts_per_layer) {
    Matrix m(T, static_cast<std::size_t>(n));
    detail::get_f32s(bytes.subspan(pos, 4 * m.data.size()), m.data);
    pos += 4 * m.data.size();
    b.routing_weights.push_back(std::move(m));
  }
  return b;
}

std::optional<std::string> check_against(const ModelFingerprint& f, const ActivationBundle& b) {
  if (b.num_layers != f.num_layers || b.hidden_dim != f.hidden_dim ||
      b.experts_per_layer != f.experts_per_layer) {
    return "record dimensions differ from container fingerprint";
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(TokenMode mode) { return mode == TokenMode::All ? "all" : "last"; }

TokenMode parse_token_mode(const std::string& s) {
  if (s == "all") return TokenMode::All;
  if (s == "last") return TokenMode::Last;
  fail(ErrorKind::Parse, "token mode must be 'all' or 'last', got '" + s + "'");
}

ModelFingerprint fingerprint_of(const MoEModel& model, std::string name) {
  return ModelFingerprint{std::move(name), model.config.num_layers, model.config.hidden_dim,
                          model.config.experts_per_layer, ActivationSource::Toy, {}};
}

ActivationBundle make_bundle(const ForwardTrace& trace, std::string record_id, std::string text,
                             std::optional<int> prompt_id, TokenMode mode) {
  if (trace.hidden_states.empty()) fail(ErrorKind::EmptyInput, "trace has no layers");
  ActivationBundle b;
  b.record_id = std::move(record_id);
  b.text = std::move(text);
  b.prompt_id = prompt_id;
  b.token_mode = mode;
  b.num_layers = static_cast<int>(trace.hidden_states.size());
  b.hidden_dim = static_cast<int>(trace.hidden_states.front().cols);
  const std::size_t T = trace.hidden_states.front().rows;
  auto keep = [&](const Matrix& m) {
    if (mode == TokenMode::All) return m;
    Matrix last(1, m.cols);
    auto src = m.row(T - 1);
    std::copy(src.begin(), src.end(), last.data.begin());
    return last;
  };
  for (const auto& m : trace.hidden_states) b.hidden_states.push_back(keep(m));
  for (const auto& m : trace.routing_weights) {
    b.experts_per_layer.push_back(static_cast<int>(m.cols));
    b.routing_weights.push_back(keep(m));
  }
  b.tokens_stored = static_cast<int>(b.hidden_states.front().rows);
  return b;
}

std::optional<std::string> check_bundle(const ActivationBundle& b) {
  const auto L = static_cast<std::size_t>(b.num_layers);
  const auto T = static_cast<std::size_t>(b.tokens_stored);
  const auto d = static_cast<std::size_t>(b.hidden_dim);
  if (b.num_layers < 1 || b.tokens_stored < 1 || b.hidden_dim < 1) return "empty dimensions";
  if (b.token_mode == TokenMode::Last && b.tokens_stored != 1) {
    return "token_mode last requires exactly one stored token";
  }
  if (b.experts_per_layer.size() != L || b.hidden_states.size() != L ||
      b.routing_weights.size() != L) {
    return "layer count inconsistent with tensors";
  }
  for (std::size_t l = 0; l < L; ++l) {
    const auto& h = b.hidden_states[l];
    const auto& g = b.routing_weights[l];
    const auto n = static_cast<std::size_t>(b.experts_per_layer[l]);
    if (h.rows != T || h.cols != d || h.data.size() != T * d) return "hidden state shape mismatch";
    if (g.rows != T || g.cols != n || g.data.size() != T * n) return "routing weight shape mismatch";
  }
  for (const auto& m : b.hidden_states) {
    for (float v : m.data) {
      if (!std::isfinite(v)) return "non-finite tensor";
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    const auto& g = b.routing_weights[l];
    for (std::size_t t = 0; t < T; ++t) {
      double sum = 0.0;
      for (float v : g.row(t)) {
        if (!std::isfinite(v)) return "non-finite tensor";
        if (v < 0.0f || v > 1.0f + kStoredGateSumTolerance) {
          return "gate weight outside [0,1] at layer " + std::to_string(l);
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kStoredGateSumTolerance) {
        std::ostringstream os;
        os << "gate row sum " << sum << " != 1 at layer " << l << ", token " << t;
        return os.str();
      }
    }
  }
  return std::nullopt;
}

BundleContainer::BundleContainer(std::uint32_t version, ModelFingerprint fingerprint,
                                 std::vector<RecordIndexEntry> index,
                                 std::vector<std::uint8_t> payload)
    : version_(version),
      fingerprint_(std::move(fingerprint)),
      index_(std::move(index)),
      payload_(std::move(payload)) {}

ActivationBundle BundleContainer::record(std::size_t i) const {
  if (i >= index_.size()) fail(ErrorKind::Shape, "record index out of range");
  return decode_record(fingerprint_, index_[i], payload_);
}

std::optional<ActivationBundle> BundleContainer::find(const std::string& record_id) const {
  for (std::size_t i = 0; i < index_.size(); ++i) {
    if (index_[i].record_id == record_id) return record(i);
  }
  return std::nullopt;
}

std::vector<ActivationBundle> BundleContainer::records() const {
  std::vector<ActivationBundle> out;
  out.reserve(index_.size());
  for (std::size_t i = 0; i < index_.size(); ++i) out.push_back(record(i));
  return out;
}

std::vector<std::uint8_t> encode_container(const ModelFingerprint& fingerprint,
                                           std::span<const ActivationBundle> records) {
  json index = json::array();
  std::vector<std::uint8_t> payload;
  std::set<std::string> seen;
  for (const auto& b : records) {
    if (auto why = check_against(fingerprint, b)) {
      fail(ErrorKind::Consistency, "record '" + b.record_id + "': " + *why);
    }
    if (!seen.insert(b.record_id).second) {
      fail(ErrorKind::Consistency, "duplicate record id '" + b.record_id + "'");
    }
    if (auto why = check_bundle(b)) {
      fail(ErrorKind::Validation, "record '" + b.record_id + "': " + *why);
    }
    const std::size_t offset = payload.size();
    for (const auto& m : b.hidden_states) detail::put_f32s(payload, m.data);
    for (const auto& m : b.routing_weights) detail::put_f32s(payload, m.data);
    index.push_back({{"id", b.record_id},
                     {"text", b.text},
                     {"prompt_id", b.prompt_id ? json(*b.prompt_id) : json(nullptr)},
                     {"token_mode", to_string(b.token_mode)},
                     {"tokens", b.tokens_stored},
                     {"offset", offset},
                     {"nbytes", payload.size() - offset}});
  }
  json header = {{"fingerprint", fingerprint_to_json(fingerprint)}, {"records", index}};
  return detail::encode_frame("MOEA", kContainerFormatVersion, header.dump(), payload);
}

std::uint64_t write_container(const ModelFingerprint& fingerprint,
                              std::span<const ActivationBundle> records,
                              const std::filesystem::path& path) {
  auto bytes = encode_container(fingerprint, records);
  detail::write_file(path, bytes);
  return bytes.size();
}

BundleContainer decode_container(std::span<const std::uint8_t> bytes) {
  auto frame = detail::decode_frame(bytes, "MOEA");
  auto header = parse_header(frame);
  std::uint64_t min_offset = 0;
  std::set<std::string> seen;
  for (const auto& e : header.index) {
    if (!seen.insert(e.record_id).second) {
      fail(ErrorKind::Format, "duplicate record id '" + e.record_id + "'");
    }
    if (auto why = check_placement(header.fingerprint, e, min_offset, frame.payload.size())) {
      fail(ErrorKind::Corruption, "record '" + e.record_id + "': " + *why);
    }
    min_offset = e.offset + e.nbytes;
    if (auto why = check_bundle(decode_record(header.fingerprint, e, frame.payload))) {
      fail(ErrorKind::Validation, "record '" + e.record_id + "': " + *why);
    }
  }
  return BundleContainer(header.version, std::move(header.fingerprint), std::move(header.index),
                         std::vector<std::uint8_t>(frame.payload.begin(), frame.payload.end()));
}

BundleContainer read_container(const std::filesystem::path& path) {
  return decode_container(detail::read_file(path));
}

std::size_t ValidationReport::failures() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.ok ? 0 : 1;
  return n;
}

ValidationReport validate_container_bytes(std::span<const std::uint8_t> bytes) {
  ValidationReport report;
  try {
    auto frame = detail::decode_frame(bytes, "MOEA");
    auto header = parse_header(frame);
    std::uint64_t min_offset = 0;
    std::set<std::string> seen;
    for (const auto& e : header.index) {
      ValidationEntry entry{e.record_id, true, {}};
      if (!seen.insert(e.record_id).second) {
        entry = {e.record_id, false, "duplicate record id"};
      } else if (auto why = check_placement(header.fingerprint, e, min_offset,
                                            frame.payload.size())) {
        entry = {e.record_id, false, *why};
      } else {
        min_offset = e.offset + e.nbytes;
        if (auto bad = check_bundle(decode_record(header.fingerprint, e, frame.payload))) {
          entry = {e.record_id, false, *bad};
        }
      }
      report.entries.push_back(std::move(entry));
    }
  } catch (const Error& e) {
    report.file_error = std::string(to_string(e.kind())) + ": " + e.what();
  } catch (const std::exception& e) {
    report.file_error = e.what();
  }
  return report;
}

ValidationReport validate_container(const std::filesystem::path& path) {
  ValidationReport report;
  try {
    report = validate_container_bytes(detail::read_file(path));
  } catch (const std::exception& e) {
    report.file_error = e.what();
  }
  report.path = path.string();
  return report;
}

}  // namespace moee
