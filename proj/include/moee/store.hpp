// SPDX-License-Identifier: Apache-2.0
//
// MOEA activation containers: the at-rest form of per-input hidden states and
// routing weights, shared with external exporters.
//
//   "MOEA" | version u32 LE | header length u64 LE | JSON header | payload
//
// The header holds the model fingerprint and a record index. Each record's
// payload slice is its hidden states [L x T x d] followed by its routing
// weights, layer by layer ([T x N_l] each), all little-endian f32. Offsets are
// payload-relative.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moee/engine.hpp"
#include "moee/tensor.hpp"

namespace moee {

inline constexpr std::uint32_t kContainerFormatVersion = 1;
inline constexpr double kStoredGateSumTolerance = 1e-4;

enum class TokenMode { All, Last };

std::string to_string(TokenMode mode);
TokenMode parse_token_mode(const std::string& s);

enum class ActivationSource { Toy, External };

struct ModelFingerprint {
  std::string name;
  int num_layers = 0;
  int hidden_dim = 0;
  std::vector<int> experts_per_layer;
  ActivationSource source = ActivationSource::Toy;
  /// Free-form provenance (e.g. gate capture point of an exporter).
  std::map<std::string, std::string> attributes;

  bool operator==(const ModelFingerprint&) const = default;
};

ModelFingerprint fingerprint_of(const MoEModel& model, std::string name);

struct ActivationBundle {
  std::string record_id;
  std::string text;
  std::optional<int> prompt_id;
  TokenMode token_mode = TokenMode::Last;
  int num_layers = 0;
  int tokens_stored = 0;
  int hidden_dim = 0;
  std::vector<int> experts_per_layer;
  std::vector<Matrix> hidden_states;    // L x [T_stored x d]
  std::vector<Matrix> routing_weights;  // L x [T_stored x N_l]

  bool operator==(const ActivationBundle&) const = default;
};

/// Builds a bundle from an engine trace. TokenMode::Last keeps only the final
/// position.
ActivationBundle make_bundle(const ForwardTrace& trace, std::string record_id, std::string text,
                             std::optional<int> prompt_id, TokenMode mode);

/// Empty when the bundle satisfies every stored-record invariant, otherwise
/// the first failure reason.
std::optional<std::string> check_bundle(const ActivationBundle& bundle);

struct RecordIndexEntry {
  std::string record_id;
  std::string text;
  std::optional<int> prompt_id;
  TokenMode token_mode = TokenMode::Last;
  int tokens_stored = 0;
  std::uint64_t offset = 0;
  std::uint64_t nbytes = 0;
};

class BundleContainer {
 public:
  BundleContainer(std::uint32_t version, ModelFingerprint fingerprint,
                  std::vector<RecordIndexEntry> index, std::vector<std::uint8_t> payload);

  std::uint32_t version() const { return version_; }
  const ModelFingerprint& fingerprint() const { return fingerprint_; }
  const std::vector<RecordIndexEntry>& index() const { return index_; }
  std::size_t size() const { return index_.size(); }

  /// Decodes record i from the payload.
  ActivationBundle record(std::size_t i) const;
  std::optional<ActivationBundle> find(const std::string& record_id) const;
  std::vector<ActivationBundle> records() const;

 private:
  std::uint32_t version_;
  ModelFingerprint fingerprint_;
  std::vector<RecordIndexEntry> index_;
  std::vector<std::uint8_t> payload_;
};

/// Throws Consistency when a record disagrees with the fingerprint or ids
/// repeat, Validation when a record breaks a stored-record invariant.
std::vector<std::uint8_t> encode_container(const ModelFingerprint& fingerprint,
                                           std::span<const ActivationBundle> records);
std::uint64_t write_container(const ModelFingerprint& fingerprint,
                              std::span<const ActivationBundle> records,
                              const std::filesystem::path& path);

BundleContainer decode_container(std::span<const std::uint8_t> bytes);
BundleContainer read_container(const std::filesystem::path& path);

struct ValidationEntry {
  std::string record_id;
  bool ok = true;
  std::string reason;
};

struct ValidationReport {
  std::string path;
  /// Set when the file as a whole could not be parsed.
  std::optional<std::string> file_error;
  std::vector<ValidationEntry> entries;

  std::size_t failures() const;
  bool passed() const { return !file_error && failures() == 0; }
};

/// Never throws; every problem becomes a report entry.
ValidationReport validate_container(const std::filesystem::path& path);
ValidationReport validate_container_bytes(std::span<const std::uint8_t> bytes);

}  // namespace moee
