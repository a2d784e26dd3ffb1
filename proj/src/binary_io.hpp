// SPDX-License-Identifier: Apache-2.0
//
// Little-endian framing shared by the MOEM and MOEA formats:
//   magic[4] | version u32 LE | header length u64 LE | header | payload

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace moee::detail {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
void put_f32s(std::vector<std::uint8_t>& out, std::span<const float> values);

std::uint32_t get_u32(const std::uint8_t* p);
std::uint64_t get_u64(const std::uint8_t* p);
float get_f32(const std::uint8_t* p);
void get_f32s(std::span<const std::uint8_t> bytes, std::span<float> out);

struct Frame {
  std::uint32_t version = 0;
  std::string header;
  std::span<const std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(std::string_view magic, std::uint32_t version,
                                       std::string_view header,
                                       std::span<const std::uint8_t> payload);

/// Throws Format on a bad magic or unparsable preamble, Corruption when the
/// declared header runs past the end of the buffer.
Frame decode_frame(std::span<const std::uint8_t> bytes, std::string_view magic);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace moee::detail
