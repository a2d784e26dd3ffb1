// SPDX-License-Identifier: Apache-2.0

#include "binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "moee/error.hpp"

namespace moee::detail {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

void put_f32s(std::vector<std::uint8_t>& out, std::span<const float> values) {
  out.reserve(out.size() + 4 * values.size());
  for (float v : values) put_f32(out, v);
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

void get_f32s(std::span<const std::uint8_t> bytes, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_f32(bytes.data() + 4 * i);
}

std::vector<std::uint8_t> encode_frame(std::string_view magic, std::uint32_t version,
                                       std::string_view header,
                                       std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + header.size() + payload.size());
  out.insert(out.end(), magic.begin(), magic.end());
  put_u32(out, version);
  put_u64(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes, std::string_view magic) {
  if (bytes.size() < 16) fail(ErrorKind::Format, "file too short for a header");
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    fail(ErrorKind::Format, "bad magic: expected " + std::string(magic));
  }
  Frame frame;
  frame.version = get_u32(bytes.data() + 4);
  std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) {
    fail(ErrorKind::Corruption, "header length exceeds file size");
  }
  frame.header.assign(reinterpret_cast<const char*>(bytes.data() + 16), header_len);
  frame.payload = bytes.subspan(16 + header_len);
  return frame;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::Io, "read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace moee::detail
