// SPDX-License-Identifier: Apache-2.0
//
// Small helpers shared by the unit tests.

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "moee/error.hpp"

namespace moee::test {

// A scratch directory removed when the fixture goes away.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("moee-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace moee::test

// Asserts that `stmt` throws moee::Error of the given kind.
#define EXPECT_MOEE_ERROR(stmt, kind_)                                         \
  do {                                                                         \
    try {                                                                      \
      stmt;                                                                    \
      ADD_FAILURE() << "expected " << moee::to_string(kind_) << " from " #stmt; \
    } catch (const moee::Error& e) {                                           \
      EXPECT_EQ(e.kind(), kind_) << e.what();                                  \
    }                                                                          \
  } while (0)
