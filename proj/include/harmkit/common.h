// Copyright 2026 The harmkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HARMKIT_COMMON_H_
#define HARMKIT_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace harmkit {

inline constexpr std::string_view kVersion = "0.1.0";

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Error classes. The numeric values of the first four double as CLI exit
// codes.
enum class ErrorCode {
  kConfig = 2,
  kValidation = 3,
  kProvider = 4,
  kShortfall = 5,
  kConflict = 6,
  kNotFound = 7,
  kIo = 8,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, Json detail = Json::object())
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const Json& detail() const { return detail_; }

  // {code, message, detail}
  Json ToJson() const;

 private:
  ErrorCode code_;
  Json detail_;
};

// Seeded generator whose output sequence is fixed by the standard
// (mt19937_64), with bounded draws implemented here so results do not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }
  // Uniform in [0, n). n must be > 0.
  size_t UniformIndex(size_t n);
  // Uniform in [0, 1).
  double UniformDouble();
  double Gaussian();

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[UniformIndex(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Chooses k distinct indices from [0, n) uniformly; returned in selection
// order.
std::vector<size_t> SampleWithoutReplacement(size_t n, size_t k, Rng& rng);

// Derives an independent stream seed from a base seed and a salt.
uint64_t DeriveSeed(uint64_t seed, std::string_view salt);

// UTF-8 helpers.
bool IsValidUtf8(std::string_view s);
struct Utf8Char {
  char32_t scalar;
  size_t offset;  // byte offset of the first code unit
  size_t length;  // number of bytes
};
// Requires valid UTF-8.
std::vector<Utf8Char> DecodeUtf8(std::string_view s);
void AppendUtf8(char32_t scalar, std::string& out);

std::string_view Trim(std::string_view s);
std::string ToLowerAscii(std::string_view s);

uint64_t Fnv1a64(std::string_view data, uint64_t seed = 0);
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

std::string ReadFile(const std::filesystem::path& path);
// Writes through a temporary file and renames over the target.
void WriteFile(const std::filesystem::path& path, std::string_view contents);
// Splits on '\n', dropping a trailing '\r' from each line. A final empty
// segment (file ending in a newline) is not returned.
std::vector<std::string> SplitLines(std::string_view text);

Json ParseJsonFile(const std::filesystem::path& path);

}  // namespace harmkit

#endif  // HARMKIT_COMMON_H_
