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

#ifndef HARMKIT_CORPUS_H_
#define HARMKIT_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "harmkit/category.h"
#include "harmkit/common.h"

namespace harmkit {

struct Sample {
  std::string id;
  std::string text;
  Category label = Category::kNonViolation;
  std::string source;
  std::map<std::string, std::string> metadata;

  bool operator==(const Sample&) const = default;
};

// An immutable, ordered collection of samples with a per-category index.
class Corpus {
 public:
  Corpus() = default;
  // Throws kValidation on duplicate ids, empty text or invalid UTF-8.
  Corpus(std::string name, std::vector<Sample> samples);

  const std::string& name() const { return name_; }
  const std::vector<Sample>& samples() const { return samples_; }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  // Positions into samples(), in corpus order.
  const std::vector<size_t>& IndicesOf(Category c) const {
    return by_category_[Index(c)];
  }
  size_t CountOf(Category c) const { return IndicesOf(c).size(); }
  const Sample* Find(const std::string& id) const;

 private:
  std::string name_;
  std::vector<Sample> samples_;
  std::array<std::vector<size_t>, kNumCategories> by_category_;
  std::map<std::string, size_t> by_id_;
};

struct IngestError {
  size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  Corpus corpus;
  std::vector<IngestError> errors;
};

// One JSON object per line: {"id"?, "text", "label", "source"?, "metadata"?}.
// Malformed lines are reported and skipped; an unreadable file throws kIo.
IngestResult IngestJsonl(const std::filesystem::path& path,
                         const std::string& default_source);
IngestResult IngestJsonlText(std::string_view text, std::string name,
                             const std::string& default_source);

Json SampleToJson(const Sample& sample);
// Labels are written as the English name plus a "label_zh" field.
std::string ExportJsonl(const Corpus& corpus);
void WriteJsonl(const Corpus& corpus, const std::filesystem::path& path);

// Keeps the first occurrence of each byte-identical text within a category.
Corpus Deduplicate(const Corpus& corpus);

// Exactly m samples from every category present in the corpus, uniformly
// without replacement. Output is grouped by category (enum order) and keeps
// corpus order inside each group. Throws kShortfall naming every category
// below m.
Corpus BalancedSample(const Corpus& corpus, size_t m, uint64_t seed);

}  // namespace harmkit

#endif  // HARMKIT_CORPUS_H_
