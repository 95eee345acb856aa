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

#include "harmkit/corpus.h"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace harmkit {

Corpus::Corpus(std::string name, std::vector<Sample> samples)
    : name_(std::move(name)), samples_(std::move(samples)) {
  for (size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.text.empty()) {
      throw Error(ErrorCode::kValidation, "sample text is empty",
                  Json{{"id", s.id}});
    }
    if (!IsValidUtf8(s.text)) {
      throw Error(ErrorCode::kValidation, "sample text is not valid UTF-8",
                  Json{{"id", s.id}});
    }
    if (!by_id_.emplace(s.id, i).second) {
      throw Error(ErrorCode::kValidation, "duplicate sample id: " + s.id,
                  Json{{"id", s.id}});
    }
    by_category_[Index(s.label)].push_back(i);
  }
}

const Sample* Corpus::Find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &samples_[it->second];
}

namespace {

// Parses one line into a sample; returns an error message on failure.
std::optional<std::string> ParseSampleLine(const std::string& line,
                                           size_t line_number,
                                           const std::string& default_source,
                                           Sample& out) {
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const Json::parse_error&) {
    return "not valid JSON";
  }
  if (!obj.is_object()) return "line is not a JSON object";

  auto text = obj.find("text");
  if (text == obj.end() || !text->is_string()) return "missing string field \"text\"";
  out.text = text->get<std::string>();
  if (out.text.empty()) return "empty text";
  if (!IsValidUtf8(out.text)) return "text is not valid UTF-8";

  auto label = obj.find("label");
  if (label == obj.end() || !label->is_string()) return "missing string field \"label\"";
  auto category = ParseCategoryName(label->get<std::string>());
  if (!category) return "unknown label: " + label->get<std::string>();
  out.label = *category;

  out.source = default_source;
  if (auto src = obj.find("source"); src != obj.end()) {
    if (!src->is_string()) return "\"source\" must be a string";
    out.source = src->get<std::string>();
  }

  if (auto id = obj.find("id"); id != obj.end()) {
    if (!id->is_string() || id->get<std::string>().empty()) {
      return "\"id\" must be a non-empty string";
    }
    out.id = id->get<std::string>();
  } else {
    out.id = out.source + ":" + std::to_string(line_number);
  }

  out.metadata.clear();
  if (auto meta = obj.find("metadata"); meta != obj.end()) {
    if (!meta->is_object()) return "\"metadata\" must be an object";
    for (auto& [key, value] : meta->items()) {
      if (!value.is_string()) return "metadata value for \"" + key + "\" must be a string";
      out.metadata.emplace(key, value.get<std::string>());
    }
  }
  return std::nullopt;
}

}  // namespace

IngestResult IngestJsonlText(std::string_view text, std::string name,
                             const std::string& default_source) {
  IngestResult result;
  std::vector<Sample> samples;
  std::set<std::string> seen_ids;
  const auto lines = SplitLines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    const size_t line_number = i + 1;
    if (Trim(lines[i]).empty()) continue;
    Sample sample;
    if (auto err = ParseSampleLine(lines[i], line_number, default_source, sample)) {
      result.errors.push_back({line_number, *err});
      continue;
    }
    if (!seen_ids.insert(sample.id).second) {
      result.errors.push_back({line_number, "duplicate id: " + sample.id});
      continue;
    }
    samples.push_back(std::move(sample));
  }
  result.corpus = Corpus(std::move(name), std::move(samples));
  return result;
}

IngestResult IngestJsonl(const std::filesystem::path& path,
                         const std::string& default_source) {
  return IngestJsonlText(ReadFile(path), path.stem().string(), default_source);
}

namespace {

OrderedJson SampleToOrderedJson(const Sample& s) {
  OrderedJson obj;
  obj["id"] = s.id;
  obj["text"] = s.text;
  obj["label"] = EnglishName(s.label);
  obj["label_zh"] = ChineseLabel(s.label);
  obj["source"] = s.source;
  OrderedJson meta = OrderedJson::object();
  for (const auto& [k, v] : s.metadata) meta[k] = v;
  obj["metadata"] = std::move(meta);
  return obj;
}

}  // namespace

Json SampleToJson(const Sample& sample) {
  return Json::parse(SampleToOrderedJson(sample).dump());
}

std::string ExportJsonl(const Corpus& corpus) {
  std::string out;
  for (const Sample& s : corpus.samples()) {
    out += SampleToOrderedJson(s).dump();
    out += '\n';
  }
  return out;
}

void WriteJsonl(const Corpus& corpus, const std::filesystem::path& path) {
  WriteFile(path, ExportJsonl(corpus));
}

Corpus Deduplicate(const Corpus& corpus) {
  std::array<std::unordered_set<std::string_view>, kNumCategories> seen;
  std::vector<Sample> kept;
  for (const Sample& s : corpus.samples()) {
    if (seen[Index(s.label)].insert(s.text).second) kept.push_back(s);
  }
  return Corpus(corpus.name(), std::move(kept));
}

Corpus BalancedSample(const Corpus& corpus, size_t m, uint64_t seed) {
  if (m == 0) {
    throw Error(ErrorCode::kValidation, "sample size m must be positive");
  }
  Json deficits = Json::array();
  for (Category c : kAllCategories) {
    const size_t count = corpus.CountOf(c);
    if (count > 0 && count < m) {
      deficits.push_back(
          {{"category", EnglishName(c)}, {"count", count}, {"required", m}});
    }
  }
  if (!deficits.empty()) {
    std::string message = "not enough samples for balanced sampling:";
    for (const auto& d : deficits) {
      message += " " + d["category"].get<std::string>() + "/" +
                 std::to_string(d["count"].get<size_t>());
    }
    throw Error(ErrorCode::kShortfall, message, Json{{"deficits", deficits}});
  }

  std::vector<Sample> chosen;
  for (Category c : kAllCategories) {
    const auto& idx = corpus.IndicesOf(c);
    if (idx.empty()) continue;
    Rng rng(DeriveSeed(seed, EnglishName(c)));
    auto picks = SampleWithoutReplacement(idx.size(), m, rng);
    std::sort(picks.begin(), picks.end());
    for (size_t p : picks) chosen.push_back(corpus.samples()[idx[p]]);
  }
  return Corpus(corpus.name(), std::move(chosen));
}

}  // namespace harmkit
