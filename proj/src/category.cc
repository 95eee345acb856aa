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

#include "harmkit/category.h"

namespace harmkit {

namespace {

constexpr std::array<std::string_view, kNumCategories> kEnglish = {
    "Gambling", "Pornography", "Abuse", "Fraud", "IllicitAds", "NonViolation"};

constexpr std::array<std::string_view, kNumCategories> kChinese = {
    "博彩", "低俗色情", "谩骂引战", "欺诈", "黑产广告", "不违规"};

}  // namespace

std::string_view EnglishName(Category c) { return kEnglish[Index(c)]; }

std::string_view ChineseLabel(Category c) { return kChinese[Index(c)]; }

std::optional<Category> ParseCategoryName(std::string_view name) {
  for (Category c : kAllCategories) {
    if (name == kEnglish[Index(c)] || name == kChinese[Index(c)]) return c;
  }
  return std::nullopt;
}

}  // namespace harmkit
