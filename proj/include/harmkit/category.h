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

#ifndef HARMKIT_CATEGORY_H_
#define HARMKIT_CATEGORY_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace harmkit {

// The six moderation categories. Enumerator order is the label order of the
// detection prompt and is used for every tie-break in the toolkit.
enum class Category : int {
  kGambling = 0,
  kPornography = 1,
  kAbuse = 2,
  kFraud = 3,
  kIllicitAds = 4,
  kNonViolation = 5,
};

inline constexpr size_t kNumCategories = 6;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kGambling, Category::kPornography, Category::kAbuse,
    Category::kFraud,    Category::kIllicitAds,  Category::kNonViolation};

inline constexpr std::array<Category, kNumCategories - 1> kViolationCategories = {
    Category::kGambling, Category::kPornography, Category::kAbuse,
    Category::kFraud, Category::kIllicitAds};

constexpr size_t Index(Category c) { return static_cast<size_t>(c); }

// "Gambling", "IllicitAds", ...
std::string_view EnglishName(Category c);
// "博彩", "低俗色情", "谩骂引战", "欺诈", "黑产广告", "不违规"
std::string_view ChineseLabel(Category c);

// Accepts either the English enum name or the Chinese label.
std::optional<Category> ParseCategoryName(std::string_view name);

constexpr bool IsViolation(Category c) { return c != Category::kNonViolation; }

}  // namespace harmkit

#endif  // HARMKIT_CATEGORY_H_
