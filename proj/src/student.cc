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

#include "harmkit/student.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace harmkit {

namespace {

constexpr int kModelFormatVersion = 1;

size_t Offset(Category c, uint32_t feature, uint32_t dim) {
  return static_cast<size_t>(Index(c)) * dim + feature;
}

double RecordLoss(const LinearModel& m, const SparseVector& x, Category label) {
  const auto z = m.Logits(x);
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return -(z[Index(label)] - zmax - std::log(sum));
}

}  // namespace

double SparseVector::Sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

void FeatureExtractor::Validate() const {
  if (orders.empty()) throw Error(ErrorCode::kConfig, "n-gram orders are empty");
  for (int n : orders) {
    if (n <= 0) throw Error(ErrorCode::kConfig, "n-gram orders must be positive");
  }
  if (dim == 0) throw Error(ErrorCode::kConfig, "feature dimension must be positive");
}

uint32_t FeatureExtractor::HashNgram(std::string_view ngram) const {
  return static_cast<uint32_t>(DeriveSeed(seed, ngram) % dim);
}

SparseVector FeatureExtractor::Featurize(std::string_view text) const {
  if (!IsValidUtf8(text)) throw Error(ErrorCode::kValidation, "text is not valid UTF-8");
  const auto chars = DecodeUtf8(text);
  std::map<uint32_t, double> counts;
  for (int n : orders) {
    const size_t order = static_cast<size_t>(n);
    for (size_t i = 0; i + order <= chars.size(); ++i) {
      const size_t begin = chars[i].offset;
      const size_t end = chars[i + order - 1].offset + chars[i + order - 1].length;
      counts[HashNgram(text.substr(begin, end - begin))] += 1.0;
    }
  }
  SparseVector v;
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [k, c] : counts) {
    v.indices.push_back(k);
    v.values.push_back(c);
  }
  return v;
}

LinearModel::LinearModel(FeatureExtractor fx) : fx_(std::move(fx)) {
  fx_.Validate();
  w_.assign(kNumCategories * static_cast<size_t>(fx_.dim), 0.0);
}

double LinearModel::Weight(Category c, uint32_t feature) const {
  return w_[Offset(c, feature, fx_.dim)];
}

double& LinearModel::MutableWeight(Category c, uint32_t feature) {
  return w_[Offset(c, feature, fx_.dim)];
}

void LinearModel::FitIdf(std::span<const SparseVector> docs) {
  std::map<uint32_t, int64_t> df;
  for (const auto& d : docs) {
    for (uint32_t k : d.indices) ++df[k];
  }
  const double n = static_cast<double>(docs.size());
  idf_indices_.clear();
  idf_values_.clear();
  for (const auto& [k, count] : df) {
    idf_indices_.push_back(k);
    idf_values_.push_back(std::log((n + 1.0) / (static_cast<double>(count) + 1.0)));
  }
  default_idf_ = std::log(n + 1.0);
}

double LinearModel::Idf(uint32_t feature) const {
  auto it = std::lower_bound(idf_indices_.begin(), idf_indices_.end(), feature);
  if (it == idf_indices_.end() || *it != feature) return default_idf_;
  return idf_values_[static_cast<size_t>(it - idf_indices_.begin())];
}

SparseVector LinearModel::Transform(const SparseVector& counts) const {
  SparseVector out;
  double norm2 = 0.0;
  for (size_t i = 0; i < counts.indices.size(); ++i) {
    const double v = counts.values[i] * Idf(counts.indices[i]);
    if (v == 0.0) continue;
    out.indices.push_back(counts.indices[i]);
    out.values.push_back(v);
    norm2 += v * v;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : out.values) v *= inv;
  }
  return out;
}

std::array<double, kNumCategories> LinearModel::Logits(const SparseVector& x) const {
  std::array<double, kNumCategories> z = b_;
  for (size_t c = 0; c < kNumCategories; ++c) {
    const double* row = w_.data() + c * static_cast<size_t>(fx_.dim);
    for (size_t i = 0; i < x.indices.size(); ++i) z[c] += row[x.indices[i]] * x.values[i];
  }
  return z;
}

std::array<double, kNumCategories> LinearModel::Probabilities(const SparseVector& x) const {
  return Softmax(Logits(x));
}

bool LinearModel::AllFinite() const {
  return std::all_of(w_.begin(), w_.end(), [](double v) { return std::isfinite(v); }) &&
         std::all_of(b_.begin(), b_.end(), [](double v) { return std::isfinite(v); });
}

std::array<double, kNumCategories> Softmax(const std::array<double, kNumCategories>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::array<double, kNumCategories> p{};
  double sum = 0.0;
  for (size_t c = 0; c < kNumCategories; ++c) {
    p[c] = std::exp(z[c] - zmax);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> CategoryBalancedWeights(std::span<const Example> data) {
  std::array<size_t, kNumCategories> counts{};
  for (const auto& e : data) ++counts[Index(e.label)];
  const double represented = static_cast<double>(
      std::count_if(counts.begin(), counts.end(), [](size_t n) { return n > 0; }));
  std::vector<double> w;
  w.reserve(data.size());
  for (const auto& e : data) {
    w.push_back(1.0 / (represented * static_cast<double>(counts[Index(e.label)])));
  }
  return w;
}

double Objective(const LinearModel& m, std::span<const Example> data,
                 std::span<const double> weights, double l2) {
  double loss = 0.0;
  for (size_t i = 0; i < data.size(); ++i) loss += weights[i] * RecordLoss(m, data[i].x, data[i].label);
  if (l2 > 0.0) {
    double sq = 0.0;
    for (double v : m.weights()) sq += v * v;
    loss += 0.5 * l2 * sq;
  }
  return loss;
}

Category RecordCategory(const SftRecord& r) {
  auto c = ParseCategoryName(r.target);
  if (!c) {
    throw Error(ErrorCode::kValidation, "unknown SFT target: " + r.target,
                Json{{"provenance", r.provenance}});
  }
  return *c;
}

LinearModel Train(std::span<const SftRecord> records, const FeatureExtractor& fx,
                  const TrainHyper& hyper) {
  if (hyper.epochs < 0 || !(hyper.lr > 0.0) || hyper.batch_size == 0 || hyper.l2 < 0.0) {
    throw Error(ErrorCode::kConfig, "invalid training hyperparameters");
  }
  if (records.empty()) throw Error(ErrorCode::kValidation, "no training records");

  LinearModel model(fx);
  std::vector<SparseVector> counts;
  counts.reserve(records.size());
  std::vector<Category> labels;
  std::array<size_t, kNumCategories> per{};
  for (const auto& r : records) {
    labels.push_back(RecordCategory(r));
    ++per[Index(labels.back())];
    counts.push_back(fx.Featurize(r.input));
  }
  if (std::count_if(per.begin(), per.end(), [](size_t n) { return n > 0; }) < 2) {
    throw Error(ErrorCode::kValidation, "training needs at least two represented categories");
  }
  model.FitIdf(counts);

  std::vector<Example> data;
  data.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) data.push_back({model.Transform(counts[i]), labels[i]});
  const auto weights = CategoryBalancedWeights(data);
  const double n = static_cast<double>(data.size());

  model.loss_trace.push_back(Objective(model, data, weights, hyper.l2));
  Rng rng(hyper.seed);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto& w = model.mutable_weights();
  auto& b = model.mutable_bias();
  const size_t dim = fx.dim;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.Shuffle(order);
    for (size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const size_t stop = std::min(order.size(), start + hyper.batch_size);
      // Unbiased estimate of the full weighted gradient.
      const double scale = n / static_cast<double>(stop - start);
      std::array<std::vector<double>, kNumCategories> coef;
      for (auto& v : coef) v.resize(stop - start);
      std::array<double, kNumCategories> grad_b{};
      for (size_t k = start; k < stop; ++k) {
        const Example& e = data[order[k]];
        const auto p = model.Probabilities(e.x);
        for (size_t c = 0; c < kNumCategories; ++c) {
          const double g = scale * weights[order[k]] *
                           (p[c] - (c == Index(e.label) ? 1.0 : 0.0));
          coef[c][k - start] = g;
          grad_b[c] += g;
        }
      }
      if (hyper.l2 > 0.0) {
        const double decay = 1.0 - hyper.lr * hyper.l2;
        for (double& v : w) v *= decay;
      }
      for (size_t k = start; k < stop; ++k) {
        const Example& e = data[order[k]];
        for (size_t c = 0; c < kNumCategories; ++c) {
          const double g = coef[c][k - start];
          if (g == 0.0) continue;
          double* row = w.data() + c * dim;
          for (size_t i = 0; i < e.x.indices.size(); ++i) {
            row[e.x.indices[i]] -= hyper.lr * g * e.x.values[i];
          }
        }
      }
      for (size_t c = 0; c < kNumCategories; ++c) b[c] -= hyper.lr * grad_b[c];
    }
    model.loss_trace.push_back(Objective(model, data, weights, hyper.l2));
  }
  if (!model.AllFinite()) throw Error(ErrorCode::kValidation, "training diverged");

  model.metadata = Json{{"records", records.size()},
                        {"hyper",
                         {{"epochs", hyper.epochs},
                          {"lr", hyper.lr},
                          {"batch_size", hyper.batch_size},
                          {"l2", hyper.l2},
                          {"seed", hyper.seed}}}};
  return model;
}

StudentPrediction Predict(const LinearModel& m, std::string_view text) {
  StudentPrediction out;
  out.probabilities = m.Probabilities(m.Encode(text));
  size_t best = 0;
  for (size_t c = 1; c < kNumCategories; ++c) {
    if (out.probabilities[c] > out.probabilities[best]) best = c;
  }
  out.category = kAllCategories[best];
  return out;
}

double GradCheck(const LinearModel& m, const SftRecord& record, double epsilon,
                 size_t max_entries, uint64_t seed) {
  if (!(epsilon > 0.0) || epsilon > 1e-2) {
    throw Error(ErrorCode::kValidation, "epsilon must lie in (0, 1e-2]");
  }
  const Category label = RecordCategory(record);
  const SparseVector x = m.Encode(record.input);
  const auto p = m.Probabilities(x);

  struct Entry {
    bool is_bias;
    size_t c;
    size_t i;  // position in x for weights
  };
  std::vector<Entry> entries;
  for (size_t c = 0; c < kNumCategories; ++c) entries.push_back({true, c, 0});
  std::vector<Entry> weight_entries;
  for (size_t c = 0; c < kNumCategories; ++c) {
    for (size_t i = 0; i < x.indices.size(); ++i) weight_entries.push_back({false, c, i});
  }
  Rng rng(seed);
  const size_t take = std::min(max_entries, weight_entries.size());
  for (size_t k : SampleWithoutReplacement(weight_entries.size(), take, rng)) {
    entries.push_back(weight_entries[k]);
  }

  LinearModel probe = m;
  double worst = 0.0;
  for (const Entry& e : entries) {
    const double onehot = e.c == Index(label) ? 1.0 : 0.0;
    const double analytic = (p[e.c] - onehot) * (e.is_bias ? 1.0 : x.values[e.i]);
    double& slot = e.is_bias ? probe.mutable_bias()[e.c]
                             : probe.MutableWeight(kAllCategories[e.c], x.indices[e.i]);
    const double saved = slot;
    slot = saved + epsilon;
    const double up = RecordLoss(probe, x, label);
    slot = saved - epsilon;
    const double down = RecordLoss(probe, x, label);
    slot = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(analytic - numeric) / denom);
  }
  return worst;
}

Json ModelToJson(const LinearModel& m) {
  Json rows = Json::array();
  const size_t dim = m.fx_.dim;
  for (Category c : kAllCategories) {
    std::vector<uint32_t> idx;
    std::vector<double> val;
    const double* row = m.w_.data() + Index(c) * dim;
    for (size_t i = 0; i < dim; ++i) {
      if (row[i] != 0.0) {
        idx.push_back(static_cast<uint32_t>(i));
        val.push_back(row[i]);
      }
    }
    rows.push_back({{"category", EnglishName(c)}, {"indices", idx}, {"values", val}});
  }
  return Json{{"format", "harmkit-linear-model"},
              {"format_version", kModelFormatVersion},
              {"extractor", {{"orders", m.fx_.orders}, {"dim", m.fx_.dim}, {"seed", m.fx_.seed}}},
              {"bias", m.b_},
              {"idf",
               {{"default", m.default_idf_},
                {"indices", m.idf_indices_},
                {"values", m.idf_values_}}},
              {"weights", rows},
              {"loss_trace", m.loss_trace},
              {"metadata", m.metadata.is_null() ? Json::object() : m.metadata}};
}

LinearModel ModelFromJson(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "harmkit-linear-model" ||
        j.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kValidation, "unsupported model format");
    }
    FeatureExtractor fx;
    fx.orders = j.at("extractor").at("orders").get<std::vector<int>>();
    fx.dim = j.at("extractor").at("dim").get<uint32_t>();
    fx.seed = j.at("extractor").at("seed").get<uint64_t>();
    LinearModel m(fx);
    m.b_ = j.at("bias").get<std::array<double, kNumCategories>>();
    m.default_idf_ = j.at("idf").at("default").get<double>();
    m.idf_indices_ = j.at("idf").at("indices").get<std::vector<uint32_t>>();
    m.idf_values_ = j.at("idf").at("values").get<std::vector<double>>();
    if (m.idf_indices_.size() != m.idf_values_.size() ||
        !std::is_sorted(m.idf_indices_.begin(), m.idf_indices_.end())) {
      throw Error(ErrorCode::kValidation, "malformed idf table");
    }
    for (const Json& row : j.at("weights")) {
      auto c = ParseCategoryName(row.at("category").get<std::string>());
      if (!c) throw Error(ErrorCode::kValidation, "unknown category in model weights");
      const auto idx = row.at("indices").get<std::vector<uint32_t>>();
      const auto val = row.at("values").get<std::vector<double>>();
      if (idx.size() != val.size()) throw Error(ErrorCode::kValidation, "ragged weight row");
      for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= fx.dim) throw Error(ErrorCode::kValidation, "weight index out of range");
        m.MutableWeight(*c, idx[i]) = val[i];
      }
    }
    m.loss_trace = j.value("loss_trace", std::vector<double>{});
    m.metadata = j.value("metadata", Json::object());
    if (!m.AllFinite()) throw Error(ErrorCode::kValidation, "model has non-finite parameters");
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed model: ") + e.what());
  }
}

void SaveModel(const LinearModel& m, const std::filesystem::path& path) {
  WriteFile(path, ModelToJson(m).dump() + "\n");
}

LinearModel LoadModel(const std::filesystem::path& path) {
  return ModelFromJson(ParseJsonFile(path));
}

}  // namespace harmkit
