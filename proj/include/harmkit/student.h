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

#ifndef HARMKIT_STUDENT_H_
#define HARMKIT_STUDENT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harmkit/category.h"
#include "harmkit/synthgen.h"

namespace harmkit {

struct SparseVector {
  std::vector<uint32_t> indices;  // strictly increasing
  std::vector<double> values;

  bool empty() const { return indices.empty(); }
  double Sum() const;
  bool operator==(const SparseVector&) const = default;
};

// Hashed character n-grams over Unicode scalars.
struct FeatureExtractor {
  std::vector<int> orders = {1, 2, 3};
  uint32_t dim = 1u << 18;
  uint64_t seed = 0;

  // Counts per hashed n-gram. Throws kValidation on invalid UTF-8.
  SparseVector Featurize(std::string_view text) const;
  uint32_t HashNgram(std::string_view ngram) const;
  void Validate() const;

  bool operator==(const FeatureExtractor&) const = default;
};

struct TrainHyper {
  int epochs = 5;
  double lr = 0.1;
  size_t batch_size = 32;
  double l2 = 1e-5;
  uint64_t seed = 0;
};

// Softmax regression over hashed features. Inputs are reweighted by an
// inverse document frequency fitted on the training records and scaled to
// unit L2 norm before the linear layer.
class LinearModel {
 public:
  LinearModel() = default;
  explicit LinearModel(FeatureExtractor fx);

  const FeatureExtractor& extractor() const { return fx_; }
  // Row-major, kNumCategories x dim.
  const std::vector<double>& weights() const { return w_; }
  std::vector<double>& mutable_weights() { return w_; }
  const std::array<double, kNumCategories>& bias() const { return b_; }
  std::array<double, kNumCategories>& mutable_bias() { return b_; }

  double Weight(Category c, uint32_t feature) const;
  double& MutableWeight(Category c, uint32_t feature);

  // Fits idf = ln((N + 1) / (df + 1)) over the given documents.
  void FitIdf(std::span<const SparseVector> docs);
  double Idf(uint32_t feature) const;

  // Counts -> idf-weighted unit vector (zero stays zero).
  SparseVector Transform(const SparseVector& counts) const;
  SparseVector Encode(std::string_view text) const { return Transform(fx_.Featurize(text)); }

  std::array<double, kNumCategories> Logits(const SparseVector& x) const;
  std::array<double, kNumCategories> Probabilities(const SparseVector& x) const;

  bool AllFinite() const;

  Json metadata;
  std::vector<double> loss_trace;

  bool operator==(const LinearModel& o) const {
    return fx_ == o.fx_ && w_ == o.w_ && b_ == o.b_ && idf_indices_ == o.idf_indices_ &&
           idf_values_ == o.idf_values_ && default_idf_ == o.default_idf_;
  }

 private:
  friend Json ModelToJson(const LinearModel& m);
  friend LinearModel ModelFromJson(const Json& j);

  FeatureExtractor fx_;
  std::vector<double> w_;
  std::array<double, kNumCategories> b_{};
  // Sorted feature -> idf; features never seen in training get default_idf_.
  std::vector<uint32_t> idf_indices_;
  std::vector<double> idf_values_;
  double default_idf_ = 1.0;
};

std::array<double, kNumCategories> Softmax(const std::array<double, kNumCategories>& z);

struct Example {
  SparseVector x;  // transformed
  Category label;
};

// Per-example weights 1/(|C| * N_c) over the represented categories.
std::vector<double> CategoryBalancedWeights(std::span<const Example> data);

// Sum_i w_i * -log p(label_i | x_i) + (l2 / 2) * ||W||^2.
double Objective(const LinearModel& m, std::span<const Example> data,
                 std::span<const double> weights, double l2);

Category RecordCategory(const SftRecord& r);

// Minibatch SGD from zero weights; loss_trace[0] is the initial objective
// and entry e the objective after epoch e. Throws kValidation for fewer than
// two represented categories or an unknown target.
LinearModel Train(std::span<const SftRecord> records, const FeatureExtractor& fx,
                  const TrainHyper& hyper);

struct StudentPrediction {
  Category category;
  std::array<double, kNumCategories> probabilities;
};
// Argmax, ties by category order.
StudentPrediction Predict(const LinearModel& m, std::string_view text);

// Largest relative error between the analytic gradient of the record's
// cross-entropy and central differences, over up to `max_entries` weight
// entries of the record's active features plus every bias.
double GradCheck(const LinearModel& m, const SftRecord& record, double epsilon,
                 size_t max_entries = 64, uint64_t seed = 0);

Json ModelToJson(const LinearModel& m);
LinearModel ModelFromJson(const Json& j);
void SaveModel(const LinearModel& m, const std::filesystem::path& path);
LinearModel LoadModel(const std::filesystem::path& path);

}  // namespace harmkit

#endif  // HARMKIT_STUDENT_H_
