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

#ifndef HARMKIT_CLUSTERING_H_
#define HARMKIT_CLUSTERING_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "harmkit/common.h"

namespace harmkit {

using Vector = std::vector<double>;

// Sentence embeddings keyed by sample id, in file order.
struct EmbeddingSet {
  std::vector<std::string> ids;
  std::vector<Vector> vectors;
  size_t dim = 0;

  size_t size() const { return ids.size(); }
};

// JSONL: {"id": str, "vector": [float, ...]}. Rejects missing ids, duplicate
// ids, non-finite entries and ragged dimensions (kValidation, naming the
// record).
EmbeddingSet LoadEmbeddings(const std::filesystem::path& path);
EmbeddingSet ParseEmbeddings(std::string_view jsonl);
std::string ExportEmbeddings(const EmbeddingSet& set);

struct KMeansOptions {
  size_t k = 100;
  int max_iter = 300;
  // Stop once the largest centroid shift, relative to the largest centroid
  // norm, falls below tol.
  double tol = 1e-6;
  uint64_t seed = 0;
};

struct ClusterModel {
  std::vector<Vector> centroids;
  // Parallel to the input points.
  std::vector<std::string> ids;
  std::vector<size_t> assignments;
  double inertia = 0.0;
  int iterations_run = 0;
  // Inertia after each assignment step.
  std::vector<double> inertia_trace;

  size_t k() const { return centroids.size(); }
};

double SquaredDistance(const Vector& a, const Vector& b);

// Index of the nearest centroid; ties go to the lowest index.
size_t NearestCentroid(const Vector& point, const std::vector<Vector>& centroids);

// k-means++ seeding.
std::vector<Vector> KMeansPlusPlusInit(const std::vector<Vector>& points,
                                       size_t k, uint64_t seed);

// Lloyd iterations from the given centroids. Empty clusters are reseeded to
// the point farthest from its assigned centroid.
ClusterModel LloydFromCentroids(const std::vector<Vector>& points,
                                std::vector<Vector> centroids,
                                const KMeansOptions& options);

// Throws kValidation when points is empty, k == 0, k > n or dimensions differ.
ClusterModel KMeans(const std::vector<Vector>& points,
                    const KMeansOptions& options);
ClusterModel KMeans(const EmbeddingSet& set, const KMeansOptions& options);

// Picks min(per_cluster, |cluster|) members of every non-empty cluster,
// uniformly without replacement. Output order is (cluster index, selection
// order). Uses the model ids, or decimal point indices when ids are absent.
std::vector<std::string> ClusterSample(const ClusterModel& model,
                                       size_t per_cluster, uint64_t seed);

Json ClusterModelToJson(const ClusterModel& model);
ClusterModel ClusterModelFromJson(const Json& json);

}  // namespace harmkit

#endif  // HARMKIT_CLUSTERING_H_
