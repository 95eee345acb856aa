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

#include "harmkit/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace harmkit {

EmbeddingSet ParseEmbeddings(std::string_view jsonl) {
  EmbeddingSet set;
  std::set<std::string> seen;
  const auto lines = SplitLines(jsonl);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    const size_t line_number = i + 1;
    Json obj;
    try {
      obj = Json::parse(lines[i]);
    } catch (const Json::exception&) {
      throw Error(ErrorCode::kValidation, "malformed embedding record",
                  Json{{"line", line_number}});
    }
    auto id = obj.find("id");
    if (!obj.is_object() || id == obj.end() || !id->is_string() ||
        id->get<std::string>().empty()) {
      throw Error(ErrorCode::kValidation,
                  "embedding record without id at line " + std::to_string(line_number),
                  Json{{"line", line_number}});
    }
    const std::string name = id->get<std::string>();
    auto vec = obj.find("vector");
    if (vec == obj.end() || !vec->is_array() || vec->empty()) {
      throw Error(ErrorCode::kValidation, "embedding " + name + " has no vector",
                  Json{{"id", name}, {"line", line_number}});
    }
    Vector values;
    values.reserve(vec->size());
    for (const auto& v : *vec) {
      if (!v.is_number()) {
        throw Error(ErrorCode::kValidation,
                    "embedding " + name + " has a non-numeric entry",
                    Json{{"id", name}, {"line", line_number}});
      }
      const double x = v.get<double>();
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kValidation,
                    "embedding " + name + " has a non-finite entry",
                    Json{{"id", name}, {"line", line_number}});
      }
      values.push_back(x);
    }
    if (set.dim == 0) {
      set.dim = values.size();
    } else if (values.size() != set.dim) {
      throw Error(ErrorCode::kValidation,
                  "dimension mismatch for embedding " + name + ": expected " +
                      std::to_string(set.dim) + ", got " +
                      std::to_string(values.size()),
                  Json{{"id", name}, {"expected", set.dim}, {"got", values.size()}});
    }
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::kValidation, "duplicate embedding id " + name,
                  Json{{"id", name}});
    }
    set.ids.push_back(name);
    set.vectors.push_back(std::move(values));
  }
  return set;
}

EmbeddingSet LoadEmbeddings(const std::filesystem::path& path) {
  // JSON parsing maps NaN/Inf literals to parse errors, reported above as
  // malformed records.
  return ParseEmbeddings(ReadFile(path));
}

std::string ExportEmbeddings(const EmbeddingSet& set) {
  std::string out;
  for (size_t i = 0; i < set.size(); ++i) {
    OrderedJson obj;
    obj["id"] = set.ids[i];
    obj["vector"] = set.vectors[i];
    out += obj.dump();
    out += '\n';
  }
  return out;
}

double SquaredDistance(const Vector& a, const Vector& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

size_t NearestCentroid(const Vector& point, const std::vector<Vector>& centroids) {
  size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < centroids.size(); ++j) {
    const double d = SquaredDistance(point, centroids[j]);
    if (d < best_dist) {
      best_dist = d;
      best = j;
    }
  }
  return best;
}

std::vector<Vector> KMeansPlusPlusInit(const std::vector<Vector>& points,
                                       size_t k, uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.UniformIndex(points.size())]);
  std::vector<double> nearest(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    nearest[i] = SquaredDistance(points[i], centroids[0]);
  }
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    size_t pick = points.size() - 1;
    if (total <= 0.0) {
      pick = rng.UniformIndex(points.size());
    } else {
      const double target = rng.UniformDouble() * total;
      double acc = 0.0;
      for (size_t i = 0; i < points.size(); ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
    for (size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points[i], centroids.back()));
    }
  }
  return centroids;
}

namespace {

// Assigns every point to its nearest centroid, reseeding empty clusters.
// Returns the resulting inertia.
double AssignPoints(const std::vector<Vector>& points,
                    std::vector<Vector>& centroids,
                    std::vector<size_t>& assignments) {
  const size_t k = centroids.size();
  for (size_t attempt = 0; attempt <= k; ++attempt) {
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < points.size(); ++i) {
      assignments[i] = NearestCentroid(points[i], centroids);
      ++counts[assignments[i]];
    }
    bool reseeded = false;
    std::vector<bool> taken(points.size(), false);
    for (size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      size_t farthest = points.size();
      double far_dist = 0.0;
      for (size_t i = 0; i < points.size(); ++i) {
        if (taken[i] || counts[assignments[i]] <= 1) continue;
        const double d = SquaredDistance(points[i], centroids[assignments[i]]);
        if (d > far_dist) {
          far_dist = d;
          farthest = i;
        }
      }
      if (farthest == points.size()) continue;  // nothing left to move
      taken[farthest] = true;
      --counts[assignments[farthest]];
      centroids[j] = points[farthest];
      reseeded = true;
    }
    if (!reseeded) break;
  }
  double inertia = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    inertia += SquaredDistance(points[i], centroids[assignments[i]]);
  }
  return inertia;
}

void ValidatePoints(const std::vector<Vector>& points, size_t k) {
  if (points.empty()) {
    throw Error(ErrorCode::kValidation, "kmeans: empty input");
  }
  if (k == 0 || k > points.size()) {
    throw Error(ErrorCode::kValidation,
                "kmeans: k must be in [1, n]; k=" + std::to_string(k) +
                    ", n=" + std::to_string(points.size()),
                Json{{"k", k}, {"n", points.size()}});
  }
  const size_t dim = points.front().size();
  for (const Vector& p : points) {
    if (p.size() != dim) {
      throw Error(ErrorCode::kValidation, "kmeans: ragged point dimensions");
    }
  }
}

}  // namespace

ClusterModel LloydFromCentroids(const std::vector<Vector>& points,
                                std::vector<Vector> centroids,
                                const KMeansOptions& options) {
  ValidatePoints(points, centroids.size());
  if (options.max_iter < 1) {
    throw Error(ErrorCode::kValidation, "kmeans: max_iter must be >= 1");
  }
  const size_t k = centroids.size();
  const size_t dim = points.front().size();

  ClusterModel model;
  model.assignments.assign(points.size(), 0);
  model.inertia_trace.push_back(AssignPoints(points, centroids, model.assignments));

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    std::vector<Vector> sums(k, Vector(dim, 0.0));
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < points.size(); ++i) {
      auto& sum = sums[model.assignments[i]];
      for (size_t d = 0; d < dim; ++d) sum[d] += points[i][d];
      ++counts[model.assignments[i]];
    }
    double max_shift = 0.0;
    double max_norm = 0.0;
    for (size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      Vector updated(dim);
      for (size_t d = 0; d < dim; ++d) {
        updated[d] = sums[j][d] / static_cast<double>(counts[j]);
      }
      max_shift = std::max(max_shift, std::sqrt(SquaredDistance(updated, centroids[j])));
      max_norm = std::max(max_norm, std::sqrt(SquaredDistance(updated, Vector(dim, 0.0))));
      centroids[j] = std::move(updated);
    }
    model.inertia_trace.push_back(AssignPoints(points, centroids, model.assignments));
    model.iterations_run = iter;
    if (max_shift <= options.tol * std::max(max_norm, 1e-12)) break;
  }

  model.centroids = std::move(centroids);
  model.inertia = model.inertia_trace.back();
  return model;
}

ClusterModel KMeans(const std::vector<Vector>& points,
                    const KMeansOptions& options) {
  ValidatePoints(points, options.k);
  return LloydFromCentroids(points, KMeansPlusPlusInit(points, options.k, options.seed),
                            options);
}

ClusterModel KMeans(const EmbeddingSet& set, const KMeansOptions& options) {
  ClusterModel model = KMeans(set.vectors, options);
  model.ids = set.ids;
  return model;
}

std::vector<std::string> ClusterSample(const ClusterModel& model,
                                       size_t per_cluster, uint64_t seed) {
  std::vector<std::vector<size_t>> members(model.k());
  for (size_t i = 0; i < model.assignments.size(); ++i) {
    members[model.assignments[i]].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::string> out;
  for (const auto& cluster : members) {
    if (cluster.empty()) continue;
    const size_t take = std::min(per_cluster, cluster.size());
    for (size_t p : SampleWithoutReplacement(cluster.size(), take, rng)) {
      const size_t point = cluster[p];
      out.push_back(model.ids.empty() ? std::to_string(point) : model.ids[point]);
    }
  }
  return out;
}

Json ClusterModelToJson(const ClusterModel& model) {
  Json assignments = Json::array();
  for (size_t i = 0; i < model.assignments.size(); ++i) {
    assignments.push_back(
        {{"id", model.ids.empty() ? std::to_string(i) : model.ids[i]},
         {"cluster", model.assignments[i]}});
  }
  return Json{{"k", model.k()},
              {"centroids", model.centroids},
              {"assignments", std::move(assignments)},
              {"inertia", model.inertia},
              {"iterations_run", model.iterations_run},
              {"inertia_trace", model.inertia_trace}};
}

ClusterModel ClusterModelFromJson(const Json& json) {
  try {
    ClusterModel model;
    model.centroids = json.at("centroids").get<std::vector<Vector>>();
    for (const auto& a : json.at("assignments")) {
      model.ids.push_back(a.at("id").get<std::string>());
      const auto cluster = a.at("cluster").get<size_t>();
      if (cluster >= model.centroids.size()) {
        throw Error(ErrorCode::kValidation, "assignment index out of range",
                    Json{{"id", model.ids.back()}});
      }
      model.assignments.push_back(cluster);
    }
    model.inertia = json.at("inertia").get<double>();
    model.iterations_run = json.value("iterations_run", 0);
    model.inertia_trace = json.value("inertia_trace", std::vector<double>{});
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed cluster model: ") + e.what());
  }
}

}  // namespace harmkit
