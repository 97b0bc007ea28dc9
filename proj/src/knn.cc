// Copyright 2026 The Dejavu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dejavu/knn.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "dejavu/error.h"
#include "dejavu/parallel.h"

namespace dejavu {
namespace {

constexpr double kUnitNormTolerance = 1e-4;
constexpr double kDistributionTolerance = 1e-5;
constexpr std::size_t kQueryBlock = 128;
constexpr std::size_t kBaseBlock = 2048;

using RowMajorF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Worst-case relative error of a length-n dot product evaluated in any order
// with unit roundoff u: n*u / (1 - n*u).
double Gamma(std::size_t n, double unit_roundoff) {
  const double nu = static_cast<double>(n) * unit_roundoff;
  return nu / (1.0 - nu);
}

double L2Norm(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  return std::sqrt(sq);
}

struct Candidate {
  float score;
  std::uint32_t row;
};

struct ScoreGreater {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.score > b.score;
  }
};

}  // namespace

double ExactInnerProduct(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

KnnIndex::KnnIndex(EmbeddingMatrix base) : base_(std::move(base)) {
  if (!base_.normalized()) {
    throw Error(ErrorCode::kNotNormalized,
                "KNN index requires row-normalized embeddings");
  }
  if (base_.rows() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "index too large");
  }
  std::vector<std::uint32_t> order(base_.rows());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return base_.ids()[a] < base_.ids()[b];
  });
  id_rank_.resize(order.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;
  for (std::size_t i = 0; i < base_.rows(); ++i) {
    max_row_norm_ = std::max(max_row_norm_, L2Norm(base_.row(i)));
  }
}

void KnnIndex::CheckQuery(std::span<const float> query) const {
  if (query.size() != dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "query has dimension " + std::to_string(query.size()) +
                    ", index has " + std::to_string(dim()));
  }
  for (float v : query) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "query");
  }
  if (std::abs(L2Norm(query) - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorCode::kNotNormalized, "query is not unit norm");
  }
}

NeighborList KnnIndex::Query(std::span<const float> query,
                             std::size_t k) const {
  return QueryMany(query, 1, k, 1).front();
}

std::vector<NeighborList> KnnIndex::QueryMany(std::span<const float> queries,
                                              std::size_t count, std::size_t k,
                                              int threads) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (size() == 0) throw Error(ErrorCode::kEmptyIndex, "index has no rows");
  if (queries.size() != count * dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "query block does not hold " + std::to_string(count) +
                    " rows of dimension " + std::to_string(dim()));
  }
  for (std::size_t j = 0; j < count; ++j) {
    CheckQuery(queries.subspan(j * dim(), dim()));
  }
  std::vector<NeighborList> out(count);
  ParallelFor(count, threads, kQueryBlock,
              [&](std::size_t begin, std::size_t end) {
                for (std::size_t j = begin; j < end; j += kQueryBlock) {
                  const std::size_t n = std::min(kQueryBlock, end - j);
                  QueryBlock(queries.data() + j * dim(), n, k, &out[j]);
                }
              });
  return out;
}

void KnnIndex::QueryBlock(const float* queries, std::size_t count,
                          std::size_t k, NeighborList* out) const {
  const std::size_t n = size();
  const std::size_t d = dim();
  const std::size_t kk = std::min(k, n);
  // Candidate pool per query; surplus beyond k absorbs float rounding.
  const std::size_t pool = std::min(n, kk + std::max<std::size_t>(kk, 16));

  auto query_row = [&](std::size_t j) {
    return std::span<const float>(queries + j * d, d);
  };

  if (pool == n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t j = 0; j < count; ++j) out[j] = Finish(query_row(j), all, k);
    return;
  }

  Eigen::Map<const RowMajorF> q(queries, static_cast<Eigen::Index>(count),
                                static_cast<Eigen::Index>(d));
  Eigen::Map<const RowMajorF> base(base_.values().data(),
                                   static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(d));

  using Heap = std::priority_queue<Candidate, std::vector<Candidate>,
                                   ScoreGreater>;
  std::vector<Heap> heaps(count);
  RowMajorF scores;
  for (std::size_t b0 = 0; b0 < n; b0 += kBaseBlock) {
    const std::size_t nb = std::min(kBaseBlock, n - b0);
    scores.noalias() =
        q * base.middleRows(static_cast<Eigen::Index>(b0),
                            static_cast<Eigen::Index>(nb))
                .transpose();
    for (std::size_t j = 0; j < count; ++j) {
      Heap& heap = heaps[j];
      const float* s = scores.data() + j * nb;
      std::size_t i = 0;
      for (; i < nb && heap.size() < pool; ++i) {
        heap.push({s[i], static_cast<std::uint32_t>(b0 + i)});
      }
      float floor = heap.top().score;
      for (; i < nb; ++i) {
        if (s[i] > floor) {
          heap.pop();
          heap.push({s[i], static_cast<std::uint32_t>(b0 + i)});
          floor = heap.top().score;
        }
      }
    }
  }

  // Any float score differs from the exact similarity by at most `err`.
  const double err = 2.0 * (Gamma(d, 0x1p-24) + Gamma(d, 0x1p-53)) *
                     (1.0 + kUnitNormTolerance) * max_row_norm_;
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<Candidate> cands;
    cands.reserve(pool);
    for (Heap& heap = heaps[j]; !heap.empty(); heap.pop()) {
      cands.push_back(heap.top());
    }
    // Ascending by score: front is the pool floor.
    const double floor = cands.front().score;
    const double kth = cands[cands.size() - kk].score;
    if (floor + err < kth - err) {
      std::vector<std::size_t> rows;
      rows.reserve(cands.size());
      for (const auto& c : cands) rows.push_back(c.row);
      out[j] = Finish(query_row(j), std::move(rows), k);
    } else {
      // Too many near-ties to certify the pool; fall back to a full scan.
      out[j] = FullScan(query_row(j), k);
    }
  }
}

NeighborList KnnIndex::FullScan(std::span<const float> query,
                                std::size_t k) const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), 0);
  return Finish(query, std::move(all), k);
}

NeighborList KnnIndex::Finish(std::span<const float> query,
                              std::vector<std::size_t> rows,
                              std::size_t k) const {
  struct Scored {
    double similarity;
    std::size_t row;
  };
  std::vector<Scored> scored;
  scored.reserve(rows.size());
  for (std::size_t r : rows) {
    scored.push_back({ExactInnerProduct(query, base_.row(r)), r});
  }
  const std::size_t kk = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + kk, scored.end(),
                    [&](const Scored& a, const Scored& b) {
                      if (a.similarity != b.similarity) {
                        return a.similarity > b.similarity;
                      }
                      return id_rank_[a.row] < id_rank_[b.row];
                    });
  NeighborList result;
  result.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i) {
    result.push_back({base_.ids()[scored[i].row], scored[i].similarity,
                      scored[i].row});
  }
  return result;
}

LabelDistribution Vote(const NeighborList& neighbors,
                       const LabelTable& labels) {
  if (neighbors.empty()) {
    throw Error(ErrorCode::kEmptyInput, "vote over an empty neighbor list");
  }
  std::vector<std::size_t> counts(labels.classes().size(), 0);
  for (const auto& nb : neighbors) {
    auto label = labels.Find(nb.id);
    if (!label) throw Error(ErrorCode::kMissingLabel, nb.id.str());
    ++counts[*label];
  }
  LabelDistribution dist;
  dist.support = neighbors.size();
  dist.probs.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    dist.probs[c] = static_cast<double>(counts[c]) /
                    static_cast<double>(neighbors.size());
  }
  return dist;
}

double Entropy(std::span<const double> probs) {
  if (probs.empty()) {
    throw Error(ErrorCode::kInvalidDistribution, "empty distribution");
  }
  double sum = 0.0;
  double h = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kInvalidDistribution,
                  "entries must be finite and nonnegative");
    }
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw Error(ErrorCode::kInvalidDistribution, "entries do not sum to 1");
  }
  // -1 * log(1) is -0.0; report a plain zero.
  return h == 0.0 ? 0.0 : h;
}

std::size_t ArgMax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

LabelPrediction PredictLabel(std::span<const double> probs) {
  const double h = Entropy(probs);
  return {ArgMax(probs), h == 0.0 ? 0.0 : -h};
}

}  // namespace dejavu
