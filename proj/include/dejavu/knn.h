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

// Exact k-nearest-neighbor search under cosine similarity (inner product on
// unit rows), neighbor label voting and entropy-based confidence.

#ifndef DEJAVU_KNN_H_
#define DEJAVU_KNN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dejavu/datamodel.h"

namespace dejavu {

struct Neighbor {
  SampleId id;
  // Inner product of the float32 rows accumulated in double, left to right.
  double similarity = 0.0;
  std::size_t row = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Ordered by (similarity desc, id asc).
using NeighborList = std::vector<Neighbor>;

// Inner product of two float vectors, each product widened to double and
// summed in index order. Every similarity reported by KnnIndex is exactly
// this value.
double ExactInnerProduct(std::span<const float> a, std::span<const float> b);

class KnnIndex {
 public:
  // `base` must be row-normalized (kNotNormalized otherwise).
  explicit KnnIndex(EmbeddingMatrix base);

  const EmbeddingMatrix& base() const noexcept { return base_; }
  std::size_t dim() const noexcept { return base_.dim(); }
  std::size_t size() const noexcept { return base_.rows(); }

  // The min(k, size()) rows with the largest inner product with `query`,
  // ties broken by id. The result is identical to a full scan.
  NeighborList Query(std::span<const float> query, std::size_t k) const;

  // `queries` holds `count` row-major unit vectors. The output is indexed by
  // query and does not depend on `threads`.
  std::vector<NeighborList> QueryMany(std::span<const float> queries,
                                      std::size_t count, std::size_t k,
                                      int threads) const;

 private:
  void QueryBlock(const float* queries, std::size_t count, std::size_t k,
                  NeighborList* out) const;
  NeighborList FullScan(std::span<const float> query, std::size_t k) const;
  NeighborList Finish(std::span<const float> query,
                      std::vector<std::size_t> rows, std::size_t k) const;
  void CheckQuery(std::span<const float> query) const;

  EmbeddingMatrix base_;
  // Position of each row's id in ascending id order; integer tie-breaks.
  std::vector<std::uint32_t> id_rank_;
  double max_row_norm_ = 0.0;
};

struct LabelDistribution {
  std::vector<double> probs;
  std::size_t support = 0;
};

// Unweighted vote: probs[c] is the fraction of neighbors labelled c.
// Throws kMissingLabel for an unlabelled neighbor, kEmptyInput for no
// neighbors.
LabelDistribution Vote(const NeighborList& neighbors, const LabelTable& labels);

// Shannon entropy in nats with 0 ln 0 = 0. Throws kInvalidDistribution unless
// the entries are finite, nonnegative and sum to 1 within 1e-5.
double Entropy(std::span<const double> probs);

struct LabelPrediction {
  std::size_t label = 0;
  // Negative entropy of the distribution; higher is more confident.
  double confidence = 0.0;
};

// Argmax with ties going to the lowest class index.
LabelPrediction PredictLabel(std::span<const double> probs);

std::size_t ArgMax(std::span<const double> values);

}  // namespace dejavu

#endif  // DEJAVU_KNN_H_
