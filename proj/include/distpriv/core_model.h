// Copyright 2026 The distpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DISTPRIV_CORE_MODEL_H_
#define DISTPRIV_CORE_MODEL_H_

// Finite spaces, probability distributions over them, channels (randomized
// algorithms X -> DY) and the lifting of a channel to distributions.
//
// All values are immutable after construction and refer to elements by dense
// integer index. Labels are carried only as metadata.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace distpriv {

// Absolute tolerance for probability sums and row stochasticity.
inline constexpr double kMassTolerance = 1e-12;
// Relative tolerance for metric axioms (triangle inequality).
inline constexpr double kMetricTolerance = 1e-9;

class FiniteSpace;
using SpacePtr = std::shared_ptr<const FiniteSpace>;

// An indexed finite set with a pairwise distance.
class FiniteSpace {
 public:
  // `metric` is row-major |labels| x |labels|. Fails unless the metric is
  // symmetric, nonnegative, zero on the diagonal and satisfies the triangle
  // inequality up to kMetricTolerance (relative).
  static absl::StatusOr<SpacePtr> Create(std::vector<std::string> labels,
                                         std::vector<double> metric) {
    const std::size_t n = labels.size();
    if (n == 0) return absl::InvalidArgumentError("space must be nonempty");
    if (metric.size() != n * n) {
      return absl::InvalidArgumentError(
          absl::StrCat("metric has ", metric.size(), " entries, expected ",
                       n * n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (metric[i * n + i] != 0.0) {
        return absl::InvalidArgumentError(
            absl::StrCat("metric[", i, "][", i, "] must be 0"));
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double d = metric[i * n + j];
        if (!std::isfinite(d) || d < 0.0) {
          return absl::InvalidArgumentError(absl::StrCat(
              "metric[", i, "][", j, "] must be finite and nonnegative"));
        }
        if (d != metric[j * n + i]) {
          return absl::InvalidArgumentError(
              absl::StrCat("metric is not symmetric at (", i, ",", j, ")"));
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double dij = metric[i * n + j];
        for (std::size_t k = 0; k < n; ++k) {
          const double via = dij + metric[j * n + k];
          if (metric[i * n + k] > via * (1.0 + kMetricTolerance) + 1e-300) {
            return absl::InvalidArgumentError(
                absl::StrCat("triangle inequality fails for (", i, ",", j,
                             ",", k, ")"));
          }
        }
      }
    }
    return SpacePtr(new FiniteSpace(std::move(labels), std::move(metric)));
  }

  // Points on a line with metric |p_i - p_j|. Labels are the indices.
  static absl::StatusOr<SpacePtr> Line(std::span<const double> positions) {
    std::vector<double> metric;
    metric.reserve(positions.size() * positions.size());
    for (double a : positions) {
      for (double b : positions) metric.push_back(std::abs(a - b));
    }
    return Create(IndexLabels(positions.size()), std::move(metric));
  }

  // Points in the plane with Euclidean metric.
  static absl::StatusOr<SpacePtr> Planar(
      std::vector<std::string> labels,
      std::span<const std::pair<double, double>> points) {
    std::vector<double> metric;
    metric.reserve(points.size() * points.size());
    for (const auto& [ax, ay] : points) {
      for (const auto& [bx, by] : points) {
        metric.push_back(std::hypot(ax - bx, ay - by));
      }
    }
    return Create(std::move(labels), std::move(metric));
  }

  static std::vector<std::string> IndexLabels(std::size_t n) {
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(absl::StrCat(i));
    return labels;
  }

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  double distance(std::size_t i, std::size_t j) const {
    return metric_[i * size() + j];
  }
  std::span<const double> metric() const { return metric_; }

  // Largest pairwise distance.
  double Diameter() const {
    return *std::max_element(metric_.begin(), metric_.end());
  }

 private:
  FiniteSpace(std::vector<std::string> labels, std::vector<double> metric)
      : labels_(std::move(labels)), metric_(std::move(metric)) {}

  std::vector<std::string> labels_;
  std::vector<double> metric_;
};

// Spaces are compatible when they are the same object or carry the same
// number of elements and an identical metric.
inline bool SameSpace(const FiniteSpace& a, const FiniteSpace& b) {
  if (&a == &b) return true;
  if (a.size() != b.size()) return false;
  return std::equal(a.metric().begin(), a.metric().end(), b.metric().begin());
}

// A probability vector over a FiniteSpace.
class ProbDist {
 public:
  static absl::StatusOr<ProbDist> Create(SpacePtr space,
                                         std::vector<double> mass) {
    if (space == nullptr) return absl::InvalidArgumentError("null space");
    if (mass.size() != space->size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("distribution has ", mass.size(),
                       " entries, space has ", space->size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      if (!(mass[i] >= 0.0 && mass[i] <= 1.0)) {
        return absl::InvalidArgumentError(
            absl::StrCat("mass[", i, "] = ", mass[i], " is outside [0,1]"));
      }
      total += mass[i];
    }
    if (std::abs(total - 1.0) > kMassTolerance) {
      return absl::InvalidArgumentError(
          absl::StrCat("masses sum to ", total, ", not 1"));
    }
    return ProbDist(std::move(space), std::move(mass));
  }

  // Normalizes nonnegative weights. Fails if every weight is zero.
  static absl::StatusOr<ProbDist> FromWeights(SpacePtr space,
                                              std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        return absl::InvalidArgumentError("weights must be finite and >= 0");
      }
      total += w;
    }
    if (total <= 0.0) return absl::InvalidArgumentError("all weights are 0");
    for (double& w : weights) w /= total;
    return Create(std::move(space), std::move(weights));
  }

  static absl::StatusOr<ProbDist> Uniform(SpacePtr space) {
    if (space == nullptr) return absl::InvalidArgumentError("null space");
    const std::size_t n = space->size();
    return Create(std::move(space), std::vector<double>(n, 1.0 / n));
  }

  const SpacePtr& space() const { return space_; }
  std::size_t size() const { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  std::span<const double> mass() const { return mass_; }

  std::vector<std::size_t> Support() const {
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < mass_.size(); ++i) {
      if (mass_[i] > 0.0) support.push_back(i);
    }
    return support;
  }

  double Max() const { return *std::max_element(mass_.begin(), mass_.end()); }
  double Min() const { return *std::min_element(mass_.begin(), mass_.end()); }

 private:
  ProbDist(SpacePtr space, std::vector<double> mass)
      : space_(std::move(space)), mass_(std::move(mass)) {}

  SpacePtr space_;
  std::vector<double> mass_;
};

// The distribution with all mass on element `x`.
inline absl::StatusOr<ProbDist> PointDist(SpacePtr space, std::size_t x) {
  if (space == nullptr) return absl::InvalidArgumentError("null space");
  if (x >= space->size()) {
    return absl::OutOfRangeError(
        absl::StrCat("element ", x, " out of range [0,", space->size(), ")"));
  }
  std::vector<double> mass(space->size(), 0.0);
  mass[x] = 1.0;
  return ProbDist::Create(std::move(space), std::move(mass));
}

// t * a + (1 - t) * b.
inline absl::StatusOr<ProbDist> Mix(const ProbDist& a, const ProbDist& b,
                                    double t) {
  if (!SameSpace(*a.space(), *b.space())) {
    return absl::InvalidArgumentError("mixing distributions over different "
                                      "spaces");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    return absl::InvalidArgumentError("mixing weight must lie in [0,1]");
  }
  std::vector<double> mass(a.size());
  for (std::size_t i = 0; i < mass.size(); ++i) {
    mass[i] = t * a[i] + (1.0 - t) * b[i];
  }
  return ProbDist::FromWeights(a.space(), std::move(mass));
}

// Sum over x of dist[x] * f(x).
template <typename F>
  requires std::invocable<F&, std::size_t>
double ExpectedValue(const ProbDist& dist, F&& f) {
  double total = 0.0;
  for (std::size_t x = 0; x < dist.size(); ++x) {
    if (dist[x] != 0.0) total += dist[x] * f(x);
  }
  return total;
}

inline absl::StatusOr<double> ExpectedValue(const ProbDist& dist,
                                            std::span<const double> values) {
  if (values.size() != dist.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("function has ", values.size(),
                     " values, distribution has ", dist.size(), " elements"));
  }
  return ExpectedValue(dist, [&](std::size_t x) { return values[x]; });
}

// A randomized algorithm from an input space to an output space, stored as a
// dense row-stochastic matrix.
class Channel {
 public:
  static absl::StatusOr<Channel> Create(SpacePtr input, SpacePtr output,
                                        std::vector<double> rows) {
    if (input == nullptr || output == nullptr) {
      return absl::InvalidArgumentError("null space");
    }
    const std::size_t nx = input->size();
    const std::size_t ny = output->size();
    if (rows.size() != nx * ny) {
      return absl::InvalidArgumentError(absl::StrCat(
          "channel has ", rows.size(), " entries, expected ", nx * ny));
    }
    for (std::size_t x = 0; x < nx; ++x) {
      double total = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        const double p = rows[x * ny + y];
        if (!(p >= 0.0 && p <= 1.0)) {
          return absl::InvalidArgumentError(absl::StrCat(
              "channel entry (", x, ",", y, ") = ", p, " is outside [0,1]"));
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kMassTolerance) {
        return absl::InvalidArgumentError(
            absl::StrCat("channel row ", x, " sums to ", total));
      }
    }
    return Channel(std::move(input), std::move(output), std::move(rows));
  }

  // Builds a channel by normalizing each row of nonnegative weights.
  static absl::StatusOr<Channel> FromWeights(SpacePtr input, SpacePtr output,
                                             std::vector<double> weights) {
    if (input == nullptr || output == nullptr) {
      return absl::InvalidArgumentError("null space");
    }
    const std::size_t ny = output->size();
    if (weights.size() != input->size() * ny) {
      return absl::InvalidArgumentError("weight matrix has the wrong shape");
    }
    for (std::size_t x = 0; x < input->size(); ++x) {
      double total = 0.0;
      for (std::size_t y = 0; y < ny; ++y) total += weights[x * ny + y];
      if (!(total > 0.0) || !std::isfinite(total)) {
        return absl::InvalidArgumentError(
            absl::StrCat("row ", x, " has no positive finite weight"));
      }
      for (std::size_t y = 0; y < ny; ++y) weights[x * ny + y] /= total;
    }
    return Create(std::move(input), std::move(output), std::move(weights));
  }

  static Channel Identity(SpacePtr space) {
    const std::size_t n = space->size();
    std::vector<double> rows(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) rows[i * n + i] = 1.0;
    return Channel(space, space, std::move(rows));
  }

  const SpacePtr& input_space() const { return input_; }
  const SpacePtr& output_space() const { return output_; }
  std::size_t input_size() const { return input_->size(); }
  std::size_t output_size() const { return output_->size(); }

  double operator()(std::size_t x, std::size_t y) const {
    return rows_[x * output_size() + y];
  }
  std::span<const double> row(std::size_t x) const {
    return std::span<const double>(rows_).subspan(x * output_size(),
                                                  output_size());
  }
  std::span<const double> matrix() const { return rows_; }

 private:
  Channel(SpacePtr input, SpacePtr output, std::vector<double> rows)
      : input_(std::move(input)),
        output_(std::move(output)),
        rows_(std::move(rows)) {}

  SpacePtr input_;
  SpacePtr output_;
  std::vector<double> rows_;
};

// The output distribution of `channel` when its input is drawn from `dist`:
// lifted[y] = sum_x dist[x] * channel(x, y).
inline absl::StatusOr<ProbDist> LiftChannel(const Channel& channel,
                                            const ProbDist& dist) {
  if (!SameSpace(*channel.input_space(), *dist.space())) {
    return absl::InvalidArgumentError(
        "distribution is not over the channel's input space");
  }
  const std::size_t ny = channel.output_size();
  std::vector<double> lifted(ny, 0.0);
  for (std::size_t x = 0; x < dist.size(); ++x) {
    const double w = dist[x];
    if (w == 0.0) continue;
    const auto row = channel.row(x);
    for (std::size_t y = 0; y < ny; ++y) lifted[y] += w * row[y];
  }
  for (double& p : lifted) p = std::clamp(p, 0.0, 1.0);
  return ProbDist::Create(channel.output_space(), std::move(lifted));
}

// A set of ordered index pairs over one space.
class AdjacencyRelation {
 public:
  using Pair = std::pair<std::size_t, std::size_t>;

  static absl::StatusOr<AdjacencyRelation> Create(std::size_t domain_size,
                                                  std::vector<Pair> pairs) {
    for (const auto& [a, b] : pairs) {
      if (a >= domain_size || b >= domain_size) {
        return absl::OutOfRangeError(absl::StrCat(
            "pair (", a, ",", b, ") out of range for domain of size ",
            domain_size));
      }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return AdjacencyRelation(domain_size, std::move(pairs));
  }

  static AdjacencyRelation All(std::size_t n) {
    std::vector<Pair> pairs;
    pairs.reserve(n * n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) pairs.emplace_back(a, b);
    }
    return AdjacencyRelation(n, std::move(pairs));
  }

  static AdjacencyRelation Diagonal(std::size_t n) {
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < n; ++a) pairs.emplace_back(a, a);
    return AdjacencyRelation(n, std::move(pairs));
  }

  std::size_t domain_size() const { return domain_size_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<Pair>& pairs() const { return pairs_; }
  bool Contains(std::size_t a, std::size_t b) const {
    return std::binary_search(pairs_.begin(), pairs_.end(), Pair(a, b));
  }

 private:
  AdjacencyRelation(std::size_t domain_size, std::vector<Pair> pairs)
      : domain_size_(domain_size), pairs_(std::move(pairs)) {}

  std::size_t domain_size_;
  std::vector<Pair> pairs_;
};

// Input and output spaces of a mechanism together with the distance between
// each input and each output (|X| x |Y|, row-major). When X is embedded in Y,
// `embedding[x]` is the output index that coincides with input x.
class Domain {
 public:
  static absl::StatusOr<Domain> Create(
      SpacePtr input, SpacePtr output, std::vector<double> distance,
      std::optional<std::vector<std::size_t>> embedding = std::nullopt) {
    if (input == nullptr || output == nullptr) {
      return absl::InvalidArgumentError("null space");
    }
    if (distance.size() != input->size() * output->size()) {
      return absl::InvalidArgumentError("distance table has the wrong shape");
    }
    for (double d : distance) {
      if (!std::isfinite(d) || d < 0.0) {
        return absl::InvalidArgumentError("distances must be finite and >= 0");
      }
    }
    if (embedding.has_value()) {
      if (embedding->size() != input->size()) {
        return absl::InvalidArgumentError("embedding has the wrong size");
      }
      for (std::size_t y : *embedding) {
        if (y >= output->size()) {
          return absl::OutOfRangeError("embedding index out of range");
        }
      }
    }
    return Domain(std::move(input), std::move(output), std::move(distance),
                  std::move(embedding));
  }

  // X = Y.
  static Domain Same(SpacePtr space) {
    std::vector<double> distance(space->metric().begin(),
                                 space->metric().end());
    std::vector<std::size_t> embedding(space->size());
    for (std::size_t i = 0; i < embedding.size(); ++i) embedding[i] = i;
    return Domain(space, space, std::move(distance), std::move(embedding));
  }

  // X is the subset `inputs` of `output`, with the restricted metric.
  static absl::StatusOr<Domain> Embedded(SpacePtr output,
                                         std::vector<std::size_t> inputs) {
    if (output == nullptr) return absl::InvalidArgumentError("null space");
    if (inputs.empty()) return absl::InvalidArgumentError("no inputs");
    const std::size_t nx = inputs.size();
    const std::size_t ny = output->size();
    std::vector<std::string> labels;
    std::vector<double> metric(nx * nx);
    std::vector<double> distance(nx * ny);
    for (std::size_t y : inputs) {
      if (y >= ny) return absl::OutOfRangeError("input index out of range");
    }
    for (std::size_t a = 0; a < nx; ++a) {
      labels.push_back(output->label(inputs[a]));
      for (std::size_t b = 0; b < nx; ++b) {
        metric[a * nx + b] = output->distance(inputs[a], inputs[b]);
      }
      for (std::size_t y = 0; y < ny; ++y) {
        distance[a * ny + y] = output->distance(inputs[a], y);
      }
    }
    auto input = FiniteSpace::Create(std::move(labels), std::move(metric));
    if (!input.ok()) return input.status();
    return Create(*std::move(input), std::move(output), std::move(distance),
                  std::move(inputs));
  }

  const SpacePtr& input() const { return input_; }
  const SpacePtr& output() const { return output_; }
  double distance(std::size_t x, std::size_t y) const {
    return distance_[x * output_->size() + y];
  }
  std::span<const double> distance_table() const { return distance_; }
  const std::optional<std::vector<std::size_t>>& embedding() const {
    return embedding_;
  }

 private:
  Domain(SpacePtr input, SpacePtr output, std::vector<double> distance,
         std::optional<std::vector<std::size_t>> embedding)
      : input_(std::move(input)),
        output_(std::move(output)),
        distance_(std::move(distance)),
        embedding_(std::move(embedding)) {}

  SpacePtr input_;
  SpacePtr output_;
  std::vector<double> distance_;
  std::optional<std::vector<std::size_t>> embedding_;
};

}  // namespace distpriv

#endif  // DISTPRIV_CORE_MODEL_H_
