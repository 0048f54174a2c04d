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

#ifndef DISTPRIV_TRANSPORT_H_
#define DISTPRIV_TRANSPORT_H_

// Couplings, utility distances and sensitivity, the infinity-Wasserstein
// distance, and membership in lifted adjacency relations.
//
// Transport feasibility is decided on integers: both marginals are rounded
// to units summing to kFlowScale and a max-flow is run over the allowed
// pairs. Rounding each marginal separately can leave a tight cut a few units
// short, so a plan counts as complete when it misses at most kFlowSlack
// units; the resulting coupling is still within kCouplingTolerance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "distpriv/core_model.h"
#include "distpriv/status_macros.h"

namespace distpriv {

// Marginal tolerance for couplings.
inline constexpr double kCouplingTolerance = 1e-10;
// Probabilities are scaled to integer flow units by this factor.
inline constexpr std::int64_t kFlowScale = 1'000'000'000'000;
// Unrouted units tolerated in a complete plan (6.4e-11 of mass).
inline constexpr std::int64_t kFlowSlack = 64;

// A joint distribution over X0 x X1 with prescribed marginals.
class Coupling {
 public:
  static absl::StatusOr<Coupling> Create(ProbDist left, ProbDist right,
                                         std::vector<double> joint) {
    const std::size_t n0 = left.size();
    const std::size_t n1 = right.size();
    if (joint.size() != n0 * n1) {
      return absl::InvalidArgumentError("joint matrix has the wrong shape");
    }
    double total = 0.0;
    std::vector<double> cols(n1, 0.0);
    for (std::size_t i = 0; i < n0; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n1; ++j) {
        const double g = joint[i * n1 + j];
        if (!(g >= 0.0)) {
          return absl::InvalidArgumentError(
              absl::StrCat("joint(", i, ",", j, ") is negative"));
        }
        row += g;
        cols[j] += g;
      }
      if (std::abs(row - left[i]) > kCouplingTolerance) {
        return absl::InvalidArgumentError(
            absl::StrCat("row ", i, " sums to ", row, ", expected ", left[i]));
      }
      total += row;
    }
    for (std::size_t j = 0; j < n1; ++j) {
      if (std::abs(cols[j] - right[j]) > kCouplingTolerance) {
        return absl::InvalidArgumentError(absl::StrCat(
            "column ", j, " sums to ", cols[j], ", expected ", right[j]));
      }
    }
    if (std::abs(total - 1.0) > kCouplingTolerance) {
      return absl::InvalidArgumentError("coupling mass is not 1");
    }
    return Coupling(std::move(left), std::move(right), std::move(joint));
  }

  const ProbDist& left() const { return left_; }
  const ProbDist& right() const { return right_; }
  double operator()(std::size_t i, std::size_t j) const {
    return joint_[i * right_.size() + j];
  }
  std::span<const double> joint() const { return joint_; }

  std::vector<AdjacencyRelation::Pair> Support() const {
    std::vector<AdjacencyRelation::Pair> support;
    for (std::size_t i = 0; i < left_.size(); ++i) {
      for (std::size_t j = 0; j < right_.size(); ++j) {
        if ((*this)(i, j) > 0.0) support.emplace_back(i, j);
      }
    }
    return support;
  }

  // Largest distance moved by the plan; both marginals must live in `space`.
  double LargestMove(const FiniteSpace& space) const {
    double largest = 0.0;
    for (const auto& [i, j] : Support()) {
      largest = std::max(largest, space.distance(i, j));
    }
    return largest;
  }

 private:
  Coupling(ProbDist left, ProbDist right, std::vector<double> joint)
      : left_(std::move(left)),
        right_(std::move(right)),
        joint_(std::move(joint)) {}

  ProbDist left_;
  ProbDist right_;
  std::vector<double> joint_;
};

// u(x, y) as a dense |X| x |Y| table.
class UtilityFunction {
 public:
  // When input and output are the same space, u(x, y) = 0 must hold exactly
  // when x = y.
  static absl::StatusOr<UtilityFunction> Create(SpacePtr input,
                                                SpacePtr output,
                                                std::vector<double> table) {
    if (input == nullptr || output == nullptr) {
      return absl::InvalidArgumentError("null space");
    }
    const std::size_t nx = input->size();
    const std::size_t ny = output->size();
    if (table.size() != nx * ny) {
      return absl::InvalidArgumentError("utility table has the wrong shape");
    }
    for (double v : table) {
      if (!std::isfinite(v)) {
        return absl::InvalidArgumentError("utility values must be finite");
      }
    }
    if (input == output) {
      for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t y = 0; y < ny; ++y) {
          if ((table[x * ny + y] == 0.0) != (x == y)) {
            return absl::InvalidArgumentError(absl::StrCat(
                "u(x,y) must be zero exactly on the diagonal; violated at (",
                x, ",", y, ")"));
          }
        }
      }
    }
    return UtilityFunction(std::move(input), std::move(output),
                           std::move(table));
  }

  // u(x, y) = -distance(x, y).
  static absl::StatusOr<UtilityFunction> NegatedDistance(const Domain& domain) {
    std::vector<double> table(domain.distance_table().begin(),
                              domain.distance_table().end());
    for (double& v : table) v = v == 0.0 ? 0.0 : -v;
    return Create(domain.input(), domain.output(), std::move(table));
  }

  const SpacePtr& input_space() const { return input_; }
  const SpacePtr& output_space() const { return output_; }
  std::size_t input_size() const { return input_->size(); }
  std::size_t output_size() const { return output_->size(); }
  double operator()(std::size_t x, std::size_t y) const {
    return table_[x * output_size() + y];
  }

 private:
  UtilityFunction(SpacePtr input, SpacePtr output, std::vector<double> table)
      : input_(std::move(input)),
        output_(std::move(output)),
        table_(std::move(table)) {}

  SpacePtr input_;
  SpacePtr output_;
  std::vector<double> table_;
};

// max_y |u(x, y) - u(x2, y)|. Indices must be valid inputs of `u`.
inline double UtilityDistance(const UtilityFunction& u, std::size_t x,
                              std::size_t x2) {
  double largest = 0.0;
  for (std::size_t y = 0; y < u.output_size(); ++y) {
    largest = std::max(largest, std::abs(u(x, y) - u(x2, y)));
  }
  return largest;
}

// Largest utility distance over the pairs of `relation`.
inline absl::StatusOr<double> Sensitivity(const UtilityFunction& u,
                                          const AdjacencyRelation& relation) {
  if (relation.empty()) {
    return absl::InvalidArgumentError("sensitivity of an empty relation");
  }
  if (relation.domain_size() != u.input_size()) {
    return absl::InvalidArgumentError(
        "relation is not over the utility function's input space");
  }
  double largest = 0.0;
  for (const auto& [a, b] : relation.pairs()) {
    largest = std::max(largest, UtilityDistance(u, a, b));
  }
  return largest;
}

namespace internal {

// Dinic's algorithm on an integer-capacity graph.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : adjacency_(nodes) {}

  std::size_t AddArc(std::size_t from, std::size_t to, std::int64_t capacity) {
    const std::size_t index = arcs_.size();
    arcs_.push_back({to, capacity});
    adjacency_[from].push_back(index);
    arcs_.push_back({from, 0});
    adjacency_[to].push_back(index + 1);
    initial_.push_back(capacity);
    initial_.push_back(0);
    return index;
  }

  std::int64_t Run(std::size_t source, std::size_t sink) {
    std::int64_t total = 0;
    while (BuildLevels(source, sink)) {
      next_.assign(adjacency_.size(), 0);
      while (std::int64_t pushed =
                 Augment(source, sink, std::numeric_limits<std::int64_t>::max())) {
        total += pushed;
      }
    }
    return total;
  }

  // Flow currently routed through the arc returned by AddArc.
  std::int64_t Flow(std::size_t arc) const {
    return initial_[arc] - arcs_[arc].residual;
  }

 private:
  struct Arc {
    std::size_t to;
    std::int64_t residual;
  };

  bool BuildLevels(std::size_t source, std::size_t sink) {
    level_.assign(adjacency_.size(), -1);
    std::queue<std::size_t> frontier;
    level_[source] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
      const std::size_t node = frontier.front();
      frontier.pop();
      for (std::size_t a : adjacency_[node]) {
        if (arcs_[a].residual > 0 && level_[arcs_[a].to] < 0) {
          level_[arcs_[a].to] = level_[node] + 1;
          frontier.push(arcs_[a].to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  std::int64_t Augment(std::size_t node, std::size_t sink,
                       std::int64_t limit) {
    if (node == sink) return limit;
    for (std::size_t& i = next_[node]; i < adjacency_[node].size(); ++i) {
      const std::size_t a = adjacency_[node][i];
      Arc& arc = arcs_[a];
      if (arc.residual <= 0 || level_[arc.to] != level_[node] + 1) continue;
      const std::int64_t pushed =
          Augment(arc.to, sink, std::min(limit, arc.residual));
      if (pushed > 0) {
        arc.residual -= pushed;
        arcs_[a ^ 1].residual += pushed;
        return pushed;
      }
    }
    return 0;
  }

  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Arc> arcs_;
  std::vector<std::int64_t> initial_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

// Integer units summing exactly to kFlowScale. Every positive mass receives
// at least one unit so supports are preserved.
inline std::vector<std::int64_t> ToFlowUnits(std::span<const double> mass) {
  const std::size_t n = mass.size();
  std::vector<std::int64_t> units(n, 0);
  std::vector<double> remainder(n, 0.0);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mass[i] <= 0.0) continue;
    const double scaled = mass[i] * static_cast<double>(kFlowScale);
    units[i] = std::max<std::int64_t>(1, static_cast<std::int64_t>(scaled));
    remainder[i] = scaled - std::floor(scaled);
    total += units[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return remainder[a] > remainder[b];
  });
  while (total < kFlowScale) {
    for (std::size_t i : order) {
      if (total == kFlowScale) break;
      if (units[i] == 0) continue;
      ++units[i];
      ++total;
    }
  }
  while (total > kFlowScale) {
    const auto largest = static_cast<std::size_t>(
        std::max_element(units.begin(), units.end()) - units.begin());
    const std::int64_t take = std::min(total - kFlowScale, units[largest] - 1);
    units[largest] -= take;
    total -= take;
  }
  return units;
}

// Routes units0 onto units1 along pairs for which allowed(i, j) holds.
// Returns the |X0| x |X1| plan in units, or nullopt if no full plan exists.
inline std::optional<std::vector<std::int64_t>> RestrictedTransport(
    std::span<const std::int64_t> units0, std::span<const std::int64_t> units1,
    const std::function<bool(std::size_t, std::size_t)>& allowed) {
  const std::size_t n0 = units0.size();
  const std::size_t n1 = units1.size();
  const std::size_t source = n0 + n1;
  const std::size_t sink = source + 1;
  MaxFlow flow(n0 + n1 + 2);
  for (std::size_t i = 0; i < n0; ++i) {
    if (units0[i] > 0) flow.AddArc(source, i, units0[i]);
  }
  for (std::size_t j = 0; j < n1; ++j) {
    if (units1[j] > 0) flow.AddArc(n0 + j, sink, units1[j]);
  }
  struct Middle {
    std::size_t i, j, arc;
  };
  std::vector<Middle> middle;
  for (std::size_t i = 0; i < n0; ++i) {
    if (units0[i] == 0) continue;
    for (std::size_t j = 0; j < n1; ++j) {
      if (units1[j] == 0 || !allowed(i, j)) continue;
      middle.push_back({i, j, flow.AddArc(i, n0 + j, kFlowScale)});
    }
  }
  if (flow.Run(source, sink) < kFlowScale - kFlowSlack) return std::nullopt;
  std::vector<std::int64_t> plan(n0 * n1, 0);
  for (const Middle& m : middle) plan[m.i * n1 + m.j] = flow.Flow(m.arc);
  return plan;
}

inline absl::StatusOr<Coupling> PlanToCoupling(
    const ProbDist& left, const ProbDist& right,
    std::span<const std::int64_t> plan) {
  std::vector<double> joint(plan.size());
  for (std::size_t k = 0; k < plan.size(); ++k) {
    joint[k] = static_cast<double>(plan[k]) / static_cast<double>(kFlowScale);
  }
  return Coupling::Create(left, right, std::move(joint));
}

inline absl::Status CheckSameSpace(const ProbDist& a, const ProbDist& b) {
  if (!SameSpace(*a.space(), *b.space())) {
    return absl::InvalidArgumentError(
        "distributions are not over the same metric space");
  }
  return absl::OkStatus();
}

// Smallest threshold t among pairwise support distances such that a plan
// using only pairs at distance <= t (and allowed by `extra`) exists.
inline std::optional<std::pair<double, std::vector<std::int64_t>>>
BottleneckTransport(const ProbDist& a, const ProbDist& b,
                    const std::function<bool(std::size_t, std::size_t)>& extra) {
  const FiniteSpace& space = *a.space();
  const auto units0 = ToFlowUnits(a.mass());
  const auto units1 = ToFlowUnits(b.mass());
  std::vector<double> thresholds;
  for (std::size_t i : a.Support()) {
    for (std::size_t j : b.Support()) {
      if (extra(i, j)) thresholds.push_back(space.distance(i, j));
    }
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  auto solve = [&](double t) {
    return RestrictedTransport(units0, units1, [&](std::size_t i,
                                                   std::size_t j) {
      return space.distance(i, j) <= t && extra(i, j);
    });
  };
  if (thresholds.empty()) return std::nullopt;
  auto best = solve(thresholds.back());
  if (!best.has_value()) return std::nullopt;
  std::size_t lo = 0;
  std::size_t hi = thresholds.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    auto plan = solve(thresholds[mid]);
    if (plan.has_value()) {
      hi = mid;
      best = std::move(plan);
    } else {
      lo = mid + 1;
    }
  }
  return std::make_pair(thresholds[hi], *std::move(best));
}

}  // namespace internal

struct TransportResult {
  double value;
  Coupling witness;
};

// The infinity-Wasserstein distance: the smallest achievable largest move over
// all couplings of `a` and `b`, with a coupling attaining it. The witness's
// largest move equals `value` exactly.
inline absl::StatusOr<TransportResult> WassersteinInf(const ProbDist& a,
                                                      const ProbDist& b) {
  DISTPRIV_RETURN_IF_ERROR(internal::CheckSameSpace(a, b));
  auto result = internal::BottleneckTransport(
      a, b, [](std::size_t, std::size_t) { return true; });
  if (!result.has_value()) {
    return absl::InternalError("complete transport must always be feasible");
  }
  DISTPRIV_ASSIGN_OR_RETURN(Coupling witness,
                            internal::PlanToCoupling(a, b, result->second));
  return TransportResult{result->first, std::move(witness)};
}

// Largest distance between a point of supp(a) and a point of supp(b).
inline absl::StatusOr<double> Diameter(const ProbDist& a, const ProbDist& b) {
  DISTPRIV_RETURN_IF_ERROR(internal::CheckSameSpace(a, b));
  double largest = 0.0;
  for (std::size_t i : a.Support()) {
    for (std::size_t j : b.Support()) {
      largest = std::max(largest, a.space()->distance(i, j));
    }
  }
  return largest;
}

// Whether (a, b) belongs to the lifting of `relation`: some coupling is
// supported inside the relation. Returns such a coupling, or nullopt.
inline absl::StatusOr<std::optional<Coupling>> InLiftedRelation(
    const ProbDist& a, const ProbDist& b, const AdjacencyRelation& relation) {
  DISTPRIV_RETURN_IF_ERROR(internal::CheckSameSpace(a, b));
  if (relation.domain_size() != a.size()) {
    return absl::InvalidArgumentError("relation is over a different space");
  }
  const auto plan = internal::RestrictedTransport(
      internal::ToFlowUnits(a.mass()), internal::ToFlowUnits(b.mass()),
      [&](std::size_t i, std::size_t j) { return relation.Contains(i, j); });
  if (!plan.has_value()) return std::optional<Coupling>();
  DISTPRIV_ASSIGN_OR_RETURN(Coupling witness,
                            internal::PlanToCoupling(a, b, *plan));
  return std::optional<Coupling>(std::move(witness));
}

// Whether some coupling is supported inside `relation` and also attains the
// infinity-Wasserstein distance between `a` and `b`.
inline absl::StatusOr<std::optional<Coupling>> InLiftedInfRelation(
    const ProbDist& a, const ProbDist& b, const AdjacencyRelation& relation) {
  DISTPRIV_ASSIGN_OR_RETURN(TransportResult optimal, WassersteinInf(a, b));
  if (relation.domain_size() != a.size()) {
    return absl::InvalidArgumentError("relation is over a different space");
  }
  const FiniteSpace& space = *a.space();
  const auto plan = internal::RestrictedTransport(
      internal::ToFlowUnits(a.mass()), internal::ToFlowUnits(b.mass()),
      [&](std::size_t i, std::size_t j) {
        return relation.Contains(i, j) &&
               space.distance(i, j) <= optimal.value;
      });
  if (!plan.has_value()) return std::optional<Coupling>();
  DISTPRIV_ASSIGN_OR_RETURN(Coupling witness,
                            internal::PlanToCoupling(a, b, *plan));
  return std::optional<Coupling>(std::move(witness));
}

}  // namespace distpriv

#endif  // DISTPRIV_TRANSPORT_H_
