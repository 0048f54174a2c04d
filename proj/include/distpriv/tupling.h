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

#ifndef DISTPRIV_TUPLING_H_
#define DISTPRIV_TUPLING_H_

// The tupling mechanism: the inner mechanism's output hidden at a uniformly
// random position among k dummies drawn independently from a dummy
// distribution over Y.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "distpriv/core_model.h"
#include "distpriv/monte_carlo.h"
#include "distpriv/status_macros.h"

namespace distpriv {

// An ordered tuple of k + 1 output indices.
struct TupleOutput {
  std::vector<std::size_t> values;

  friend bool operator==(const TupleOutput&, const TupleOutput&) = default;
  friend auto operator<=>(const TupleOutput&, const TupleOutput&) = default;
};

class TuplingMechanism {
 public:
  static absl::StatusOr<TuplingMechanism> Create(int dummies,
                                                 ProbDist dummy_distribution,
                                                 Channel inner) {
    if (dummies < 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("number of dummies must be >= 1, got ", dummies));
    }
    return CreateUnchecked(dummies, std::move(dummy_distribution),
                           std::move(inner));
  }

  // Uniform dummies over the inner mechanism's output space.
  static absl::StatusOr<TuplingMechanism> WithUniformDummies(int dummies,
                                                             Channel inner) {
    DISTPRIV_ASSIGN_OR_RETURN(ProbDist uniform,
                              ProbDist::Uniform(inner.output_space()));
    return Create(dummies, std::move(uniform), std::move(inner));
  }

  // The k = 0 degenerate case, which releases only the inner output. Only
  // meant for checking that quantities reduce to those of the inner channel.
  static absl::StatusOr<TuplingMechanism> WithoutDummies(Channel inner) {
    DISTPRIV_ASSIGN_OR_RETURN(ProbDist uniform,
                              ProbDist::Uniform(inner.output_space()));
    return CreateUnchecked(0, std::move(uniform), std::move(inner));
  }

  int dummies() const { return dummies_; }
  std::size_t tuple_length() const {
    return static_cast<std::size_t>(dummies_) + 1;
  }
  const ProbDist& dummy_distribution() const { return dummy_; }
  const Channel& inner() const { return inner_; }

  bool has_uniform_dummies() const {
    const double expected = 1.0 / static_cast<double>(dummy_.size());
    return std::all_of(dummy_.mass().begin(), dummy_.mass().end(),
                       [&](double p) {
                         return std::abs(p - expected) <= kMassTolerance;
                       });
  }

  // Draws s from inner(x), then the k dummies, then the insertion position.
  TupleOutput Sample(std::size_t x, RandomStream& rng) const {
    const std::size_t s = samplers_->rows[x](rng);
    std::vector<std::size_t> dummies(static_cast<std::size_t>(dummies_));
    for (std::size_t& r : dummies) r = samplers_->dummy(rng);
    const std::size_t position = rng.UniformIndex(tuple_length());
    TupleOutput out;
    out.values.reserve(tuple_length());
    out.values.insert(out.values.end(), dummies.begin(),
                      dummies.begin() + position);
    out.values.push_back(s);
    out.values.insert(out.values.end(), dummies.begin() + position,
                      dummies.end());
    return out;
  }

  std::size_t SampleInner(std::size_t x, RandomStream& rng) const {
    return samplers_->rows[x](rng);
  }

 private:
  struct Samplers {
    std::vector<DiscreteSampler> rows;
    DiscreteSampler dummy;
  };

  static absl::StatusOr<TuplingMechanism> CreateUnchecked(int dummies,
                                                          ProbDist dummy,
                                                          Channel inner) {
    if (!SameSpace(*dummy.space(), *inner.output_space())) {
      return absl::InvalidArgumentError(
          "dummy distribution must be over the inner output space");
    }
    auto samplers = std::make_shared<Samplers>();
    samplers->rows.reserve(inner.input_size());
    for (std::size_t x = 0; x < inner.input_size(); ++x) {
      samplers->rows.emplace_back(inner.row(x));
    }
    samplers->dummy = DiscreteSampler(dummy.mass());
    return TuplingMechanism(dummies, std::move(dummy), std::move(inner),
                            std::move(samplers));
  }

  TuplingMechanism(int dummies, ProbDist dummy, Channel inner,
                   std::shared_ptr<const Samplers> samplers)
      : dummies_(dummies),
        dummy_(std::move(dummy)),
        inner_(std::move(inner)),
        samplers_(std::move(samplers)) {}

  int dummies_;
  ProbDist dummy_;
  Channel inner_;
  std::shared_ptr<const Samplers> samplers_;
};

inline absl::StatusOr<TupleOutput> Sample(const TuplingMechanism& mechanism,
                                          std::size_t x, std::uint64_t seed) {
  if (x >= mechanism.inner().input_size()) {
    return absl::OutOfRangeError(absl::StrCat("input ", x, " out of range"));
  }
  RandomStream rng(seed, 0);
  return mechanism.Sample(x, rng);
}

// (1 / (k+1)) * sum_i lifted[y_i] * prod_{j != i} dummy[y_j].
inline double TupleProbFromLifted(std::span<const double> lifted,
                                  std::span<const double> dummy,
                                  std::span<const std::size_t> tuple) {
  const std::size_t n = tuple.size();
  // prefix[i] = prod_{j < i} dummy[y_j]; suffix handled on the way back.
  std::vector<double> prefix(n + 1, 1.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * dummy[tuple[i]];
  double suffix = 1.0;
  double total = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    total += lifted[tuple[i]] * prefix[i] * suffix;
    suffix *= dummy[tuple[i]];
  }
  return total / static_cast<double>(n);
}

// Probability that the mechanism outputs `tuple` when the input is drawn from
// `dist`.
inline absl::StatusOr<double> TupleProb(const TuplingMechanism& mechanism,
                                        const ProbDist& dist,
                                        const TupleOutput& tuple) {
  if (tuple.values.size() != mechanism.tuple_length()) {
    return absl::InvalidArgumentError(
        absl::StrCat("tuple has length ", tuple.values.size(), ", expected ",
                     mechanism.tuple_length()));
  }
  for (std::size_t y : tuple.values) {
    if (y >= mechanism.inner().output_size()) {
      return absl::OutOfRangeError("tuple element out of range");
    }
  }
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted,
                            LiftChannel(mechanism.inner(), dist));
  return TupleProbFromLifted(lifted.mass(),
                             mechanism.dummy_distribution().mass(),
                             tuple.values);
}

// |Y|^(k+1), saturating at max int64.
inline std::int64_t TupleSpaceSize(const TuplingMechanism& mechanism) {
  const auto base = static_cast<std::int64_t>(mechanism.inner().output_size());
  std::int64_t size = 1;
  for (std::size_t i = 0; i < mechanism.tuple_length(); ++i) {
    if (size > std::numeric_limits<std::int64_t>::max() / std::max<std::int64_t>(base, 1)) {
      return std::numeric_limits<std::int64_t>::max();
    }
    size *= base;
  }
  return size;
}

inline constexpr std::int64_t kMaxExactTuples = 1'000'000;

// Calls fn(tuple, probability) for every tuple in Y^(k+1) with the output
// distribution induced by `lifted` (the inner channel lifted to the input
// distribution). Returns an error if the tuple space exceeds
// kMaxExactTuples.
template <typename Fn>
absl::Status ForEachTuple(const TuplingMechanism& mechanism,
                          std::span<const double> lifted, Fn&& fn) {
  if (TupleSpaceSize(mechanism) > kMaxExactTuples) {
    return absl::InvalidArgumentError(absl::StrCat(
        "tuple space |Y|^(k+1) exceeds ", kMaxExactTuples,
        " outputs; use Monte-Carlo estimation"));
  }
  const std::size_t ny = mechanism.inner().output_size();
  const std::size_t n = mechanism.tuple_length();
  std::vector<std::size_t> tuple(n, 0);
  const auto dummy = mechanism.dummy_distribution().mass();
  while (true) {
    fn(std::span<const std::size_t>(tuple),
       TupleProbFromLifted(lifted, dummy, tuple));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++tuple[i] < ny) break;
      tuple[i] = 0;
      if (i == 0) return absl::OkStatus();
    }
  }
}

struct EstimationMode {
  enum class Kind { kExact, kMonteCarlo };
  Kind kind = Kind::kExact;
  MonteCarloOptions monte_carlo;

  static EstimationMode Exact() { return {}; }
  static EstimationMode MonteCarlo(MonteCarloOptions options) {
    return {Kind::kMonteCarlo, options};
  }
};

// Expected quality loss: E[min_i d(x, y_i)] with x drawn from `dist` and the
// tuple drawn from the mechanism on x. `domain` supplies d.
inline absl::StatusOr<Estimate> ExpectedLoss(const TuplingMechanism& mechanism,
                                             const ProbDist& dist,
                                             const Domain& domain,
                                             const EstimationMode& mode) {
  const Channel& inner = mechanism.inner();
  if (!SameSpace(*dist.space(), *inner.input_space()) ||
      domain.input()->size() != inner.input_size() ||
      domain.output()->size() != inner.output_size()) {
    return absl::InvalidArgumentError(
        "distribution, channel and distance table disagree on spaces");
  }
  const std::size_t ny = inner.output_size();
  const std::size_t k = static_cast<std::size_t>(mechanism.dummies());
  const auto dummy = mechanism.dummy_distribution().mass();

  if (mode.kind == EstimationMode::Kind::kExact) {
    // The inner output and the dummies are independent given x, so with
    // M = min_i d(x, y_i) and the distinct distances t_0 < t_1 < ... from x,
    //   P(M >= t) = P_A(d(x, s) >= t) * P_nu(d(x, y) >= t)^k,
    //   E[M] = t_0 + sum_{l >= 1} P(M >= t_l) (t_l - t_{l-1}).
    double total = 0.0;
    std::vector<std::size_t> order(ny);
    for (std::size_t x = 0; x < dist.size(); ++x) {
      if (dist[x] == 0.0) continue;
      for (std::size_t y = 0; y < ny; ++y) order[y] = y;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return domain.distance(x, a) > domain.distance(x, b);
      });
      // Walk outward-in, accumulating the tail masses at each distance level.
      double tail_inner = 0.0;
      double tail_dummy = 0.0;
      double conditional = 0.0;
      std::size_t i = 0;
      while (i < ny) {
        const double t = domain.distance(x, order[i]);
        while (i < ny && domain.distance(x, order[i]) == t) {
          tail_inner += inner(x, order[i]);
          tail_dummy += dummy[order[i]];
          ++i;
        }
        const double next = i < ny ? domain.distance(x, order[i]) : 0.0;
        const double survival =
            i < ny ? std::min(1.0, tail_inner) *
                         std::pow(std::min(1.0, tail_dummy),
                                  static_cast<double>(k))
                   : 1.0;
        conditional += survival * (t - next);
      }
      total += dist[x] * conditional;
    }
    return Estimate{total, 0.0, 0};
  }

  const MonteCarloOptions& options = mode.monte_carlo;
  if (options.samples < 1) {
    return absl::InvalidArgumentError("Monte-Carlo needs at least one sample");
  }
  const DiscreteSampler input_sampler(dist.mass());
  std::vector<MomentAccumulator> blocks(BlockCount(options.samples));
  ForEachBlock(options.samples, options.threads,
               [&](std::int64_t b, std::int64_t begin, std::int64_t end) {
                 RandomStream rng(options.seed, static_cast<std::uint64_t>(b));
                 for (std::int64_t n = begin; n < end; ++n) {
                   const std::size_t x = input_sampler(rng);
                   const TupleOutput tuple = mechanism.Sample(x, rng);
                   double nearest = std::numeric_limits<double>::infinity();
                   for (std::size_t y : tuple.values) {
                     nearest = std::min(nearest, domain.distance(x, y));
                   }
                   blocks[b].Add(nearest);
                 }
               });
  MomentAccumulator total;
  for (const auto& block : blocks) total.Merge(block);
  return total.ToEstimate();
}

// Fraction of outputs y (uniform over Y) with lifted[y] <= beta.
inline double LambdaFraction(std::span<const double> lifted, double beta) {
  const auto count = std::count_if(lifted.begin(), lifted.end(),
                                   [&](double p) { return p <= beta; });
  return static_cast<double>(count) / static_cast<double>(lifted.size());
}

// Whether `dist` belongs to the class of distributions whose lifted output
// probability is at most beta on at least a (1 - eta) fraction of Y, with y
// drawn uniformly from Y.
inline absl::StatusOr<bool> LambdaMembership(const Channel& channel,
                                             const ProbDist& dist, double beta,
                                             double eta) {
  if (!(beta >= 0.0 && beta <= 1.0) || !(eta >= 0.0 && eta <= 1.0)) {
    return absl::InvalidArgumentError("beta and eta must lie in [0,1]");
  }
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted, LiftChannel(channel, dist));
  // Compare counts so that eta = j/|Y| is not lost to rounding.
  const double ny = static_cast<double>(lifted.size());
  const double outside = ny - LambdaFraction(lifted.mass(), beta) * ny;
  return outside <= eta * ny + 1e-9;
}

// (epsilon_alpha, delta_alpha)-distribution privacy of the tupling mechanism
// with uniform dummies, valid for pairs from the (beta, eta) class:
//   epsilon_alpha = ln((k + (alpha + beta)|Y|) / (k - alpha |Y|))
//   delta_alpha   = 2 exp(-2 alpha^2 / (k beta^2)) + eta
struct TuplingBound {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double epsilon_alpha = 0.0;
  double delta_alpha = 0.0;
};

inline absl::StatusOr<TuplingBound> TuplingBoundAt(int dummies,
                                                   std::size_t output_size,
                                                   double alpha, double beta,
                                                   double eta) {
  if (dummies < 1 || output_size == 0) {
    return absl::InvalidArgumentError("need k >= 1 and nonempty Y");
  }
  const double k = dummies;
  const double ny = static_cast<double>(output_size);
  if (!(alpha > 0.0 && alpha < k / ny)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must lie in (0, k/|Y|) = (0, ", k / ny, ")"));
  }
  if (!(beta >= 0.0 && beta <= 1.0) || !(eta >= 0.0 && eta <= 1.0)) {
    return absl::InvalidArgumentError("beta and eta must lie in [0,1]");
  }
  TuplingBound bound{alpha, beta, eta, 0.0, 0.0};
  bound.epsilon_alpha =
      std::log((k + (alpha + beta) * ny) / (k - alpha * ny));
  bound.delta_alpha =
      (beta == 0.0 ? 0.0
                   : 2.0 * std::exp(-2.0 * alpha * alpha / (k * beta * beta))) +
      eta;
  return bound;
}

// Minimizes epsilon_alpha over alpha subject to delta_alpha <= delta.
// epsilon_alpha is increasing in alpha and delta_alpha decreasing, so the
// optimum is the smallest admissible alpha,
//   alpha* = beta * sqrt(k ln(2 / (delta - eta)) / 2).
// Returns nullopt when alpha* >= k/|Y| (no admissible alpha).
inline absl::StatusOr<std::optional<TuplingBound>> TightestTuplingBound(
    int dummies, std::size_t output_size, double beta, double eta,
    double delta) {
  if (dummies < 1 || output_size == 0) {
    return absl::InvalidArgumentError("need k >= 1 and nonempty Y");
  }
  if (!(delta > 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError("target delta must lie in (0,1]");
  }
  if (!(beta >= 0.0 && beta <= 1.0) || !(eta >= 0.0 && eta <= 1.0)) {
    return absl::InvalidArgumentError("beta and eta must lie in [0,1]");
  }
  if (eta >= delta) return std::optional<TuplingBound>();
  const double k = dummies;
  const double upper = k / static_cast<double>(output_size);
  const double slack = delta - eta;
  double alpha = slack >= 2.0 || beta == 0.0
                     ? 0.0
                     : beta * std::sqrt(k * std::log(2.0 / slack) / 2.0);
  // The infimum at alpha = 0 is not attained; step just inside the interval.
  if (alpha == 0.0) alpha = upper * 1e-12;
  if (alpha >= upper) return std::optional<TuplingBound>();
  DISTPRIV_ASSIGN_OR_RETURN(
      TuplingBound bound, TuplingBoundAt(dummies, output_size, alpha, beta, eta));
  // Rounding in alpha* can leave delta_alpha a hair above delta.
  if (bound.delta_alpha > delta) {
    alpha = std::nextafter(alpha, upper);
    if (alpha >= upper) return std::optional<TuplingBound>();
    DISTPRIV_ASSIGN_OR_RETURN(
        bound, TuplingBoundAt(dummies, output_size, alpha, beta, eta));
  }
  return std::optional<TuplingBound>(bound);
}

// Smallest beta such that both lifted distributions put mass <= beta on at
// least (|Y| - excluded) outputs.
inline double SmallestClassBeta(std::span<const double> lifted0,
                                std::span<const double> lifted1,
                                std::size_t excluded) {
  auto quantile = [&](std::span<const double> lifted) {
    std::vector<double> sorted(lifted.begin(), lifted.end());
    std::sort(sorted.begin(), sorted.end());
    return sorted[sorted.size() - 1 - excluded];
  };
  return std::max(quantile(lifted0), quantile(lifted1));
}

// The tightest bound for the pair (dist0, dist1) at target delta: beta and
// eta are measured from the lifted distributions (eta ranging over multiples
// of 1/|Y| below delta) and alpha is optimized. Refuses non-uniform dummies.
// Returns nullopt if no (alpha, eta) reaches the target delta.
inline absl::StatusOr<std::optional<TuplingBound>> MeasuredTuplingBound(
    const TuplingMechanism& mechanism, const ProbDist& dist0,
    const ProbDist& dist1, double delta) {
  if (!mechanism.has_uniform_dummies()) {
    return absl::InvalidArgumentError(
        "the tupling bound only holds for uniform dummies");
  }
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted0,
                            LiftChannel(mechanism.inner(), dist0));
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted1,
                            LiftChannel(mechanism.inner(), dist1));
  const std::size_t ny = mechanism.inner().output_size();
  std::optional<TuplingBound> best;
  for (std::size_t excluded = 0; excluded < ny; ++excluded) {
    const double eta = static_cast<double>(excluded) / static_cast<double>(ny);
    if (eta >= delta) break;
    const double beta =
        SmallestClassBeta(lifted0.mass(), lifted1.mass(), excluded);
    DISTPRIV_ASSIGN_OR_RETURN(
        auto bound,
        TightestTuplingBound(mechanism.dummies(), ny, beta, eta, delta));
    if (bound.has_value() &&
        (!best.has_value() || bound->epsilon_alpha < best->epsilon_alpha)) {
      best = bound;
    }
  }
  return best;
}

}  // namespace distpriv

#endif  // DISTPRIV_TUPLING_H_
