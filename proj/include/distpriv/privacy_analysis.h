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

#ifndef DISTPRIV_PRIVACY_ANALYSIS_H_
#define DISTPRIV_PRIVACY_ANALYSIS_H_

// Exact and Monte-Carlo privacy quantification for channels and the tupling
// mechanism: DP, extended DP (XDP), distribution privacy (DistP) and its
// extended form (XDistP), together with transfer bounds, a composition
// calculus, the Bayes factor, max divergence and the Bayes-decision attack
// success rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "distpriv/core_model.h"
#include "distpriv/csv.h"
#include "distpriv/monte_carlo.h"
#include "distpriv/status_macros.h"
#include "distpriv/transport.h"
#include "distpriv/tupling.h"

namespace distpriv {

enum class Notion { kDP, kXDP, kDistP, kXDistP };
enum class Method { kExact, kMonteCarlo, kTheoretical };
enum class MetricKind { kNone, kUtilityDistance, kWassersteinInf };

inline std::string_view NotionName(Notion n) {
  switch (n) {
    case Notion::kDP:
      return "DP";
    case Notion::kXDP:
      return "XDP";
    case Notion::kDistP:
      return "DistP";
    case Notion::kXDistP:
      return "XDistP";
  }
  return "?";
}

inline std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kExact:
      return "exact";
    case Method::kMonteCarlo:
      return "monte-carlo";
    case Method::kTheoretical:
      return "theoretical";
  }
  return "?";
}

inline std::string_view MetricKindName(MetricKind m) {
  switch (m) {
    case MetricKind::kNone:
      return "none";
    case MetricKind::kUtilityDistance:
      return "d_u";
    case MetricKind::kWassersteinInf:
      return "W_inf";
  }
  return "?";
}

// An (epsilon, delta) guarantee or estimate. An unbounded epsilon is an
// explicit state; epsilon() then returns nullopt instead of an infinity.
class PrivacyReport {
 public:
  static absl::StatusOr<PrivacyReport> Bounded(
      double epsilon, double delta, Notion notion, Method method,
      MetricKind metric = MetricKind::kNone) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      return absl::InvalidArgumentError(
          absl::StrCat("epsilon must be finite and >= 0, got ", epsilon));
    }
    DISTPRIV_RETURN_IF_ERROR(CheckDelta(delta));
    return PrivacyReport(epsilon, delta, notion, method, metric);
  }

  static absl::StatusOr<PrivacyReport> Unbounded(
      double delta, Notion notion, Method method,
      MetricKind metric = MetricKind::kNone) {
    DISTPRIV_RETURN_IF_ERROR(CheckDelta(delta));
    return PrivacyReport(std::nullopt, delta, notion, method, metric);
  }

  PrivacyReport WithSamples(std::int64_t samples, std::uint64_t seed,
                            double standard_error) const {
    PrivacyReport copy = *this;
    copy.samples_ = samples;
    copy.seed_ = seed;
    copy.standard_error_ = standard_error;
    return copy;
  }

  bool bounded() const { return epsilon_.has_value(); }
  std::optional<double> epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  Notion notion() const { return notion_; }
  Method method() const { return method_; }
  MetricKind metric() const { return metric_; }
  std::int64_t samples() const { return samples_; }
  std::uint64_t seed() const { return seed_; }
  double standard_error() const { return standard_error_; }

  // Flat record: epsilon, delta, notion, method, metric, n_samples, seed.
  static std::vector<std::string> RecordHeader() {
    return {"epsilon", "delta", "notion", "method",
            "metric",  "n_samples", "seed"};
  }
  std::vector<std::string> Record() const {
    return {epsilon_.has_value() ? FormatDouble(*epsilon_) : "inf",
            FormatDouble(delta_),
            std::string(NotionName(notion_)),
            std::string(MethodName(method_)),
            std::string(MetricKindName(metric_)),
            absl::StrCat(samples_),
            absl::StrCat(seed_)};
  }

 private:
  static absl::Status CheckDelta(double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("delta must lie in [0,1], got ", delta));
    }
    return absl::OkStatus();
  }

  PrivacyReport(std::optional<double> epsilon, double delta, Notion notion,
                Method method, MetricKind metric)
      : epsilon_(epsilon),
        delta_(delta),
        notion_(notion),
        method_(method),
        metric_(metric) {}

  std::optional<double> epsilon_;
  double delta_;
  Notion notion_;
  Method method_;
  MetricKind metric_;
  std::int64_t samples_ = 0;
  std::uint64_t seed_ = 0;
  double standard_error_ = 0.0;
};

// A real number or one of the two infinities, kept apart from arithmetic.
class ExtendedReal {
 public:
  static ExtendedReal Finite(double v) { return ExtendedReal(Kind::kFinite, v); }
  static ExtendedReal PlusInfinity() {
    return ExtendedReal(Kind::kPlusInfinity, 0.0);
  }
  static ExtendedReal MinusInfinity() {
    return ExtendedReal(Kind::kMinusInfinity, 0.0);
  }

  bool is_finite() const { return kind_ == Kind::kFinite; }
  bool is_plus_infinity() const { return kind_ == Kind::kPlusInfinity; }
  bool is_minus_infinity() const { return kind_ == Kind::kMinusInfinity; }
  // Only meaningful when is_finite().
  double value() const { return value_; }

 private:
  enum class Kind { kFinite, kPlusInfinity, kMinusInfinity };
  ExtendedReal(Kind kind, double value) : kind_(kind), value_(value) {}
  Kind kind_;
  double value_;
};

struct EpsilonDelta {
  double epsilon = 0.0;
  double delta = 0.0;
};

namespace internal {

// max over y with p[y] > 0 of ln(p[y] / q[y]), floored at 0; nullopt when
// some q[y] = 0 < p[y].
inline std::optional<double> PairEpsilon(std::span<const double> p,
                                         std::span<const double> q) {
  double largest = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (p[y] <= 0.0) continue;
    if (q[y] <= 0.0) return std::nullopt;
    largest = std::max(largest, std::log(p[y] / q[y]));
  }
  return largest;
}

// sum_y max(0, p[y] - e^eps q[y]).
inline double PairDelta(std::span<const double> p, std::span<const double> q,
                        double epsilon) {
  const double scale = std::exp(epsilon);
  double total = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    total += std::max(0.0, p[y] - scale * q[y]);
  }
  return total;
}

// Smallest eps >= 0 with PairDelta(p, q, eps) <= delta, or nullopt if no
// finite eps works. PairDelta is piecewise linear and decreasing in t = e^eps
// with breakpoints at the ratios p[y]/q[y]; the segment holding the answer is
// located by bisection over those ratios and then solved exactly.
inline std::optional<double> PairEpsilonForDelta(std::span<const double> p,
                                                 std::span<const double> q,
                                                 double delta) {
  if (delta <= 0.0) return PairEpsilon(p, q);
  auto f = [&](double t) {
    double total = 0.0;
    for (std::size_t y = 0; y < p.size(); ++y) {
      total += std::max(0.0, p[y] - t * q[y]);
    }
    return total;
  };
  double unmatched = 0.0;
  std::vector<double> ratios;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (p[y] <= 0.0) continue;
    if (q[y] <= 0.0) {
      unmatched += p[y];
    } else if (p[y] / q[y] > 1.0) {
      ratios.push_back(p[y] / q[y]);
    }
  }
  if (unmatched > delta) return std::nullopt;
  if (f(1.0) <= delta) return 0.0;
  std::sort(ratios.begin(), ratios.end());
  ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());
  // f(ratios.back()) == unmatched <= delta, so a first feasible breakpoint
  // exists.
  std::size_t lo = 0;
  std::size_t hi = ratios.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (f(ratios[mid]) <= delta) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const double upper = ratios[hi];
  const double lower = hi == 0 ? 1.0 : ratios[hi - 1];
  // On (lower, upper) the active set is {y : ratio >= upper} plus unmatched.
  double active_p = 0.0;
  double active_q = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (p[y] <= 0.0) continue;
    if (q[y] <= 0.0 || p[y] / q[y] >= upper) {
      active_p += p[y];
      active_q += q[y];
    }
  }
  double t = upper;
  if (active_q > 0.0) t = std::clamp((active_p - delta) / active_q, lower, upper);
  return std::max(0.0, std::log(t));
}

inline absl::Status CheckRelationOver(const AdjacencyRelation& relation,
                                      const Channel& channel) {
  if (relation.domain_size() != channel.input_size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "relation is over a domain of size ", relation.domain_size(),
        ", channel input has size ", channel.input_size()));
  }
  return absl::OkStatus();
}

}  // namespace internal

// Exact epsilon of (epsilon, delta)-DP w.r.t. `relation`. For delta = 0 this
// is the largest log-ratio max ln(A(x)[y] / A(x')[y]); for delta > 0 it is the
// smallest epsilon whose tight delta is <= delta.
inline absl::StatusOr<PrivacyReport> DpEpsilon(
    const Channel& channel, const AdjacencyRelation& relation, double delta) {
  DISTPRIV_RETURN_IF_ERROR(internal::CheckRelationOver(relation, channel));
  double largest = 0.0;
  for (const auto& [a, b] : relation.pairs()) {
    const auto eps =
        internal::PairEpsilonForDelta(channel.row(a), channel.row(b), delta);
    if (!eps.has_value()) {
      return PrivacyReport::Unbounded(delta, Notion::kDP, Method::kExact);
    }
    largest = std::max(largest, *eps);
  }
  return PrivacyReport::Bounded(largest, delta, Notion::kDP, Method::kExact);
}

// The least delta for which (epsilon, delta)-DP holds w.r.t. `relation`.
inline absl::StatusOr<double> TightDelta(const Channel& channel,
                                         const AdjacencyRelation& relation,
                                         double epsilon) {
  DISTPRIV_RETURN_IF_ERROR(internal::CheckRelationOver(relation, channel));
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("epsilon must be >= 0");
  }
  double largest = 0.0;
  for (const auto& [a, b] : relation.pairs()) {
    largest = std::max(
        largest, internal::PairDelta(channel.row(a), channel.row(b), epsilon));
  }
  return std::min(1.0, largest);
}

// Exact epsilon of (epsilon, d, 0)-XDP over all input pairs, with d taken
// from `metric` (defaults to the channel's input space).
inline absl::StatusOr<PrivacyReport> XdpEpsilon(
    const Channel& channel, const FiniteSpace* metric = nullptr,
    double delta = 0.0) {
  if (delta != 0.0) {
    return absl::UnimplementedError("XDP scans support delta = 0 only");
  }
  const FiniteSpace& d = metric != nullptr ? *metric : *channel.input_space();
  if (d.size() != channel.input_size()) {
    return absl::InvalidArgumentError("metric is over a different space");
  }
  double largest = 0.0;
  for (std::size_t a = 0; a < channel.input_size(); ++a) {
    for (std::size_t b = 0; b < channel.input_size(); ++b) {
      if (a == b) continue;
      const auto eps = internal::PairEpsilon(channel.row(a), channel.row(b));
      const double distance = d.distance(a, b);
      if (!eps.has_value() || (distance == 0.0 && *eps > 0.0)) {
        return PrivacyReport::Unbounded(0.0, Notion::kXDP, Method::kExact,
                                        MetricKind::kUtilityDistance);
      }
      if (distance > 0.0) largest = std::max(largest, *eps / distance);
    }
  }
  return PrivacyReport::Bounded(largest, 0.0, Notion::kXDP, Method::kExact,
                                MetricKind::kUtilityDistance);
}

using DistributionPairs = std::vector<std::pair<ProbDist, ProbDist>>;

// Exact DistP epsilon: DP of the lifted channel over the pairs, checked in
// both directions of every pair.
inline absl::StatusOr<PrivacyReport> DistpEpsilonExact(
    const Channel& channel, const DistributionPairs& pairs, double delta) {
  if (pairs.empty()) {
    return absl::InvalidArgumentError("empty set of distribution pairs");
  }
  double largest = 0.0;
  for (const auto& [d0, d1] : pairs) {
    DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted0, LiftChannel(channel, d0));
    DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted1, LiftChannel(channel, d1));
    for (const auto& [p, q] : {std::pair(lifted0.mass(), lifted1.mass()),
                               std::pair(lifted1.mass(), lifted0.mass())}) {
      const auto eps = internal::PairEpsilonForDelta(p, q, delta);
      if (!eps.has_value()) {
        return PrivacyReport::Unbounded(delta, Notion::kDistP, Method::kExact);
      }
      largest = std::max(largest, *eps);
    }
  }
  return PrivacyReport::Bounded(largest, delta, Notion::kDistP,
                                Method::kExact);
}

inline constexpr std::int64_t kMinDistpSamples = 10000;

namespace internal {

// ln(Q(lifted_num)[tuple] / Q(lifted_den)[tuple]); +inf when the denominator
// vanishes.
inline double TupleLogRatio(const TuplingMechanism& mechanism,
                            bool uniform_dummies,
                            std::span<const double> lifted_num,
                            std::span<const double> lifted_den,
                            std::span<const std::size_t> tuple) {
  double num = 0.0;
  double den = 0.0;
  if (uniform_dummies) {
    // The dummy factors are equal for every position and cancel.
    for (std::size_t y : tuple) {
      num += lifted_num[y];
      den += lifted_den[y];
    }
  } else {
    const auto dummy = mechanism.dummy_distribution().mass();
    num = TupleProbFromLifted(lifted_num, dummy, tuple);
    den = TupleProbFromLifted(lifted_den, dummy, tuple);
  }
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log(num / den);
}

// Empirical (1 - delta)-quantile of sorted values and a standard error from
// the order statistics one binomial standard deviation either side.
inline std::pair<double, double> UpperQuantile(std::vector<double>& values,
                                               double delta) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto at = [&](double rank) {
    const auto index = static_cast<std::int64_t>(std::ceil(rank)) - 1;
    return values[static_cast<std::size_t>(
        std::clamp<std::int64_t>(index, 0, values.size() - 1))];
  };
  const double rank = (1.0 - delta) * n;
  const double spread = std::sqrt(n * delta * (1.0 - delta));
  const double quantile = at(rank);
  const double lo = at(rank - spread);
  const double hi = at(rank + spread);
  const double se = std::isfinite(hi - lo) ? 0.5 * (hi - lo) : 0.0;
  return {quantile, se};
}

}  // namespace internal

// Monte-Carlo DistP estimate for the tupling mechanism on (dist0, dist1).
// Draws `samples` tuples from each side, evaluates the exact log-likelihood
// ratio of every draw, and reports the larger of the two directions'
// empirical (1 - delta)-quantiles, floored at 0.
inline absl::StatusOr<PrivacyReport> DistpEpsilonTuplingMc(
    const TuplingMechanism& mechanism, const ProbDist& dist0,
    const ProbDist& dist1, double delta, const MonteCarloOptions& options) {
  if (options.samples < kMinDistpSamples) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need at least ", kMinDistpSamples, " samples, got ", options.samples));
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in [0,1)");
  }
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted0,
                            LiftChannel(mechanism.inner(), dist0));
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted1,
                            LiftChannel(mechanism.inner(), dist1));
  const bool uniform = mechanism.has_uniform_dummies();
  double estimate = 0.0;
  double standard_error = 0.0;
  for (int direction = 0; direction < 2; ++direction) {
    const ProbDist& source = direction == 0 ? dist0 : dist1;
    const auto num = direction == 0 ? lifted0.mass() : lifted1.mass();
    const auto den = direction == 0 ? lifted1.mass() : lifted0.mass();
    const DiscreteSampler input_sampler(source.mass());
    std::vector<double> ratios(static_cast<std::size_t>(options.samples));
    ForEachBlock(options.samples, options.threads,
                 [&](std::int64_t b, std::int64_t begin, std::int64_t end) {
                   RandomStream rng(options.seed,
                                    (static_cast<std::uint64_t>(direction)
                                     << 32) | static_cast<std::uint64_t>(b));
                   for (std::int64_t n = begin; n < end; ++n) {
                     const std::size_t x = input_sampler(rng);
                     const TupleOutput tuple = mechanism.Sample(x, rng);
                     ratios[n] = internal::TupleLogRatio(mechanism, uniform,
                                                         num, den,
                                                         tuple.values);
                   }
                 });
    const auto [quantile, se] = internal::UpperQuantile(ratios, delta);
    if (!std::isfinite(quantile)) {
      return PrivacyReport::Unbounded(delta, Notion::kDistP,
                                      Method::kMonteCarlo)
          .value()
          .WithSamples(options.samples, options.seed, 0.0);
    }
    if (direction == 0 || quantile > estimate) {
      estimate = std::max(estimate, quantile);
      standard_error = se;
    }
  }
  DISTPRIV_ASSIGN_OR_RETURN(
      PrivacyReport report,
      PrivacyReport::Bounded(std::max(0.0, estimate), delta, Notion::kDistP,
                             Method::kMonteCarlo));
  return report.WithSamples(options.samples, options.seed, standard_error);
}

// K(dist0, dist1, y) = lifted(dist0)[y] / lifted(dist1)[y].
inline absl::StatusOr<ExtendedReal> BayesFactor(const Channel& channel,
                                                const ProbDist& dist0,
                                                const ProbDist& dist1,
                                                std::size_t y) {
  if (y >= channel.output_size()) {
    return absl::OutOfRangeError("output index out of range");
  }
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted0, LiftChannel(channel, dist0));
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist lifted1, LiftChannel(channel, dist1));
  if (lifted1[y] == 0.0) {
    if (lifted0[y] == 0.0) {
      return absl::InvalidArgumentError(
          "output has probability zero under both distributions");
    }
    return ExtendedReal::PlusInfinity();
  }
  return ExtendedReal::Finite(lifted0[y] / lifted1[y]);
}

// Exponent eps * (d + 2c) guaranteed against an attacker whose beliefs are
// within c of the true distributions.
inline absl::StatusOr<double> CloseBeliefBoundXdistp(double epsilon,
                                                     double distance,
                                                     double c) {
  if (!(epsilon >= 0.0) || !(distance >= 0.0) || !(c >= 0.0)) {
    return absl::InvalidArgumentError("epsilon, distance and c must be >= 0");
  }
  return epsilon * (distance + 2.0 * c);
}

// (3 eps, (1 + e^eps + e^{2 eps}) delta) against close-belief attackers,
// with delta capped at 1.
inline absl::StatusOr<EpsilonDelta> CloseBeliefBoundDistp(double epsilon,
                                                          double delta) {
  if (!(epsilon >= 0.0) || !(delta >= 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError("need epsilon >= 0 and delta in [0,1]");
  }
  const double factor = 1.0 + std::exp(epsilon) + std::exp(2.0 * epsilon);
  return EpsilonDelta{3.0 * epsilon, std::min(1.0, factor * delta)};
}

// (eps, delta)-DP w.r.t. a relation of size |relation| gives
// (eps, delta * |relation|)-DistP w.r.t. its lifting; delta capped at 1.
inline absl::StatusOr<EpsilonDelta> DpToDistpBound(double epsilon,
                                                   double delta,
                                                   std::size_t relation_size) {
  if (!(epsilon >= 0.0) || !(delta >= 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError("need epsilon >= 0 and delta in [0,1]");
  }
  return EpsilonDelta{epsilon,
                      std::min(1.0, delta * static_cast<double>(relation_size))};
}

// (eps, d, delta)-XDP w.r.t. `relation` gives, for a pair in the lifted
// relation whose coupling attains W_inf, the exponent eps * W_inf(dist0,
// dist1) with delta * |relation|.
inline absl::StatusOr<PrivacyReport> XdpToXdistpBound(
    double epsilon, double delta, const AdjacencyRelation& relation,
    const ProbDist& dist0, const ProbDist& dist1) {
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("epsilon must be >= 0");
  }
  DISTPRIV_ASSIGN_OR_RETURN(auto witness,
                            InLiftedInfRelation(dist0, dist1, relation));
  if (!witness.has_value()) {
    return absl::FailedPreconditionError(
        "pair is not adjacent under the W_inf-lifted relation");
  }
  DISTPRIV_ASSIGN_OR_RETURN(TransportResult transport,
                            WassersteinInf(dist0, dist1));
  return PrivacyReport::Bounded(
      epsilon * transport.value,
      std::min(1.0, delta * static_cast<double>(relation.size())),
      Notion::kXDistP, Method::kTheoretical, MetricKind::kWassersteinInf);
}

struct CompositionMode {
  enum class Kind {
    // Both mechanisms see the same input.
    kSequentialShared,
    // Each mechanism sees an independently drawn input.
    kSequentialIndependent,
    kPostProcess,
    // Pre-processing by a c-stable transformation.
    kPreProcess,
  };
  Kind kind = Kind::kPostProcess;
  std::size_t relation_size = 1;
  double stability = 1.0;

  static CompositionMode SequentialShared(std::size_t relation_size) {
    return {Kind::kSequentialShared, relation_size, 1.0};
  }
  static CompositionMode SequentialIndependent() {
    return {Kind::kSequentialIndependent, 1, 1.0};
  }
  static CompositionMode PostProcess() { return {Kind::kPostProcess, 1, 1.0}; }
  static CompositionMode PreProcess(double c) {
    return {Kind::kPreProcess, 1, c};
  }
};

inline absl::StatusOr<PrivacyReport> Compose(
    std::span<const PrivacyReport> reports, const CompositionMode& mode) {
  if (reports.empty()) return absl::InvalidArgumentError("nothing to compose");
  for (const PrivacyReport& r : reports) {
    if (!r.bounded()) {
      return absl::FailedPreconditionError(
          "cannot compose an unbounded privacy report");
    }
    if (r.notion() != reports.front().notion()) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot compose ",
                       std::string(NotionName(reports.front().notion())),
                       " with ", std::string(NotionName(r.notion()))));
    }
  }
  const PrivacyReport& first = reports.front();
  using Kind = CompositionMode::Kind;
  if (mode.kind == Kind::kPostProcess || mode.kind == Kind::kPreProcess) {
    if (reports.size() != 1) {
      return absl::InvalidArgumentError(
          "pre/post-processing applies to exactly one report");
    }
    if (mode.kind == Kind::kPostProcess) return first;
    if (!(mode.stability > 0.0) || !std::isfinite(mode.stability)) {
      return absl::InvalidArgumentError("stability must be positive");
    }
    return PrivacyReport::Bounded(mode.stability * *first.epsilon(),
                                  first.delta(), first.notion(),
                                  Method::kTheoretical, first.metric());
  }
  double epsilon = 0.0;
  double delta = 0.0;
  for (const PrivacyReport& r : reports) {
    epsilon += *r.epsilon();
    delta += r.delta();
  }
  if (mode.kind == Kind::kSequentialShared) {
    delta *= static_cast<double>(mode.relation_size);
  }
  return PrivacyReport::Bounded(epsilon, std::min(1.0, delta), first.notion(),
                                Method::kTheoretical, first.metric());
}

// delta-approximate max divergence
//   max over R with mu0[R] >= delta of ln((mu0[R] - delta) / mu1[R]).
// The optimum is attained on a superlevel set of mu0/mu1, so prefixes of the
// elements sorted by decreasing ratio are sufficient.
inline absl::StatusOr<ExtendedReal> MaxDivergence(const ProbDist& mu0,
                                                  const ProbDist& mu1,
                                                  double delta) {
  if (!SameSpace(*mu0.space(), *mu1.space())) {
    return absl::InvalidArgumentError("distributions over different spaces");
  }
  if (!(delta >= 0.0)) return absl::InvalidArgumentError("delta must be >= 0");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    if (mu0[i] > 0.0) order.push_back(i);
  }
  auto ratio = [&](std::size_t i) {
    return mu1[i] == 0.0 ? std::numeric_limits<double>::infinity()
                         : mu0[i] / mu1[i];
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return ratio(a) > ratio(b);
                   });
  double best = -std::numeric_limits<double>::infinity();
  double p0 = 0.0;
  double p1 = 0.0;
  for (std::size_t i : order) {
    p0 += mu0[i];
    p1 += mu1[i];
    const double num = p0 - delta;
    if (num <= 0.0) continue;
    if (p1 == 0.0) return ExtendedReal::PlusInfinity();
    best = std::max(best, std::log(num / p1));
  }
  // Every admissible R leaves mu0[R] - delta = 0, or none is admissible.
  if (!std::isfinite(best)) return ExtendedReal::MinusInfinity();
  return ExtendedReal::Finite(best);
}

namespace internal {

inline absl::Status CheckAttributeModel(const Channel& channel,
                                        std::span<const ProbDist> dists,
                                        std::span<const double> priors) {
  if (dists.empty() || dists.size() != priors.size()) {
    return absl::InvalidArgumentError(
        "need one prior per attribute distribution");
  }
  double total = 0.0;
  for (double p : priors) {
    if (!(p >= 0.0)) return absl::InvalidArgumentError("negative prior");
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    return absl::InvalidArgumentError("priors must sum to 1");
  }
  for (const ProbDist& d : dists) {
    if (!SameSpace(*d.space(), *channel.input_space())) {
      return absl::InvalidArgumentError(
          "attribute distribution is not over the channel input space");
    }
  }
  return absl::OkStatus();
}

// argmax_a priors[a] * likelihood(a), lowest index on ties.
template <typename Likelihood>
std::size_t BayesDecision(std::span<const double> priors,
                          Likelihood likelihood) {
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t a = 0; a < priors.size(); ++a) {
    const double score = priors[a] * likelihood(a);
    if (score > best_score) {
      best = a;
      best_score = score;
    }
  }
  return best;
}

}  // namespace internal

// Probability that a Bayes-decision attacker who sees one channel output
// guesses the attribute correctly, when the attribute a is drawn from
// `priors`, the input from dists[a], and the output from the channel.
inline absl::StatusOr<Estimate> AttackSuccessRate(
    const Channel& channel, std::span<const ProbDist> dists,
    std::span<const double> priors, const EstimationMode& mode) {
  DISTPRIV_RETURN_IF_ERROR(
      internal::CheckAttributeModel(channel, dists, priors));
  std::vector<ProbDist> lifted;
  for (const ProbDist& d : dists) {
    DISTPRIV_ASSIGN_OR_RETURN(ProbDist l, LiftChannel(channel, d));
    lifted.push_back(std::move(l));
  }
  if (mode.kind == EstimationMode::Kind::kExact) {
    double success = 0.0;
    for (std::size_t y = 0; y < channel.output_size(); ++y) {
      const std::size_t guess = internal::BayesDecision(
          priors, [&](std::size_t a) { return lifted[a][y]; });
      success += priors[guess] * lifted[guess][y];
    }
    return Estimate{success, 0.0, 0};
  }
  const MonteCarloOptions& options = mode.monte_carlo;
  if (options.samples < 1) {
    return absl::InvalidArgumentError("Monte-Carlo needs at least one sample");
  }
  const DiscreteSampler attribute_sampler(priors);
  std::vector<DiscreteSampler> input_samplers;
  for (const ProbDist& d : dists) input_samplers.emplace_back(d.mass());
  std::vector<DiscreteSampler> row_samplers;
  for (std::size_t x = 0; x < channel.input_size(); ++x) {
    row_samplers.emplace_back(channel.row(x));
  }
  std::vector<MomentAccumulator> blocks(BlockCount(options.samples));
  ForEachBlock(options.samples, options.threads,
               [&](std::int64_t b, std::int64_t begin, std::int64_t end) {
                 RandomStream rng(options.seed, static_cast<std::uint64_t>(b));
                 for (std::int64_t n = begin; n < end; ++n) {
                   const std::size_t a = attribute_sampler(rng);
                   const std::size_t x = input_samplers[a](rng);
                   const std::size_t y = row_samplers[x](rng);
                   const std::size_t guess = internal::BayesDecision(
                       priors, [&](std::size_t c) { return lifted[c][y]; });
                   blocks[b].Add(guess == a ? 1.0 : 0.0);
                 }
               });
  MomentAccumulator total;
  for (const auto& block : blocks) total.Merge(block);
  return total.ToEstimate();
}

// As above, for an attacker observing a whole tuple of the tupling mechanism.
// Exact mode enumerates Y^(k+1) and is limited to kMaxExactTuples outputs.
inline absl::StatusOr<Estimate> AttackSuccessRate(
    const TuplingMechanism& mechanism, std::span<const ProbDist> dists,
    std::span<const double> priors, const EstimationMode& mode) {
  DISTPRIV_RETURN_IF_ERROR(
      internal::CheckAttributeModel(mechanism.inner(), dists, priors));
  std::vector<ProbDist> lifted;
  for (const ProbDist& d : dists) {
    DISTPRIV_ASSIGN_OR_RETURN(ProbDist l, LiftChannel(mechanism.inner(), d));
    lifted.push_back(std::move(l));
  }
  const auto dummy = mechanism.dummy_distribution().mass();
  auto likelihood = [&](std::size_t a, std::span<const std::size_t> tuple) {
    return TupleProbFromLifted(lifted[a].mass(), dummy, tuple);
  };
  if (mode.kind == EstimationMode::Kind::kExact) {
    double success = 0.0;
    DISTPRIV_RETURN_IF_ERROR(ForEachTuple(
        mechanism, lifted.front().mass(),
        [&](std::span<const std::size_t> tuple, double) {
          const std::size_t guess = internal::BayesDecision(
              priors, [&](std::size_t a) { return likelihood(a, tuple); });
          success += priors[guess] * likelihood(guess, tuple);
        }));
    return Estimate{success, 0.0, 0};
  }
  const MonteCarloOptions& options = mode.monte_carlo;
  if (options.samples < 1) {
    return absl::InvalidArgumentError("Monte-Carlo needs at least one sample");
  }
  const DiscreteSampler attribute_sampler(priors);
  std::vector<DiscreteSampler> input_samplers;
  for (const ProbDist& d : dists) input_samplers.emplace_back(d.mass());
  std::vector<MomentAccumulator> blocks(BlockCount(options.samples));
  ForEachBlock(options.samples, options.threads,
               [&](std::int64_t b, std::int64_t begin, std::int64_t end) {
                 RandomStream rng(options.seed, static_cast<std::uint64_t>(b));
                 for (std::int64_t n = begin; n < end; ++n) {
                   const std::size_t a = attribute_sampler(rng);
                   const std::size_t x = input_samplers[a](rng);
                   const TupleOutput tuple = mechanism.Sample(x, rng);
                   const std::size_t guess =
                       internal::BayesDecision(priors, [&](std::size_t c) {
                         return likelihood(c, tuple.values);
                       });
                   blocks[b].Add(guess == a ? 1.0 : 0.0);
                 }
               });
  MomentAccumulator total;
  for (const auto& block : blocks) total.Merge(block);
  return total.ToEstimate();
}

}  // namespace distpriv

#endif  // DISTPRIV_PRIVACY_ANALYSIS_H_
