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


#include "distpriv/tupling.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "distpriv/mechanisms.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace distpriv {
namespace {

using ::distpriv::testing_util::IndexSpace;
using ::distpriv::testing_util::IsOk;
using ::distpriv::testing_util::IsOkAndHolds;
using ::distpriv::testing_util::LineSpace;
using ::distpriv::testing_util::RandomChannel;
using ::distpriv::testing_util::RandomDist;
using ::distpriv::testing_util::StatusIs;
using ::distpriv::testing_util::ValueOrDie;
using ::testing::DoubleNear;

SpacePtr Grid3x3() {
  std::vector<std::pair<double, double>> points;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) points.emplace_back(c, r);
  }
  return ValueOrDie(FiniteSpace::Planar(FiniteSpace::IndexLabels(9), points));
}

// Draws (x, tuple) pairs with x from `dist` and returns tuple frequencies.
std::map<std::vector<std::size_t>, std::int64_t> TupleCounts(
    const TuplingMechanism& m, const ProbDist& dist, std::int64_t n,
    std::uint64_t seed) {
  RandomStream rng(seed, 0);
  DiscreteSampler inputs(dist.mass());
  std::map<std::vector<std::size_t>, std::int64_t> counts;
  for (std::int64_t i = 0; i < n; ++i) {
    ++counts[m.Sample(inputs(rng), rng).values];
  }
  return counts;
}

// Expected loss straight from the algorithm: sum over x, the inner output s
// and every dummy vector r of the probability times min(d(x,s), d(x,r_j)).
// The insertion position does not change the minimum.
double BruteForceLoss(const TuplingMechanism& m, const ProbDist& dist,
                      const Domain& domain) {
  const std::size_t ny = m.inner().output_size();
  const std::size_t k = static_cast<std::size_t>(m.dummies());
  double total = 0.0;
  for (std::size_t x = 0; x < dist.size(); ++x) {
    for (std::size_t s = 0; s < ny; ++s) {
      std::vector<std::size_t> r(k, 0);
      while (true) {
        double p = dist[x] * m.inner()(x, s);
        double nearest = domain.distance(x, s);
        for (std::size_t y : r) {
          p *= m.dummy_distribution()[y];
          nearest = std::min(nearest, domain.distance(x, y));
        }
        total += p * nearest;
        std::size_t i = 0;
        while (i < k && ++r[i] == ny) r[i++] = 0;
        if (i == k) break;
      }
    }
  }
  return total;
}

TEST(TuplingMechanismTest, RejectsZeroDummies) {
  Channel id = Channel::Identity(IndexSpace(3));
  EXPECT_THAT(TuplingMechanism::WithUniformDummies(0, id).status(),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(TuplingMechanism::WithoutDummies(id), IsOk());
  ProbDist wrong = ValueOrDie(ProbDist::Uniform(IndexSpace(4)));
  EXPECT_THAT(TuplingMechanism::Create(2, wrong, id).status(),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

TEST(SampleTest, OneDummyIsInsertedEitherSide) {
  SpacePtr s = IndexSpace(3);
  ProbDist point = ValueOrDie(PointDist(s, 2));
  TuplingMechanism m = ValueOrDie(
      TuplingMechanism::Create(1, point, Channel::Identity(s)));
  const int n = 20000;
  int first = 0;
  for (int seed = 0; seed < n; ++seed) {
    TupleOutput t = ValueOrDie(Sample(m, 0, seed));
    ASSERT_EQ(t.values.size(), 2u);
    if (t.values == std::vector<std::size_t>{0, 2}) {
      ++first;
    } else {
      EXPECT_EQ(t.values, (std::vector<std::size_t>{2, 0}));
    }
  }
  // Standard error of the frequency is 0.5 / sqrt(n).
  EXPECT_NEAR(static_cast<double>(first) / n, 0.5, 4.0 * 0.5 / std::sqrt(n));
}

TEST(SampleTest, DeterministicForSeed) {
  SpacePtr s = Grid3x3();
  TuplingMechanism m = ValueOrDie(TuplingMechanism::WithUniformDummies(
      5, ValueOrDie(RestrictedLaplace(s, 1.0, 1.5))));
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    EXPECT_EQ(ValueOrDie(Sample(m, 4, seed)), ValueOrDie(Sample(m, 4, seed)));
    EXPECT_EQ(ValueOrDie(Sample(m, 4, seed)).values.size(), 6u);
  }
  EXPECT_THAT(Sample(m, 9, 0).status(),
              StatusIs(absl::StatusCode::kOutOfRange));
}

TEST(TupleProbTest, TwoOutputExample) {
  SpacePtr s = IndexSpace(2);
  TuplingMechanism m = ValueOrDie(
      TuplingMechanism::WithUniformDummies(1, Channel::Identity(s)));
  ProbDist dist = ValueOrDie(ProbDist::Create(s, {0.7, 0.3}));
  auto p = [&](std::size_t a, std::size_t b) {
    return ValueOrDie(TupleProb(m, dist, TupleOutput{{a, b}}));
  };
  EXPECT_NEAR(p(0, 0), 0.35, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.25, 1e-15);
  EXPECT_NEAR(p(1, 0), 0.25, 1e-15);
  EXPECT_NEAR(p(1, 1), 0.15, 1e-15);
  EXPECT_NEAR(p(0, 0) + p(0, 1) + p(1, 0) + p(1, 1), 1.0, 1e-15);
  EXPECT_THAT(TupleProb(m, dist, TupleOutput{{0}}).status(),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(TupleProb(m, dist, TupleOutput{{0, 2}}).status(),
              StatusIs(absl::StatusCode::kOutOfRange));
}

TEST(TupleProbTest, PointDummyMustAppear) {
  SpacePtr s = IndexSpace(3);
  std::mt19937_64 rng(1);
  TuplingMechanism m = ValueOrDie(TuplingMechanism::Create(
      1, ValueOrDie(PointDist(s, 1)), RandomChannel(rng, s, s)));
  ProbDist dist = RandomDist(rng, s);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      const double p = ValueOrDie(TupleProb(m, dist, TupleOutput{{a, b}}));
      if (a != 1 && b != 1) {
        EXPECT_EQ(p, 0.0);
      }
    }
  }
}

TEST(TupleProbTest, SumsToOne) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    SpacePtr s = IndexSpace(2 + trial % 3);
    TuplingMechanism m = ValueOrDie(TuplingMechanism::Create(
        1 + trial % 3, RandomDist(rng, s, 3), RandomChannel(rng, s, s, 3)));
    ProbDist dist = RandomDist(rng, s);
    ProbDist lifted = ValueOrDie(LiftChannel(m.inner(), dist));
    double total = 0.0;
    ASSERT_THAT(ForEachTuple(m, lifted.mass(),
                             [&](std::span<const std::size_t>, double p) {
                               total += p;
                             }),
                IsOk());
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(TupleProbTest, ForEachTupleRefusesHugeSpaces) {
  TuplingMechanism m = ValueOrDie(TuplingMechanism::WithUniformDummies(
      5, Channel::Identity(IndexSpace(10))));
  EXPECT_EQ(TupleSpaceSize(m), 1'000'000);
  std::vector<double> lifted(10, 0.1);
  int calls = 0;
  EXPECT_THAT(ForEachTuple(m, lifted,
                           [&](std::span<const std::size_t>, double) {
                             ++calls;
                           }),
              IsOk());
  EXPECT_EQ(calls, 1'000'000);
  TuplingMechanism big = ValueOrDie(TuplingMechanism::WithUniformDummies(
      6, Channel::Identity(IndexSpace(10))));
  EXPECT_THAT(ForEachTuple(big, lifted,
                           [](std::span<const std::size_t>, double) {}),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

// Frequencies of every tuple over 10^6 draws against the exact formula.
void ExpectFrequenciesMatch(const TuplingMechanism& m, const ProbDist& dist,
                            double sigmas) {
  const std::int64_t n = 1'000'000;
  auto counts = TupleCounts(m, dist, n, 7);
  ProbDist lifted = ValueOrDie(LiftChannel(m.inner(), dist));
  ASSERT_THAT(
      ForEachTuple(m, lifted.mass(),
                   [&](std::span<const std::size_t> t, double p) {
                     const std::vector<std::size_t> key(t.begin(), t.end());
                     const double freq =
                         static_cast<double>(counts[key]) / n;
                     const double se = std::sqrt(p * (1.0 - p) / n);
                     EXPECT_LE(std::abs(freq - p), sigmas * se + 1e-12)
                         << "p=" << p;
                   }),
      IsOk());
}

TEST(TupleProbTest, MatchesSamplingOnTwoOutputs) {
  SpacePtr s = IndexSpace(2);
  std::mt19937_64 rng(3);
  TuplingMechanism m = ValueOrDie(
      TuplingMechanism::WithUniformDummies(1, RandomChannel(rng, s, s)));
  ExpectFrequenciesMatch(m, RandomDist(rng, s), 3.0);
}

TEST(TupleProbTest, MatchesSamplingOnSmallInstances) {
  std::mt19937_64 rng(4);
  for (std::size_t ny : {2u, 3u}) {
    for (int k : {1, 2}) {
      SpacePtr s = IndexSpace(ny);
      TuplingMechanism m = ValueOrDie(TuplingMechanism::Create(
          k, RandomDist(rng, s), RandomChannel(rng, s, s)));
      ExpectFrequenciesMatch(m, RandomDist(rng, s), 4.0);
    }
  }
}

TEST(ExpectedLossTest, IdentityHasNoLoss) {
  SpacePtr s = Grid3x3();
  std::mt19937_64 rng(5);
  for (int k : {1, 3}) {
    TuplingMechanism m = ValueOrDie(TuplingMechanism::Create(
        k, RandomDist(rng, s), Channel::Identity(s)));
    Estimate e = ValueOrDie(ExpectedLoss(m, RandomDist(rng, s),
                                         Domain::Same(s),
                                         EstimationMode::Exact()));
    EXPECT_EQ(e.value, 0.0);
  }
}

TEST(ExpectedLossTest, NoDummiesReducesToInnerLoss) {
  SpacePtr s = Grid3x3();
  Domain d = Domain::Same(s);
  Channel rl = ValueOrDie(RestrictedLaplace(s, 0.7, 2.0));
  TuplingMechanism m = ValueOrDie(TuplingMechanism::WithoutDummies(rl));
  std::mt19937_64 rng(6);
  ProbDist dist = RandomDist(rng, s, 3);
  Estimate e = ValueOrDie(ExpectedLoss(m, dist, d, EstimationMode::Exact()));
  EXPECT_NEAR(e.value, ValueOrDie(ExpectedLoss(rl, dist, d)), 1e-12);
}

TEST(ExpectedLossTest, ExactMatchesBruteForce) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    SpacePtr s = trial % 2 == 0 ? Grid3x3() : LineSpace({0.0, 1.0, 1.0 + trial});
    Domain d = Domain::Same(s);
    const int k = 1 + trial % 3;
    TuplingMechanism m = ValueOrDie(TuplingMechanism::Create(
        k, RandomDist(rng, s, 4), RandomChannel(rng, s, s, 3)));
    ProbDist dist = RandomDist(rng, s, 3);
    Estimate e = ValueOrDie(ExpectedLoss(m, dist, d, EstimationMode::Exact()));
    EXPECT_NEAR(e.value, BruteForceLoss(m, dist, d), 1e-12) << trial;
  }
}

TEST(ExpectedLossTest, ExactOnEmbeddedDomain) {
  SpacePtr out = Grid3x3();
  Domain d = ValueOrDie(Domain::Embedded(out, {0, 4, 8}));
  TuplingMechanism m = ValueOrDie(TuplingMechanism::WithUniformDummies(
      2, ValueOrDie(RestrictedLaplace(d, 1.0, 1.5))));
  ProbDist dist = ValueOrDie(ProbDist::Create(d.input(), {0.2, 0.5, 0.3}));
  Estimate e = ValueOrDie(ExpectedLoss(m, dist, d, EstimationMode::Exact()));
  EXPECT_NEAR(e.value, BruteForceLoss(m, dist, d), 1e-12);
}

TEST(ExpectedLossTest, ExactMatchesMonteCarlo) {
  SpacePtr s = LineSpace({0.0, 1.0, 2.0});
  Domain d = Domain::Same(s);
  TuplingMechanism m = ValueOrDie(TuplingMechanism::WithUniformDummies(
      1, ValueOrDie(RestrictedLaplace(s, std::log(2.0), 1.0))));
  ProbDist uniform = ValueOrDie(ProbDist::Uniform(s));
  Estimate exact =
      ValueOrDie(ExpectedLoss(m, uniform, d, EstimationMode::Exact()));
  Estimate mc = ValueOrDie(ExpectedLoss(
      m, uniform, d,
      EstimationMode::MonteCarlo({.samples = 1'000'000, .seed = 9})));
  EXPECT_EQ(mc.samples, 1'000'000);
  EXPECT_GT(mc.standard_error, 0.0);
  EXPECT_NEAR(mc.value, exact.value, 3.0 * mc.standard_error);
  EXPECT_NEAR(exact.value, BruteForceLoss(m, uniform, d), 1e-15);
}

TEST(ExpectedLossTest, MonteCarloIsThreadIndependent) {
  SpacePtr s = Grid3x3();
  Domain d = Domain::Same(s);
  TuplingMechanism m = ValueOrDie(TuplingMechanism::WithUniformDummies(
      3, ValueOrDie(RestrictedLaplace(s, 1.0, 2.0))));
  ProbDist uniform = ValueOrDie(ProbDist::Uniform(s));
  Estimate one = ValueOrDie(ExpectedLoss(
      m, uniform, d, EstimationMode::MonteCarlo({20000, 3, 1})));
  Estimate four = ValueOrDie(ExpectedLoss(
      m, uniform, d, EstimationMode::MonteCarlo({20000, 3, 4})));
  EXPECT_EQ(one.value, four.value);
  EXPECT_EQ(one.standard_error, four.standard_error);
}

TEST(ExpectedLossTest, NonIncreasingInDummies) {
  SpacePtr s = Grid3x3();
  Domain d = Domain::Same(s);
  Channel rl = ValueOrDie(RestrictedLaplace(s, 0.5, 3.0));
  std::mt19937_64 rng(10);
  ProbDist dist = RandomDist(rng, s);
  double previous_exact = std::numeric_limits<double>::infinity();
  Estimate previous_mc{std::numeric_limits<double>::infinity(), 0.0, 0};
  for (int k : {0, 1, 2, 5, 10}) {
    TuplingMechanism m =
        k == 0 ? ValueOrDie(TuplingMechanism::WithoutDummies(rl))
               : ValueOrDie(TuplingMechanism::WithUniformDummies(k, rl));
    const double exact =
        ValueOrDie(ExpectedLoss(m, dist, d, EstimationMode::Exact())).value;
    EXPECT_LE(exact, previous_exact);
    previous_exact = exact;
    Estimate mc = ValueOrDie(ExpectedLoss(
        m, dist, d, EstimationMode::MonteCarlo({.samples = 100000, .seed = 1})));
    EXPECT_LE(mc.value, previous_mc.value + 2.0 * (mc.standard_error +
                                                   previous_mc.standard_error));
    previous_mc = mc;
  }
}

TEST(ExpectedLossTest, WorstCaseBoundedByRadius) {
  SpacePtr s = Grid3x3();
  for (double radius : {1.0, 1.5}) {
    TuplingMechanism m = ValueOrDie(TuplingMechanism::WithUniformDummies(
        4, ValueOrDie(RestrictedLaplace(s, 0.3, radius))));
    RandomStream rng(11, 0);
    for (int n = 0; n < 100000; ++n) {
      const std::size_t x = rng.UniformIndex(9);
      const TupleOutput t = m.Sample(x, rng);
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t y : t.values) nearest = std::min(nearest, s->distance(x, y));
      ASSERT_LE(nearest, radius);
    }
  }
}

TEST(LambdaMembershipTest, Examples) {
  SpacePtr s = IndexSpace(3);
  Channel id = Channel::Identity(s);
  ProbDist uniform = ValueOrDie(ProbDist::Uniform(s));
  EXPECT_THAT(LambdaMembership(id, uniform, 1.0 / 3.0, 0.0),
              IsOkAndHolds(true));
  ProbDist skewed = ValueOrDie(ProbDist::Create(s, {0.6, 0.2, 0.2}));
  EXPECT_DOUBLE_EQ(LambdaFraction(skewed.mass(), 0.25), 2.0 / 3.0);
  EXPECT_THAT(LambdaMembership(id, skewed, 0.25, 1.0 / 3.0),
              IsOkAndHolds(true));
  EXPECT_THAT(LambdaMembership(id, skewed, 0.25, 0.3), IsOkAndHolds(false));
  EXPECT_THAT(LambdaMembership(id, skewed, 0.6, 0.0), IsOkAndHolds(true));
  EXPECT_THAT(LambdaMembership(id, skewed, 1.5, 0.0).status(),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

// Random doubly-stochastic channel as a mixture of permutation matrices.
Channel RandomDoublyStochastic(std::mt19937_64& rng, const SpacePtr& s) {
  const std::size_t n = s->size();
  std::vector<double> m(n * n, 0.0);
  std::vector<std::size_t> perm(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < n; ++j) perm[j] = j;
    std::shuffle(perm.begin(), perm.end(), rng);
    const double w = u(rng);
    total += w;
    for (std::size_t j = 0; j < n; ++j) m[j * n + perm[j]] += w;
  }
  for (double& v : m) v /= total;
  return ValueOrDie(Channel::FromWeights(s, s, std::move(m)));
}

TEST(LambdaMembershipTest, MaxInputMassIsEnoughForDoublyStochastic) {
  std::mt19937_64 rng(12);
  SpacePtr s = IndexSpace(6);
  for (int trial = 0; trial < 100; ++trial) {
    ProbDist dist = RandomDist(rng, s, 3);
    Channel c = RandomDoublyStochastic(rng, s);
    EXPECT_THAT(LambdaMembership(c, dist, dist.Max(), 0.0),
                IsOkAndHolds(true));
  }
}

TEST(LambdaMembershipTest, MaxInputMassCanFailForOtherChannels) {
  // Every input maps to output 0, so the lifted mass there is 1.
  SpacePtr s = IndexSpace(2);
  Channel constant = ValueOrDie(Channel::Create(s, s, {1.0, 0.0, 1.0, 0.0}));
  ProbDist uniform = ValueOrDie(ProbDist::Uniform(s));
  EXPECT_THAT(LambdaMembership(constant, uniform, 0.5, 0.0),
              IsOkAndHolds(false));
}

TEST(TuplingBoundTest, FormulaExample) {
  TuplingBound b = ValueOrDie(TuplingBoundAt(100, 10, 1.0, 0.1, 0.0));
  EXPECT_NEAR(b.epsilon_alpha, std::log(111.0 / 90.0), 1e-15);
  EXPECT_NEAR(b.epsilon_alpha, 0.20972, 5e-6);
  EXPECT_NEAR(b.delta_alpha, 2.0 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(b.delta_alpha, 0.27067, 5e-6);
  TuplingBound with_eta = ValueOrDie(TuplingBoundAt(100, 10, 1.0, 0.1, 0.05));
  EXPECT_NEAR(with_eta.delta_alpha, b.delta_alpha + 0.05, 1e-15);
}

TEST(TuplingBoundTest, SmallAlphaLimit) {
  TuplingBound b = ValueOrDie(TuplingBoundAt(50, 20, 1e-9, 0.2, 0.0));
  EXPECT_NEAR(b.epsilon_alpha, std::log(1.0 + 0.2 * 20 / 50), 1e-6);
  EXPECT_NEAR(b.delta_alpha, 2.0, 1e-6);
}

TEST(TuplingBoundTest, RejectsAlphaOutsideRange) {
  EXPECT_THAT(TuplingBoundAt(100, 10, 0.0, 0.1, 0.0).status(),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(TuplingBoundAt(100, 10, 10.0, 0.1, 0.0).status(),
              StatusIs(absl::StatusCode::kInvalidArgument));
  EXPECT_THAT(TuplingBoundAt(100, 10, 9.99, 0.1, 0.0), IsOk());
}

TEST(TuplingBoundTest, ClosedFormMatchesGridSearch) {
  for (int k : {10, 50, 100, 400}) {
    for (std::size_t ny : {5u, 10u, 36u}) {
      for (double beta : {0.01, 0.05, 0.2}) {
        for (double delta : {0.001, 0.01, 0.1}) {
          auto best = ValueOrDie(TightestTuplingBound(k, ny, beta, 0.0, delta));
          // Grid over (0, k/|Y|) for the smallest feasible epsilon_alpha.
          const double upper = static_cast<double>(k) / ny;
          double grid_best = std::numeric_limits<double>::infinity();
          for (int i = 1; i < 20000; ++i) {
            const double alpha = upper * i / 20000.0;
            TuplingBound b = ValueOrDie(TuplingBoundAt(k, ny, alpha, beta, 0.0));
            if (b.delta_alpha <= delta) {
              grid_best = std::min(grid_best, b.epsilon_alpha);
            }
          }
          if (!best.has_value()) {
            EXPECT_TRUE(std::isinf(grid_best)) << k << " " << ny << " " << beta;
            continue;
          }
          EXPECT_LE(best->delta_alpha, delta);
          EXPECT_LE(best->epsilon_alpha, grid_best + 1e-12);
          if (std::isfinite(grid_best)) {
            // One grid step of alpha changes epsilon_alpha by little.
            EXPECT_NEAR(best->epsilon_alpha, grid_best, 1e-2 * grid_best + 1e-3);
          }
        }
      }
    }
  }
}

TEST(TuplingBoundTest, InfeasibleWhenEtaReachesDelta) {
  EXPECT_FALSE(
      ValueOrDie(TightestTuplingBound(100, 10, 0.1, 0.01, 0.01)).has_value());
}

TEST(MeasuredTuplingBoundTest, RefusesNonUniformDummies) {
  SpacePtr s = IndexSpace(4);
  std::mt19937_64 rng(13);
  TuplingMechanism m = ValueOrDie(TuplingMechanism::Create(
      50, RandomDist(rng, s), Channel::Identity(s)));
  ProbDist u = ValueOrDie(ProbDist::Uniform(s));
  EXPECT_THAT(MeasuredTuplingBound(m, u, u, 0.01).status(),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

TEST(MeasuredTuplingBoundTest, MatchesSearchOverClasses) {
  std::mt19937_64 rng(14);
  SpacePtr s = IndexSpace(20);
  for (int trial = 0; trial < 20; ++trial) {
    Channel inner = RandomChannel(rng, s, s);
    TuplingMechanism m =
        ValueOrDie(TuplingMechanism::WithUniformDummies(400, inner));
    ProbDist d0 = RandomDist(rng, s);
    ProbDist d1 = RandomDist(rng, s);
    const double delta = 0.2;
    auto bound = ValueOrDie(MeasuredTuplingBound(m, d0, d1, delta));
    // Oracle: try every (beta, eta) with both distributions in the class,
    // using membership directly, and the closed-form alpha.
    ProbDist l0 = ValueOrDie(LiftChannel(inner, d0));
    ProbDist l1 = ValueOrDie(LiftChannel(inner, d1));
    std::vector<double> betas(l0.mass().begin(), l0.mass().end());
    betas.insert(betas.end(), l1.mass().begin(), l1.mass().end());
    double oracle = std::numeric_limits<double>::infinity();
    for (double beta : betas) {
      for (int j = 0; j < 20; ++j) {
        const double eta = j / 20.0;
        if (eta >= delta) break;
        if (!ValueOrDie(LambdaMembership(inner, d0, beta, eta)) ||
            !ValueOrDie(LambdaMembership(inner, d1, beta, eta))) {
          continue;
        }
        auto b = ValueOrDie(TightestTuplingBound(400, 20, beta, eta, delta));
        if (b.has_value()) oracle = std::min(oracle, b->epsilon_alpha);
      }
    }
    if (bound.has_value()) {
      EXPECT_NEAR(bound->epsilon_alpha, oracle, 1e-12);
      EXPECT_LE(bound->delta_alpha, delta);
      EXPECT_TRUE(ValueOrDie(LambdaMembership(inner, d0, bound->beta, bound->eta)));
      EXPECT_TRUE(ValueOrDie(LambdaMembership(inner, d1, bound->beta, bound->eta)));
    } else {
      EXPECT_TRUE(std::isinf(oracle));
    }
  }
}

}  // namespace
}  // namespace distpriv
