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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "distpriv/core_model.h"
#include "distpriv/csv.h"
#include "distpriv/mechanisms.h"
#include "distpriv/monte_carlo.h"
#include "distpriv/privacy_analysis.h"
#include "distpriv/transport.h"
#include "distpriv/tupling.h"

namespace distpriv {
namespace {

namespace fs = std::filesystem;
using Pair = AdjacencyRelation::Pair;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Criterion failures and library errors both surface as exceptions so that a
// criterion stops at the first broken assertion.
class CriterionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
T Get(absl::StatusOr<T> v) {
  if (!v.ok()) throw CriterionFailure(v.status().ToString());
  return *std::move(v);
}

void Require(bool condition, const std::string& what) {
  if (!condition) throw CriterionFailure(what);
}

double Elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::vector<double> RandomMass(std::mt19937_64& rng, std::size_t n,
                               int zero_every = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& v : w) {
    v = u(rng);
    if (zero_every > 0 && rng() % zero_every == 0) v = 0.0;
    total += v;
  }
  if (total == 0.0) {
    w[0] = 1.0;
    total = 1.0;
  }
  for (double& v : w) v /= total;
  return w;
}

SpacePtr IndexSpace(std::size_t n) {
  std::vector<double> metric(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) metric[i * n + j] = i == j ? 0.0 : 1.0;
  }
  return Get(FiniteSpace::Create(FiniteSpace::IndexLabels(n), std::move(metric)));
}

SpacePtr RandomPlanarSpace(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> coord(0, 4);
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < n; ++i) {
    points.emplace_back(coord(rng), coord(rng) + 0.1 * static_cast<double>(i));
  }
  return Get(FiniteSpace::Planar(FiniteSpace::IndexLabels(n), points));
}

Channel RandomChannel(std::mt19937_64& rng, const SpacePtr& s,
                      int zero_every = 0) {
  std::vector<double> rows;
  for (std::size_t x = 0; x < s->size(); ++x) {
    auto row = RandomMass(rng, s->size(), zero_every);
    rows.insert(rows.end(), row.begin(), row.end());
  }
  return Get(Channel::FromWeights(s, s, std::move(rows)));
}

AdjacencyRelation RandomSymmetricRelation(std::mt19937_64& rng, std::size_t n,
                                          bool with_diagonal) {
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    if (with_diagonal) pairs.push_back({i, i});
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng() % 2 == 0) {
        pairs.push_back({i, j});
        pairs.push_back({j, i});
      }
    }
  }
  pairs.push_back({0, n - 1});
  pairs.push_back({n - 1, 0});
  return Get(AdjacencyRelation::Create(n, pairs));
}

// Smallest threshold t at which every subset S of supp(a) satisfies
// a(S) <= b(N_t(S)); Hall's condition for transport along moves <= t.
double HallOracleWassersteinInf(const ProbDist& a, const ProbDist& b) {
  const FiniteSpace& space = *a.space();
  const std::vector<std::size_t> support = a.Support();
  std::set<double> thresholds;
  for (std::size_t i : support) {
    for (std::size_t j : b.Support()) thresholds.insert(space.distance(i, j));
  }
  for (double t : thresholds) {
    bool feasible = true;
    for (unsigned subset = 1; feasible && subset < (1u << support.size());
         ++subset) {
      double demand = 0.0;
      std::vector<bool> reach(b.size(), false);
      for (std::size_t k = 0; k < support.size(); ++k) {
        if ((subset >> k & 1u) == 0) continue;
        demand += a[support[k]];
        for (std::size_t j = 0; j < b.size(); ++j) {
          if (space.distance(support[k], j) <= t) reach[j] = true;
        }
      }
      double supply = 0.0;
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (reach[j]) supply += b[j];
      }
      feasible = demand <= supply + 1e-9;
    }
    if (feasible) return t;
  }
  return *thresholds.rbegin();
}

double MarginalError(const Coupling& c, const ProbDist& a, const ProbDist& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) row += c(i, j);
    worst = std::max(worst, std::abs(row - a[i]));
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    double column = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) column += c(i, j);
    worst = std::max(worst, std::abs(column - b[j]));
  }
  return worst;
}

double Epsilon(const PrivacyReport& r) {
  return r.epsilon().value_or(std::numeric_limits<double>::infinity());
}

// Default-suite CLI runs.

struct CsvTable {
  std::vector<std::map<std::string, std::string>> rows;

  double Number(std::size_t row, const std::string& column) const {
    auto it = rows.at(row).find(column);
    Require(it != rows.at(row).end(), "missing column " + column);
    auto v = ParseDouble(it->second);
    Require(v.has_value(), "bad number in column " + column);
    return *v;
  }
};

CsvTable ReadCsv(const fs::path& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), "cannot read " + path.string());
  CsvTable table;
  std::vector<std::string> header;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    for (auto f : SplitCsvLine(line)) fields.emplace_back(f);
    if (header.empty()) {
      header = fields;
      continue;
    }
    Require(fields.size() == header.size(), "ragged row in " + path.string());
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < fields.size(); ++i) row[header[i]] = fields[i];
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string StripTimestamp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("# timestamp:", 0) == 0) continue;
    out += line + "\n";
  }
  return out;
}

struct CliRuns {
  fs::path first;
  fs::path second;
  double first_seconds = 0.0;
  bool ok = false;
  std::string error;
};

CliRuns& DefaultRuns() {
  static CliRuns runs = [] {
    CliRuns r;
    const fs::path base = fs::temp_directory_path() /
                          ("distpriv_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    r.first = base / "run1";
    r.second = base / "run2";
    const std::string config =
        std::string(DISTPRIV_SOURCE_DIR) + "/configs/default.json";
    for (int i = 0; i < 2; ++i) {
      const fs::path& out = i == 0 ? r.first : r.second;
      const std::string cmd = std::string(DISTPRIV_CLI) + " run " + config +
                              " --curve all --out " + out.string() +
                              " >/dev/null";
      const auto start = std::chrono::steady_clock::now();
      const int status = std::system(cmd.c_str());
      if (i == 0) r.first_seconds = Elapsed(start);
      if (status != 0) {
        r.error = "CLI run failed: " + cmd;
        return r;
      }
    }
    r.ok = true;
    return r;
  }();
  return runs;
}

const CliRuns& RequireRuns() {
  const CliRuns& runs = DefaultRuns();
  Require(runs.ok, runs.error);
  return runs;
}

double TwoSe(double se0, double se1) { return 2.0 * std::hypot(se0, se1); }

// Criteria.

Outcome Ac1WassersteinOracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst_marginal = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 3;
    SpacePtr s = RandomPlanarSpace(rng, n);
    ProbDist a = Get(ProbDist::FromWeights(s, RandomMass(rng, n, 3)));
    ProbDist b = Get(ProbDist::FromWeights(s, RandomMass(rng, n, 3)));
    TransportResult r = Get(WassersteinInf(a, b));
    Require(r.value == HallOracleWassersteinInf(a, b),
            absl::StrCat("trial ", trial, ": W_inf differs from the oracle"));
    Require(r.witness.LargestMove(*s) == r.value,
            absl::StrCat("trial ", trial, ": witness does not attain W_inf"));
    worst_marginal = std::max(worst_marginal, MarginalError(r.witness, a, b));
  }
  Require(worst_marginal <= 1e-10, "witness marginals off");
  const double seconds = Elapsed(start);
  Require(seconds < 10.0, "slower than 10 s");
  return {true, absl::StrCat("200 pairs, max marginal error ", worst_marginal,
                             ", ", seconds, " s")};
}

Outcome Ac2ThreePointInstance() {
  SpacePtr line = Get(FiniteSpace::Line(std::vector<double>{1.0, 2.0, 3.0}));
  ProbDist l0 = Get(ProbDist::Create(line, {0.2, 0.5, 0.3}));
  ProbDist l1 = Get(ProbDist::Create(line, {0.3, 0.2, 0.5}));
  TransportResult r = Get(WassersteinInf(l0, l1));
  Require(r.value == 1.0, absl::StrCat("W_inf = ", r.value));
  // 0.2, 0.2 and 0.3 stay; 0.1 moves left and 0.2 moves right.
  Coupling gamma = Get(Coupling::Create(
      l0, l1, {0.2, 0.0, 0.0, 0.1, 0.2, 0.2, 0.0, 0.0, 0.3}));
  Require(gamma.LargestMove(*line) == 1.0, "gamma is not optimal");
  Require(MarginalError(gamma, l0, l1) <= 1e-15, "gamma marginals off");
  return {true, "W_inf = 1, gamma valid and optimal"};
}

Outcome Ac3DpTransfer() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(303);
  const double epsilons[] = {0.5, 1.0, 2.0};
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial) {
    const double eps = epsilons[trial % 3];
    const std::size_t n = 3 + trial % 4;
    SpacePtr s = IndexSpace(n);
    Channel channel = Channel::Identity(s);
    if (trial % 3 == 2) {
      channel = Get(RandomizedResponse(s, eps));
    } else {
      // Entries within a factor e^(eps/2) of each other, as are the row
      // normalizers, so every column ratio is at most e^eps.
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> rows(n * n);
      for (double& v : rows) v = std::exp(0.5 * eps * u(rng));
      channel = Get(Channel::FromWeights(s, s, std::move(rows)));
    }
    AdjacencyRelation phi = RandomSymmetricRelation(rng, n, true);
    Require(Epsilon(Get(DpEpsilon(channel, phi, 0.0))) <= eps + 1e-12,
            absl::StrCat("trial ", trial, ": channel is not eps-DP"));
    // A random coupling supported on phi; its marginals are phi#-adjacent.
    std::vector<double> joint(n * n, 0.0);
    const auto weights = RandomMass(rng, phi.pairs().size());
    for (std::size_t p = 0; p < weights.size(); ++p) {
      const auto [i, j] = phi.pairs()[p];
      joint[i * n + j] += weights[p];
    }
    std::vector<double> m0(n, 0.0), m1(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        m0[i] += joint[i * n + j];
        m1[j] += joint[i * n + j];
      }
    }
    ProbDist d0 = Get(ProbDist::FromWeights(s, m0));
    ProbDist d1 = Get(ProbDist::FromWeights(s, m1));
    Require(Get(InLiftedRelation(d0, d1, phi)).has_value(),
            absl::StrCat("trial ", trial, ": pair not found in phi#"));
    const double distp = Epsilon(Get(DistpEpsilonExact(channel, {{d0, d1}}, 0.0)));
    worst_gap = std::max(worst_gap, distp - eps);
    Require(distp <= eps + 1e-9,
            absl::StrCat("trial ", trial, ": DistP ", distp, " > ", eps));
  }
  const double seconds = Elapsed(start);
  Require(seconds < 30.0, "slower than 30 s");
  return {true, absl::StrCat("50 channels, max(DistP - eps) = ", worst_gap, ", ",
                             seconds, " s")};
}

Outcome Ac4XdpTransfer() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> position(0.0, 4.0);
  const double epsilons[] = {0.5, 1.0, 2.0};
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double eps = epsilons[trial % 3];
    std::vector<double> points(5);
    for (double& p : points) p = position(rng);
    std::sort(points.begin(), points.end());
    SpacePtr line = Get(FiniteSpace::Line(points));
    Channel rl = Get(RestrictedLaplace(line, eps,
                                       std::numeric_limits<double>::infinity()));
    ProbDist d0 = Get(ProbDist::FromWeights(line, RandomMass(rng, 5)));
    ProbDist d1 = Get(ProbDist::FromWeights(line, RandomMass(rng, 5)));
    const double w = Get(WassersteinInf(d0, d1)).value;
    const double lifted = Epsilon(Get(DistpEpsilonExact(rl, {{d0, d1}}, 0.0)));
    if (w > 0.0) worst_ratio = std::max(worst_ratio, lifted / (eps * w));
    Require(lifted <= eps * w + 1e-9,
            absl::StrCat("trial ", trial, ": log-ratio ", lifted, " > ", eps * w));
  }
  return {true, absl::StrCat("50 full-support pairs, max log-ratio / (eps W_inf) = ",
                             worst_ratio)};
}

Outcome Ac5BoundsDominance() {
  const CsvTable t = ReadCsv(RequireRuns().first / "bounds-report.csv");
  Require(!t.rows.empty(), "empty bounds report");
  std::map<int, std::vector<std::pair<double, double>>> by_k;
  double tightest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double eps_alpha = t.Number(i, "epsilon_alpha");
    const double eps_hat = t.Number(i, "epsilon_hat");
    Require(t.Number(i, "n") == 1e5, "estimate not at N = 1e5");
    Require(t.rows[i].at("dominates") == "1" && eps_alpha >= eps_hat,
            absl::StrCat("row ", i, ": bound ", eps_alpha, " < estimate ",
                         eps_hat));
    tightest = std::min(tightest, eps_alpha - eps_hat);
    by_k[static_cast<int>(t.Number(i, "k"))].emplace_back(t.Number(i, "delta"),
                                                          eps_alpha);
  }
  for (auto& [k, points] : by_k) {
    std::sort(points.begin(), points.end());
    std::vector<double> deltas;
    for (const auto& p : points) deltas.push_back(p.first);
    Require(deltas == std::vector<double>{0.001, 0.01, 0.1},
            absl::StrCat("k = ", k, ": unexpected delta set"));
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      Require(points[i + 1].second < points[i].second,
              absl::StrCat("k = ", k, ": bound not decreasing in delta"));
    }
  }
  return {true, absl::StrCat(t.rows.size(), " rows dominate, smallest margin ",
                             tightest)};
}

// (1 - delta)-quantile of the exact log-ratio in each direction, by
// enumerating every tuple; the larger of the two, floored at 0.
double EnumeratedDistp(const TuplingMechanism& m, const ProbDist& d0,
                       const ProbDist& d1, double delta) {
  ProbDist l0 = Get(LiftChannel(m.inner(), d0));
  ProbDist l1 = Get(LiftChannel(m.inner(), d1));
  const auto dummy = m.dummy_distribution().mass();
  double result = 0.0;
  for (int direction = 0; direction < 2; ++direction) {
    const ProbDist& num = direction == 0 ? l0 : l1;
    const ProbDist& den = direction == 0 ? l1 : l0;
    std::vector<std::pair<double, double>> atoms;
    Require(ForEachTuple(m, num.mass(),
                         [&](std::span<const std::size_t> tuple, double p) {
                           const double q =
                               TupleProbFromLifted(den.mass(), dummy, tuple);
                           atoms.emplace_back(std::log(p / q), p);
                         })
                .ok(),
            "enumeration failed");
    std::sort(atoms.begin(), atoms.end());
    double cdf = 0.0;
    for (const auto& [ratio, p] : atoms) {
      cdf += p;
      if (cdf >= 1.0 - delta) {
        result = std::max(result, ratio);
        break;
      }
    }
  }
  return result;
}

Outcome Ac6TuplingAgreement() {
  const auto start = std::chrono::steady_clock::now();
  constexpr std::int64_t kSamples = 1000000;
  std::mt19937_64 rng(606);
  double worst_z = 0.0, worst_quantile = 0.0;
  int instances = 0;
  for (std::size_t ny : {2, 3}) {
    for (int k : {1, 2}) {
      SpacePtr s = IndexSpace(ny);
      Channel inner = RandomChannel(rng, s);
      TuplingMechanism m =
          (ny == 3 && k == 2)
              ? Get(TuplingMechanism::Create(
                    k, Get(ProbDist::FromWeights(s, RandomMass(rng, ny))),
                    inner))
              : Get(TuplingMechanism::WithUniformDummies(k, inner));
      ProbDist d0 = Get(ProbDist::FromWeights(s, RandomMass(rng, ny)));
      ProbDist d1 = Get(ProbDist::FromWeights(s, RandomMass(rng, ny)));

      std::map<std::vector<std::size_t>, std::int64_t> counts;
      RandomStream stream(6000 + instances, 0);
      DiscreteSampler inputs(d0.mass());
      for (std::int64_t n = 0; n < kSamples; ++n) {
        ++counts[m.Sample(inputs(stream), stream).values];
      }
      ProbDist lifted = Get(LiftChannel(inner, d0));
      Require(ForEachTuple(
                  m, lifted.mass(),
                  [&](std::span<const std::size_t> tuple, double p) {
                    const std::vector<std::size_t> key(tuple.begin(),
                                                       tuple.end());
                    const double freq =
                        static_cast<double>(counts[key]) / kSamples;
                    const double se = std::sqrt(p * (1.0 - p) / kSamples);
                    const double z = se > 0.0 ? std::abs(freq - p) / se
                                              : (freq == p ? 0.0 : HUGE_VAL);
                    worst_z = std::max(worst_z, z);
                  })
                  .ok(),
              "enumeration failed");
      Require(worst_z <= 4.0,
              absl::StrCat("tuple frequency off by ", worst_z, " SE"));

      for (double delta : {0.05, 0.2}) {
        const double exact = EnumeratedDistp(m, d0, d1, delta);
        const double mc = Epsilon(Get(DistpEpsilonTuplingMc(
            m, d0, d1, delta,
            MonteCarloOptions{kSamples,
                              static_cast<std::uint64_t>(7000 + instances), 1})));
        worst_quantile = std::max(worst_quantile, std::abs(mc - exact));
        Require(std::abs(mc - exact) <= 0.01,
                absl::StrCat("|Y| = ", ny, ", k = ", k, ", delta = ", delta,
                             ": estimate ", mc, " vs enumeration ", exact));
      }
      ++instances;
    }
  }
  const double seconds = Elapsed(start);
  Require(seconds < 60.0, "slower than 60 s");
  return {true, absl::StrCat(instances, " instances, max |z| ", worst_z,
                             ", max quantile gap ", worst_quantile, ", ",
                             seconds, " s")};
}

Outcome Ac7TrendSuite() {
  const CliRuns& runs = RequireRuns();
  Require(runs.first_seconds < 300.0, "default suite slower than 5 min");
  auto eps_se = [](const CsvTable& t, std::size_t i) {
    return std::make_pair(t.Number(i, "epsilon"), t.Number(i, "stderr"));
  };
  int checks = 0;

  const CsvTable by_k = ReadCsv(runs.first / "eps-vs-k.csv");
  std::vector<double> ks;
  for (std::size_t i = 0; i < by_k.rows.size(); ++i) {
    ks.push_back(by_k.Number(i, "sweep-param"));
  }
  Require(ks == std::vector<double>{1, 2, 5, 10}, "unexpected k sweep");
  for (std::size_t i = 0; i + 1 < by_k.rows.size(); ++i) {
    Require(eps_se(by_k, i + 1).first < eps_se(by_k, i).first,
            "epsilon not strictly decreasing in k");
    Require(by_k.Number(i + 1, "loss") <= by_k.Number(i, "loss"),
            "loss increasing in k");
    checks += 2;
  }

  const CsvTable by_eps = ReadCsv(runs.first / "eps-vs-epsA.csv");
  for (std::size_t i = 0; i + 1 < by_eps.rows.size(); ++i) {
    const auto [e0, s0] = eps_se(by_eps, i);
    const auto [e1, s1] = eps_se(by_eps, i + 1);
    Require(e1 >= e0 - TwoSe(s0, s1), "epsilon decreasing in epsilon_a");
    ++checks;
  }

  const CsvTable loss = ReadCsv(runs.first / "loss-vs-epsA.csv");
  for (std::size_t i = 0; i + 1 < loss.rows.size(); ++i) {
    Require(loss.Number(i + 1, "loss") <= loss.Number(i, "loss"),
            "loss increasing in epsilon_a");
    ++checks;
  }

  const CsvTable by_r = ReadCsv(runs.first / "eps-vs-r.csv");
  for (std::size_t i = 0; i + 1 < by_r.rows.size(); ++i) {
    const auto [e0, s0] = eps_se(by_r, i);
    const auto [e1, s1] = eps_se(by_r, i + 1);
    Require(e1 <= e0 + TwoSe(s0, s1), "epsilon increasing in radius");
    ++checks;
  }
  return {true, absl::StrCat(checks, " trend checks, suite ran in ",
                             runs.first_seconds, " s")};
}

Outcome Ac8WorstCaseLoss() {
  std::vector<std::pair<double, double>> cells;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) cells.emplace_back(c + 0.5, r + 0.5);
  }
  SpacePtr grid = Get(FiniteSpace::Planar(FiniteSpace::IndexLabels(36), cells));
  std::int64_t total = 0;
  for (double radius : {1.0, 2.0, 3.0}) {
    TuplingMechanism m = Get(TuplingMechanism::WithUniformDummies(
        10, Get(RestrictedLaplace(grid, 1.0, radius))));
    RandomStream rng(800 + static_cast<std::uint64_t>(radius), 0);
    for (int n = 0; n < 100000; ++n) {
      const std::size_t x = rng.UniformIndex(36);
      const TupleOutput t = m.Sample(x, rng);
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t y : t.values) {
        nearest = std::min(nearest, grid->distance(x, y));
      }
      Require(nearest <= radius,
              absl::StrCat("sample ", n, " at r = ", radius, ": ", nearest));
      ++total;
    }
  }
  return {true, absl::StrCat(total, " samples over r in {1,2,3}, all within r")};
}

Outcome Ac9AttackSuccess() {
  const double uniform[] = {0.5, 0.5};
  // Constant channel, Monte-Carlo.
  SpacePtr in = IndexSpace(3);
  SpacePtr out = IndexSpace(4);
  std::vector<double> rows;
  for (int x = 0; x < 3; ++x) rows.insert(rows.end(), {0.1, 0.2, 0.3, 0.4});
  Channel constant = Get(Channel::Create(in, out, rows));
  const ProbDist flat_dists[] = {Get(ProbDist::Create(in, {0.6, 0.3, 0.1})),
                                 Get(ProbDist::Create(in, {0.1, 0.2, 0.7}))};
  Estimate flat = Get(AttackSuccessRate(
      constant, flat_dists, uniform,
      EstimationMode::MonteCarlo(MonteCarloOptions{100000, 909, 1})));
  Require(std::abs(flat.value - 0.5) <= 3.0 * flat.standard_error,
          absl::StrCat("constant channel ASR ", flat.value, " +- ",
                       flat.standard_error));
  // Identity with disjoint supports.
  SpacePtr s4 = IndexSpace(4);
  const ProbDist disjoint[] = {Get(ProbDist::Create(s4, {0.25, 0.75, 0.0, 0.0})),
                               Get(ProbDist::Create(s4, {0.0, 0.0, 0.5, 0.5}))};
  Estimate id = Get(AttackSuccessRate(Channel::Identity(s4), disjoint, uniform,
                                      EstimationMode::Exact()));
  Require(id.value == 1.0, absl::StrCat("identity ASR ", id.value));
  // Two inputs, rows (0.9, 0.1) and (0.2, 0.8): 0.5 * 0.9 + 0.5 * 0.8.
  SpacePtr s2 = IndexSpace(2);
  Channel two = Get(Channel::Create(s2, s2, {0.9, 0.1, 0.2, 0.8}));
  const ProbDist points[] = {Get(PointDist(s2, 0)), Get(PointDist(s2, 1))};
  Estimate hand = Get(
      AttackSuccessRate(two, points, uniform, EstimationMode::Exact()));
  Require(hand.value == 0.5 * 0.9 + 0.5 * 0.8,
          absl::StrCat("2x2 ASR ", hand.value));
  Require(std::abs(hand.value - 0.85) <= 2e-16, "2x2 ASR is not 0.85");
  return {true, absl::StrCat("constant ", flat.value, " +- ", flat.standard_error,
                             ", identity 1, 2x2 ", hand.value)};
}

Outcome Ac10PointPairRoundTrip() {
  std::mt19937_64 rng(1010);
  int unbounded = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 5;
    SpacePtr s = IndexSpace(n);
    Channel c = RandomChannel(rng, s, trial % 4 == 3 ? 3 : 0);
    AdjacencyRelation phi = RandomSymmetricRelation(rng, n, false);
    DistributionPairs pairs;
    for (const auto& [a, b] : phi.pairs()) {
      pairs.emplace_back(Get(PointDist(s, a)), Get(PointDist(s, b)));
    }
    const PrivacyReport dp = Get(DpEpsilon(c, phi, 0.0));
    const PrivacyReport distp = Get(DistpEpsilonExact(c, pairs, 0.0));
    Require(dp.epsilon() == distp.epsilon(),
            absl::StrCat("trial ", trial, ": DP ", Epsilon(dp), " vs DistP ",
                         Epsilon(distp)));
    if (!dp.bounded()) ++unbounded;
  }
  return {true, absl::StrCat("100 channels equal (", unbounded,
                             " with unbounded epsilon)")};
}

Outcome Ac11Determinism() {
  const CliRuns& runs = RequireRuns();
  int files = 0;
  for (const auto& entry : fs::directory_iterator(runs.first)) {
    const fs::path other = runs.second / entry.path().filename();
    Require(fs::exists(other), "missing in second run: " +
                                   entry.path().filename().string());
    Require(StripTimestamp(entry.path()) == StripTimestamp(other),
            "differs between runs: " + entry.path().filename().string());
    ++files;
  }
  Require(files == 8, absl::StrCat("expected 8 result files, found ", files));
  return {true, absl::StrCat(files, " files byte-identical")};
}

}  // namespace
}  // namespace distpriv

int main() {
  using distpriv::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {{"AC1 W_inf oracle equivalence", distpriv::Ac1WassersteinOracle},
       {"AC2 three-point instance", distpriv::Ac2ThreePointInstance},
       {"AC3 DP to DistP transfer", distpriv::Ac3DpTransfer},
       {"AC4 XDP to XDistP transfer", distpriv::Ac4XdpTransfer},
       {"AC5 tupling bound dominance", distpriv::Ac5BoundsDominance},
       {"AC6 tupling exact/MC agreement", distpriv::Ac6TuplingAgreement},
       {"AC7 synthetic-grid trends", distpriv::Ac7TrendSuite},
       {"AC8 RL worst-case loss", distpriv::Ac8WorstCaseLoss},
       {"AC9 ASR calibration", distpriv::Ac9AttackSuccess},
       {"AC10 DP/DistP round trip", distpriv::Ac10PointPairRoundTrip},
       {"AC11 CLI determinism", distpriv::Ac11Determinism}};
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::error_code ec;
  std::filesystem::remove_all(distpriv::DefaultRuns().first.parent_path(), ec);
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
