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

#ifndef DISTPRIV_MONTE_CARLO_H_
#define DISTPRIV_MONTE_CARLO_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace distpriv {

// A reproducible random bit stream identified by (seed, stream). Estimators
// split their draws into fixed-size blocks and give block b the stream b, so
// results do not depend on how blocks are scheduled onto threads.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x64697374u};
    engine_.seed(seq);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n - 1}, by rejection so every index is equally likely.
  std::size_t UniformIndex(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return static_cast<std::size_t>(draw % bound);
  }

 private:
  std::mt19937_64 engine_;
};

// Inverse-CDF sampler for a finite distribution.
class DiscreteSampler {
 public:
  DiscreteSampler() = default;
  explicit DiscreteSampler(std::span<const double> weights) {
    cdf_.reserve(weights.size());
    double total = 0.0;
    for (double w : weights) {
      total += w;
      cdf_.push_back(total);
    }
    for (double& c : cdf_) c /= total;
    last_positive_ = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last_positive_ = i;
    }
  }

  std::size_t operator()(RandomStream& rng) const {
    const double u = rng.Uniform01();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto index = static_cast<std::size_t>(it - cdf_.begin());
    return std::min(index, last_positive_);
  }

  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

// A point estimate with its standard error; exact values carry zero error
// and zero samples.
struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

struct MonteCarloOptions {
  std::int64_t samples = 100000;
  std::uint64_t seed = 0;
  int threads = 1;
};

inline constexpr std::int64_t kDrawsPerBlock = 4096;

inline std::int64_t BlockCount(std::int64_t samples) {
  return (samples + kDrawsPerBlock - 1) / kDrawsPerBlock;
}

// Runs fn(block, begin, end) for every block of [0, samples). Blocks are
// distributed round-robin across `threads` workers. `fn` must only write to
// state owned by its block.
inline void ForEachBlock(
    std::int64_t samples, int threads,
    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) {
  const std::int64_t blocks = BlockCount(samples);
  auto run = [&](std::int64_t worker, std::int64_t stride) {
    for (std::int64_t b = worker; b < blocks; b += stride) {
      const std::int64_t begin = b * kDrawsPerBlock;
      fn(b, begin, std::min(samples, begin + kDrawsPerBlock));
    }
  };
  const std::int64_t workers =
      std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(blocks, 1));
  if (workers == 1) {
    run(0, 1);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&run, w, workers] { run(w, workers); });
  }
}

// Mean and standard error of per-block (sum, sum of squares, count) triples.
struct MomentAccumulator {
  double sum = 0.0;
  double sum_squares = 0.0;
  std::int64_t count = 0;

  void Add(double v) {
    sum += v;
    sum_squares += v * v;
    ++count;
  }
  void Merge(const MomentAccumulator& other) {
    sum += other.sum;
    sum_squares += other.sum_squares;
    count += other.count;
  }
  Estimate ToEstimate() const {
    Estimate e;
    e.samples = count;
    if (count == 0) return e;
    const double n = static_cast<double>(count);
    e.value = sum / n;
    const double var =
        count > 1 ? std::max(0.0, (sum_squares - n * e.value * e.value) /
                                      (n - 1.0))
                  : 0.0;
    e.standard_error = std::sqrt(var / n);
    return e;
  }
};

}  // namespace distpriv

#endif  // DISTPRIV_MONTE_CARLO_H_
