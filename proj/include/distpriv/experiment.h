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

#ifndef DISTPRIV_EXPERIMENT_H_
#define DISTPRIV_EXPERIMENT_H_

// Config-driven experiment runner: builds the synthetic or CSV scenario,
// evaluates the tupling mechanism and the baseline mechanisms over parameter
// sweeps, and writes result tables as CSV.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "distpriv/core_model.h"
#include "distpriv/csv.h"
#include "distpriv/geo_data.h"
#include "distpriv/mechanisms.h"
#include "distpriv/monte_carlo.h"
#include "distpriv/privacy_analysis.h"
#include "distpriv/status_macros.h"
#include "distpriv/tupling.h"

namespace distpriv {

inline constexpr char kVersion[] = "0.1.0";

struct DatasetConfig {
  enum class Kind { kSynthetic, kCsv };
  Kind kind = Kind::kSynthetic;
  // Synthetic.
  std::string profile = "north-south";
  std::optional<double> sigma;
  std::vector<std::pair<double, double>> centers;
  std::int64_t records = 50000;
  // CSV.
  std::string path;
  std::optional<std::int64_t> from;
  std::optional<std::int64_t> to;
};

struct GridConfig {
  Box box{0.0, 0.0, 6.0, 6.0};
  int rows = 6;
  int cols = 6;
  std::optional<std::size_t> max_count;
  std::optional<Box> inner_box;
};

struct TuplingConfig {
  std::vector<int> k;
  MechanismSpec inner;
  std::vector<double> epsilon_a;
  std::vector<double> radius;
  int fixed_k = 10;
  std::vector<int> bounds_k;
};

struct PrivacyConfig {
  double target_delta = 0.001;
  std::vector<double> deltas;
  std::int64_t samples = 100000;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  GridConfig grid;
  std::string attribute;
  std::vector<MechanismSpec> mechanisms;
  TuplingConfig tupling;
  PrivacyConfig privacy;
  std::string output = "results";
  int threads = 1;
  // FNV-1a hash of the canonical JSON the config was parsed from.
  std::uint64_t hash = 0;
};

inline std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for sweep point `index` of `label`, independent of scheduling.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view label,
                                std::uint64_t index) {
  return SplitMix64(seed ^ SplitMix64(Fnv1a64(label) + index));
}

namespace internal {

// Reads typed fields from a JSON object, naming the offending field in every
// error and rejecting keys that were never read.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& object, std::string path)
      : object_(object), path_(std::move(path)) {}

  std::string Path(std::string_view key) const {
    return path_.empty() ? std::string(key)
                         : absl::StrCat(path_, ".", std::string(key));
  }

  absl::Status Error(std::string_view key, std::string_view message) const {
    return absl::InvalidArgumentError(
        absl::StrCat("config field '", Path(key), "': ", std::string(message)));
  }

  bool Has(std::string_view key) {
    seen_.insert(std::string(key));
    return object_.contains(std::string(key)) &&
           !object_.at(std::string(key)).is_null();
  }

  const nlohmann::json& At(std::string_view key) const {
    return object_.at(std::string(key));
  }

  absl::StatusOr<double> Number(std::string_view key) {
    if (!Has(key)) return Error(key, "is required");
    const auto& v = At(key);
    if (!v.is_number()) return Error(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) return Error(key, "must be finite");
    return d;
  }

  absl::StatusOr<std::int64_t> Integer(std::string_view key) {
    if (!Has(key)) return Error(key, "is required");
    const auto& v = At(key);
    if (!v.is_number_integer()) return Error(key, "must be an integer");
    return v.get<std::int64_t>();
  }

  absl::StatusOr<std::uint64_t> Unsigned(std::string_view key) {
    if (!Has(key)) return Error(key, "is required");
    const auto& v = At(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      return Error(key, "must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }

  absl::StatusOr<std::string> String(std::string_view key) {
    if (!Has(key)) return Error(key, "is required");
    const auto& v = At(key);
    if (!v.is_string()) return Error(key, "must be a string");
    return v.get<std::string>();
  }

  absl::StatusOr<std::vector<double>> Numbers(std::string_view key) {
    if (!Has(key)) return Error(key, "is required");
    const auto& v = At(key);
    if (!v.is_array() || v.empty()) {
      return Error(key, "must be a nonempty array of numbers");
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        return Error(key, "must be a nonempty array of numbers");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  absl::StatusOr<std::vector<int>> Integers(std::string_view key) {
    if (!Has(key)) return Error(key, "is required");
    const auto& v = At(key);
    if (!v.is_array() || v.empty()) {
      return Error(key, "must be a nonempty array of integers");
    }
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) {
        return Error(key, "must be a nonempty array of integers");
      }
      out.push_back(e.get<int>());
    }
    return out;
  }

  absl::Status CheckObject() const {
    if (!object_.is_object()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "config field '", path_.empty() ? "<root>" : path_,
          "': must be an object"));
    }
    return absl::OkStatus();
  }

  absl::Status CheckNoUnknownKeys() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.contains(key)) return Error(key, "unknown field");
    }
    return absl::OkStatus();
  }

 private:
  const nlohmann::json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

inline absl::StatusOr<Box> ParseBox(FieldReader& parent, std::string_view key) {
  const auto& v = parent.At(key);
  FieldReader r(v, parent.Path(key));
  DISTPRIV_RETURN_IF_ERROR(r.CheckObject());
  Box box;
  DISTPRIV_ASSIGN_OR_RETURN(box.min_x, r.Number("min_x"));
  DISTPRIV_ASSIGN_OR_RETURN(box.min_y, r.Number("min_y"));
  DISTPRIV_ASSIGN_OR_RETURN(box.max_x, r.Number("max_x"));
  DISTPRIV_ASSIGN_OR_RETURN(box.max_y, r.Number("max_y"));
  DISTPRIV_RETURN_IF_ERROR(r.CheckNoUnknownKeys());
  if (!box.Valid()) return parent.Error(key, "box is degenerate");
  return box;
}

inline absl::StatusOr<MechanismSpec> ParseMechanism(const nlohmann::json& v,
                                                    const std::string& path) {
  FieldReader r(v, path);
  DISTPRIV_RETURN_IF_ERROR(r.CheckObject());
  MechanismSpec spec;
  DISTPRIV_ASSIGN_OR_RETURN(const std::string kind, r.String("kind"));
  auto parsed = ParseMechanismKind(kind);
  if (!parsed.ok()) {
    return r.Error("kind", std::string(parsed.status().message()));
  }
  spec.kind = *parsed;
  if (r.Has("epsilon")) {
    DISTPRIV_ASSIGN_OR_RETURN(spec.epsilon, r.Number("epsilon"));
  } else if (spec.kind != MechanismKind::kIdentity &&
             spec.kind != MechanismKind::kPlanarGaussian) {
    return r.Error("epsilon", "is required");
  }
  if (r.Has("radius")) {
    DISTPRIV_ASSIGN_OR_RETURN(spec.radius, r.Number("radius"));
  }
  if (r.Has("sigma")) {
    DISTPRIV_ASSIGN_OR_RETURN(spec.sigma, r.Number("sigma"));
  }
  DISTPRIV_RETURN_IF_ERROR(r.CheckNoUnknownKeys());
  if (auto s = spec.Validate(); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("config field '", path, "': ", s.message()));
  }
  return spec;
}

}  // namespace internal

// Parses and validates a config document. Every error names the field.
inline absl::StatusOr<ExperimentConfig> ParseExperimentConfig(
    const nlohmann::json& doc) {
  using internal::FieldReader;
  FieldReader root(doc, "");
  DISTPRIV_RETURN_IF_ERROR(root.CheckObject());
  ExperimentConfig config;
  config.hash = Fnv1a64(doc.dump());
  DISTPRIV_ASSIGN_OR_RETURN(config.seed, root.Unsigned("seed"));

  // dataset
  if (!root.Has("dataset")) return root.Error("dataset", "is required");
  {
    FieldReader r(root.At("dataset"), "dataset");
    DISTPRIV_RETURN_IF_ERROR(r.CheckObject());
    DISTPRIV_ASSIGN_OR_RETURN(const std::string kind, r.String("kind"));
    DatasetConfig& d = config.dataset;
    if (kind == "synthetic") {
      d.kind = DatasetConfig::Kind::kSynthetic;
      DISTPRIV_ASSIGN_OR_RETURN(d.profile, r.String("profile"));
      if (!ParseSynthProfileKind(d.profile).ok()) {
        return r.Error("profile",
                       "must be home-outside, north-south or bimodal");
      }
      if (r.Has("sigma")) {
        DISTPRIV_ASSIGN_OR_RETURN(d.sigma, r.Number("sigma"));
        if (!(*d.sigma > 0.0)) return r.Error("sigma", "must be positive");
      }
      if (r.Has("centers")) {
        const auto& c = r.At("centers");
        if (!c.is_array() || c.empty()) {
          return r.Error("centers", "must be a nonempty array of [u, v]");
        }
        for (const auto& p : c) {
          if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
              !p[1].is_number()) {
            return r.Error("centers", "must be a nonempty array of [u, v]");
          }
          d.centers.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
      }
      if (d.profile == "bimodal" && (d.centers.empty() || !d.sigma)) {
        return r.Error("centers",
                       "bimodal profile needs both sigma and centers");
      }
      DISTPRIV_ASSIGN_OR_RETURN(d.records, r.Integer("records"));
      if (d.records < 2) return r.Error("records", "must be at least 2");
    } else if (kind == "csv") {
      d.kind = DatasetConfig::Kind::kCsv;
      DISTPRIV_ASSIGN_OR_RETURN(d.path, r.String("path"));
      if (r.Has("from")) {
        DISTPRIV_ASSIGN_OR_RETURN(d.from, r.Integer("from"));
      }
      if (r.Has("to")) {
        DISTPRIV_ASSIGN_OR_RETURN(d.to, r.Integer("to"));
      }
    } else {
      return r.Error("kind", "must be \"synthetic\" or \"csv\"");
    }
    DISTPRIV_RETURN_IF_ERROR(r.CheckNoUnknownKeys());
  }

  // grid
  if (!root.Has("grid")) return root.Error("grid", "is required");
  {
    FieldReader r(root.At("grid"), "grid");
    DISTPRIV_RETURN_IF_ERROR(r.CheckObject());
    GridConfig& g = config.grid;
    if (!r.Has("box")) return r.Error("box", "is required");
    DISTPRIV_ASSIGN_OR_RETURN(g.box, internal::ParseBox(r, "box"));
    DISTPRIV_ASSIGN_OR_RETURN(const std::int64_t rows, r.Integer("rows"));
    DISTPRIV_ASSIGN_OR_RETURN(const std::int64_t cols, r.Integer("cols"));
    if (rows < 1 || rows > 1000) return r.Error("rows", "must be in [1, 1000]");
    if (cols < 1 || cols > 1000) return r.Error("cols", "must be in [1, 1000]");
    g.rows = static_cast<int>(rows);
    g.cols = static_cast<int>(cols);
    if (r.Has("max_count")) {
      DISTPRIV_ASSIGN_OR_RETURN(const std::int64_t m, r.Integer("max_count"));
      if (m < 1) return r.Error("max_count", "must be at least 1");
      g.max_count = static_cast<std::size_t>(m);
    }
    if (r.Has("inner_box")) {
      DISTPRIV_ASSIGN_OR_RETURN(g.inner_box, internal::ParseBox(r, "inner_box"));
    }
    DISTPRIV_RETURN_IF_ERROR(r.CheckNoUnknownKeys());
  }

  DISTPRIV_ASSIGN_OR_RETURN(config.attribute, root.String("attribute"));
  if (config.attribute.empty()) {
    return root.Error("attribute", "must be nonempty");
  }

  // mechanisms
  if (!root.Has("mechanisms")) return root.Error("mechanisms", "is required");
  {
    const auto& list = root.At("mechanisms");
    if (!list.is_array() || list.empty()) {
      return root.Error("mechanisms", "must be a nonempty array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      DISTPRIV_ASSIGN_OR_RETURN(
          MechanismSpec spec,
          internal::ParseMechanism(list[i], absl::StrCat("mechanisms[", i, "]")));
      config.mechanisms.push_back(spec);
    }
  }

  // tupling
  if (!root.Has("tupling")) return root.Error("tupling", "is required");
  {
    FieldReader r(root.At("tupling"), "tupling");
    DISTPRIV_RETURN_IF_ERROR(r.CheckObject());
    TuplingConfig& t = config.tupling;
    DISTPRIV_ASSIGN_OR_RETURN(t.k, r.Integers("k"));
    for (int k : t.k) {
      if (k < 1) return r.Error("k", "entries must be at least 1");
    }
    if (r.Has("dummy")) {
      DISTPRIV_ASSIGN_OR_RETURN(const std::string dummy, r.String("dummy"));
      if (dummy != "uniform") return r.Error("dummy", "must be \"uniform\"");
    }
    if (!r.Has("inner")) return r.Error("inner", "is required");
    DISTPRIV_ASSIGN_OR_RETURN(
        t.inner, internal::ParseMechanism(r.At("inner"), r.Path("inner")));
    DISTPRIV_ASSIGN_OR_RETURN(t.epsilon_a, r.Numbers("epsilon_a"));
    for (double e : t.epsilon_a) {
      if (!(e >= 0.0)) return r.Error("epsilon_a", "entries must be >= 0");
    }
    DISTPRIV_ASSIGN_OR_RETURN(t.radius, r.Numbers("radius"));
    for (double v : t.radius) {
      if (!(v >= 0.0)) return r.Error("radius", "entries must be >= 0");
    }
    if (t.inner.kind != MechanismKind::kRestrictedLaplace) {
      return r.Error("inner", "must be a restricted-laplace mechanism");
    }
    DISTPRIV_ASSIGN_OR_RETURN(const std::int64_t fixed_k, r.Integer("fixed_k"));
    if (fixed_k < 1) return r.Error("fixed_k", "must be at least 1");
    t.fixed_k = static_cast<int>(fixed_k);
    DISTPRIV_ASSIGN_OR_RETURN(t.bounds_k, r.Integers("bounds_k"));
    for (int k : t.bounds_k) {
      if (k < 1) return r.Error("bounds_k", "entries must be at least 1");
    }
    DISTPRIV_RETURN_IF_ERROR(r.CheckNoUnknownKeys());
  }

  // privacy
  if (!root.Has("privacy")) return root.Error("privacy", "is required");
  {
    FieldReader r(root.At("privacy"), "privacy");
    DISTPRIV_RETURN_IF_ERROR(r.CheckObject());
    PrivacyConfig& p = config.privacy;
    DISTPRIV_ASSIGN_OR_RETURN(p.target_delta, r.Number("target_delta"));
    if (!(p.target_delta > 0.0 && p.target_delta < 1.0)) {
      return r.Error("target_delta", "must lie in (0, 1)");
    }
    DISTPRIV_ASSIGN_OR_RETURN(p.deltas, r.Numbers("deltas"));
    for (double d : p.deltas) {
      if (!(d > 0.0 && d < 1.0)) {
        return r.Error("deltas", "entries must lie in (0, 1)");
      }
    }
    DISTPRIV_ASSIGN_OR_RETURN(p.samples, r.Integer("samples"));
    if (p.samples < kMinDistpSamples) {
      return r.Error("samples",
                     absl::StrCat("must be at least ", kMinDistpSamples));
    }
    DISTPRIV_RETURN_IF_ERROR(r.CheckNoUnknownKeys());
  }

  if (root.Has("output")) {
    DISTPRIV_ASSIGN_OR_RETURN(config.output, root.String("output"));
  }
  if (root.Has("threads")) {
    DISTPRIV_ASSIGN_OR_RETURN(const std::int64_t threads,
                              root.Integer("threads"));
    if (threads < 1) return root.Error("threads", "must be at least 1");
    config.threads = static_cast<int>(threads);
  }
  DISTPRIV_RETURN_IF_ERROR(root.CheckNoUnknownKeys());
  return config;
}

inline absl::StatusOr<ExperimentConfig> ParseExperimentConfigText(
    std::string_view text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr,
                                             /*allow_exceptions=*/false,
                                             /*ignore_comments=*/true);
  if (doc.is_discarded()) {
    return absl::InvalidArgumentError("config: not valid JSON");
  }
  return ParseExperimentConfig(doc);
}

inline absl::StatusOr<ExperimentConfig> LoadExperimentConfig(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open config ", path));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseExperimentConfigText(buffer.str());
}

// The concrete inputs of an experiment: regions, the protected inputs X
// (a subset of the regions), the output space Y (all regions), and the two
// attribute distributions over X.
struct Scenario {
  std::vector<Region> regions;
  std::vector<std::size_t> inputs;
  Domain domain;
  AttributeDists dists;
  // Record-weighted mixture of the two attribute distributions.
  ProbDist population;
  bool depth_limited = false;
};

inline absl::StatusOr<Scenario> BuildScenario(const ExperimentConfig& config) {
  const GridConfig& grid = config.grid;
  DISTPRIV_ASSIGN_OR_RETURN(std::vector<Region> regions,
                            BaseGrid(grid.box, grid.rows, grid.cols));
  std::vector<CheckinRecord> records;
  const DatasetConfig& data = config.dataset;
  if (data.kind == DatasetConfig::Kind::kSynthetic) {
    DISTPRIV_ASSIGN_OR_RETURN(const SynthProfile::Kind kind,
                              ParseSynthProfileKind(data.profile));
    SynthProfile profile;
    switch (kind) {
      case SynthProfile::Kind::kNorthSouth:
        profile = data.sigma ? SynthProfile::NorthSouth(*data.sigma)
                             : SynthProfile::NorthSouth();
        break;
      case SynthProfile::Kind::kHomeOutside:
        profile = data.sigma ? SynthProfile::HomeOutside(*data.sigma)
                             : SynthProfile::HomeOutside();
        break;
      case SynthProfile::Kind::kBimodal:
        profile = SynthProfile::Bimodal(*data.sigma, data.centers);
        break;
    }
    profile.attribute = config.attribute;
    DISTPRIV_ASSIGN_OR_RETURN(
        records, SynthAttributePopulation(grid.box, profile, data.records,
                                          DeriveSeed(config.seed, "dataset", 0)));
  } else {
    std::ifstream in(data.path);
    if (!in) {
      return absl::NotFoundError(
          absl::StrCat("cannot open check-in file ", data.path));
    }
    DISTPRIV_ASSIGN_OR_RETURN(records, ReadCheckinsCsv(in, grid.box));
    records = FilterByTime(records, data.from, data.to);
  }
  bool depth_limited = false;
  if (grid.max_count.has_value()) {
    const auto points = RecordPoints(records);
    DISTPRIV_ASSIGN_OR_RETURN(
        Partition partition,
        AdaptivePartition(regions, points, *grid.max_count));
    regions = std::move(partition.regions);
    depth_limited = partition.depth_limited;
  }
  std::vector<std::size_t> inputs;
  if (grid.inner_box.has_value()) {
    inputs = RegionsInside(regions, *grid.inner_box);
    if (inputs.empty()) {
      return absl::InvalidArgumentError(
          "config field 'grid.inner_box': contains no region centroid");
    }
  } else {
    inputs.resize(regions.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = i;
  }
  DISTPRIV_ASSIGN_OR_RETURN(SpacePtr outputs, RegionsToSpace(regions));
  DISTPRIV_ASSIGN_OR_RETURN(Domain domain, Domain::Embedded(outputs, inputs));
  DISTPRIV_ASSIGN_OR_RETURN(
      AttributeDists dists,
      EmpiricalAttributeDists(records, regions, config.attribute,
                              domain.input(), inputs));
  const double weight =
      static_cast<double>(dists.true_count) /
      static_cast<double>(dists.true_count + dists.false_count);
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist population,
                            Mix(dists.on_true, dists.on_false, weight));
  return Scenario{std::move(regions), std::move(inputs), std::move(domain),
                  std::move(dists), std::move(population), depth_limited};
}

// Curves.

inline constexpr std::string_view kCurveNames[] = {
    "eps-vs-k",     "eps-vs-epsA",           "eps-vs-r",
    "loss-vs-epsA", "eps-vs-loss-comparison", "distp-vs-asr",
    "bounds-report"};

inline bool IsCurveName(std::string_view name) {
  return std::find(std::begin(kCurveNames), std::end(kCurveNames), name) !=
         std::end(kCurveNames);
}

// One row of a sweep curve.
struct CurveRow {
  double param = 0.0;
  PrivacyReport report;
  double loss = 0.0;
  std::optional<Estimate> asr;
};

struct ComparisonRow {
  std::string mechanism;
  double param = 0.0;
  PrivacyReport report;
  double loss = 0.0;
  Estimate asr;
};

struct BoundsRow {
  int k = 0;
  double delta = 0.0;
  // Unset when no alpha reaches the target delta; epsilon_alpha is then
  // unbounded.
  std::optional<TuplingBound> bound;
  PrivacyReport estimate;
  bool dominates = false;
};

namespace internal {

// Evaluates fn(0..count-1) on `threads` workers and returns the results in
// index order; the first error by index wins.
template <typename T>
absl::StatusOr<std::vector<T>> RunPoints(
    std::size_t count, int threads,
    const std::function<absl::StatusOr<T>(std::size_t)>& fn) {
  std::vector<std::optional<absl::StatusOr<T>>> results(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) results[i] = fn(i);
  };
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  std::vector<T> out;
  out.reserve(count);
  for (auto& r : results) {
    if (!r->ok()) return r->status();
    out.push_back(*std::move(*r));
  }
  return out;
}

inline MechanismSpec WithInner(MechanismSpec spec, std::optional<double> eps,
                               std::optional<double> radius) {
  if (eps) spec.epsilon = *eps;
  if (radius) spec.radius = *radius;
  return spec;
}

inline MonteCarloOptions PointOptions(const ExperimentConfig& config,
                                      std::string_view label,
                                      std::size_t index) {
  return MonteCarloOptions{config.privacy.samples,
                           DeriveSeed(config.seed, label, index), 1};
}

inline absl::StatusOr<CurveRow> TuplingPoint(const ExperimentConfig& config,
                                             const Scenario& scenario,
                                             const MechanismSpec& inner_spec,
                                             int k, double param,
                                             const MonteCarloOptions& options,
                                             bool with_asr) {
  DISTPRIV_ASSIGN_OR_RETURN(Channel inner,
                            BuildMechanism(inner_spec, scenario.domain));
  DISTPRIV_ASSIGN_OR_RETURN(TuplingMechanism mech,
                            TuplingMechanism::WithUniformDummies(k, inner));
  DISTPRIV_ASSIGN_OR_RETURN(
      PrivacyReport report,
      DistpEpsilonTuplingMc(mech, scenario.dists.on_true,
                            scenario.dists.on_false,
                            config.privacy.target_delta, options));
  DISTPRIV_ASSIGN_OR_RETURN(
      Estimate loss, ExpectedLoss(mech, scenario.population, scenario.domain,
                                  EstimationMode::Exact()));
  CurveRow row{param, std::move(report), loss.value, std::nullopt};
  if (with_asr) {
    const ProbDist dists[] = {scenario.dists.on_true, scenario.dists.on_false};
    const double priors[] = {0.5, 0.5};
    MonteCarloOptions asr_options = options;
    asr_options.seed = SplitMix64(options.seed ^ 0xa5a5a5a5ULL);
    DISTPRIV_ASSIGN_OR_RETURN(
        row.asr, AttackSuccessRate(mech, dists, priors,
                                   EstimationMode::MonteCarlo(asr_options)));
  }
  return row;
}

}  // namespace internal

// Runs one of the sweep curves (everything except the comparison and the
// bounds report).
inline absl::StatusOr<std::vector<CurveRow>> RunCurve(
    const ExperimentConfig& config, const Scenario& scenario,
    std::string_view curve) {
  const TuplingConfig& t = config.tupling;
  struct Point {
    MechanismSpec inner;
    int k;
    double param;
  };
  std::vector<Point> points;
  bool with_asr = false;
  if (curve == "eps-vs-k" || curve == "distp-vs-asr") {
    for (int k : t.k) points.push_back({t.inner, k, static_cast<double>(k)});
    with_asr = curve == "distp-vs-asr";
  } else if (curve == "eps-vs-epsA" || curve == "loss-vs-epsA") {
    for (double e : t.epsilon_a) {
      points.push_back({internal::WithInner(t.inner, e, std::nullopt),
                        t.fixed_k, e});
    }
  } else if (curve == "eps-vs-r") {
    for (double r : t.radius) {
      points.push_back({internal::WithInner(t.inner, std::nullopt, r),
                        t.fixed_k, r});
    }
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("not a sweep curve: ", std::string(curve)));
  }
  return internal::RunPoints<CurveRow>(
      points.size(), config.threads,
      [&](std::size_t i) -> absl::StatusOr<CurveRow> {
        return internal::TuplingPoint(config, scenario, points[i].inner,
                                      points[i].k, points[i].param,
                                      internal::PointOptions(config, curve, i),
                                      with_asr);
      });
}

inline double MechanismParam(const MechanismSpec& spec) {
  return spec.kind == MechanismKind::kPlanarGaussian ? *spec.sigma
                                                     : spec.epsilon;
}

// DistP at the target delta, expected loss and ASR of every configured
// mechanism, followed by the tupling mechanism with k = fixed_k over the
// epsilon_a sweep.
inline absl::StatusOr<std::vector<ComparisonRow>> RunComparison(
    const ExperimentConfig& config, const Scenario& scenario) {
  std::set<MechanismKind> kinds;
  for (const auto& m : config.mechanisms) kinds.insert(m.kind);
  if (kinds.size() < 2) {
    return absl::InvalidArgumentError(
        "config field 'mechanisms': the comparison needs at least two "
        "mechanism kinds");
  }
  const std::size_t plain = config.mechanisms.size();
  const std::size_t total = plain + config.tupling.epsilon_a.size();
  const DistributionPairs pairs = {
      {scenario.dists.on_true, scenario.dists.on_false}};
  const ProbDist dists[] = {scenario.dists.on_true, scenario.dists.on_false};
  const double priors[] = {0.5, 0.5};
  return internal::RunPoints<ComparisonRow>(
      total, config.threads,
      [&](std::size_t i) -> absl::StatusOr<ComparisonRow> {
        if (i < plain) {
          const MechanismSpec& spec = config.mechanisms[i];
          DISTPRIV_ASSIGN_OR_RETURN(Channel channel,
                                    BuildMechanism(spec, scenario.domain));
          DISTPRIV_ASSIGN_OR_RETURN(
              PrivacyReport report,
              DistpEpsilonExact(channel, pairs, config.privacy.target_delta));
          DISTPRIV_ASSIGN_OR_RETURN(
              double loss,
              ExpectedLoss(channel, scenario.population, scenario.domain));
          DISTPRIV_ASSIGN_OR_RETURN(
              Estimate asr, AttackSuccessRate(channel, dists, priors,
                                              EstimationMode::Exact()));
          return ComparisonRow{std::string(MechanismKindName(spec.kind)),
                               MechanismParam(spec), std::move(report), loss,
                               asr};
        }
        const double e = config.tupling.epsilon_a[i - plain];
        DISTPRIV_ASSIGN_OR_RETURN(
            CurveRow row,
            internal::TuplingPoint(
                config, scenario,
                internal::WithInner(config.tupling.inner, e, std::nullopt),
                config.tupling.fixed_k, e,
                internal::PointOptions(config, "eps-vs-loss-comparison", i),
                /*with_asr=*/true));
        return ComparisonRow{"tupling", e, std::move(row.report), row.loss,
                             *row.asr};
      });
}

// For every k in bounds_k and every delta: the measured (beta, eta), the
// tightest bound at that delta, the Monte-Carlo estimate, and whether the
// bound dominates the estimate.
inline absl::StatusOr<std::vector<BoundsRow>> RunBoundsReport(
    const ExperimentConfig& config, const Scenario& scenario) {
  const auto& ks = config.tupling.bounds_k;
  const auto& deltas = config.privacy.deltas;
  DISTPRIV_ASSIGN_OR_RETURN(
      Channel inner, BuildMechanism(config.tupling.inner, scenario.domain));
  return internal::RunPoints<BoundsRow>(
      ks.size() * deltas.size(), config.threads,
      [&](std::size_t i) -> absl::StatusOr<BoundsRow> {
        const int k = ks[i / deltas.size()];
        const double delta = deltas[i % deltas.size()];
        DISTPRIV_ASSIGN_OR_RETURN(
            TuplingMechanism mech,
            TuplingMechanism::WithUniformDummies(k, inner));
        DISTPRIV_ASSIGN_OR_RETURN(
            std::optional<TuplingBound> bound,
            MeasuredTuplingBound(mech, scenario.dists.on_true,
                                 scenario.dists.on_false, delta));
        // Every delta of one k shares the sample stream.
        DISTPRIV_ASSIGN_OR_RETURN(
            PrivacyReport estimate,
            DistpEpsilonTuplingMc(
                mech, scenario.dists.on_true, scenario.dists.on_false, delta,
                internal::PointOptions(config, "bounds-report", i / deltas.size())));
        const bool dominates =
            !bound.has_value() ||
            (estimate.bounded() && bound->epsilon_alpha >= *estimate.epsilon());
        return BoundsRow{k, delta, bound, std::move(estimate), dominates};
      });
}

// CSV output.

struct RunMetadata {
  std::string curve;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::int64_t samples = 0;
  // Written on its own line so that comparisons can skip it.
  std::string timestamp;
};

inline constexpr std::string_view kTimestampPrefix = "# timestamp:";

inline std::string UtcTimestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

inline void WriteMetadata(const RunMetadata& meta, std::string_view sweep,
                          std::ostream& out) {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(meta.config_hash));
  out << "# distpriv " << kVersion << "\n"
      << "# curve: " << meta.curve << "\n"
      << "# sweep-param: " << sweep << "\n"
      << "# config_hash: " << hash << "\n"
      << "# seed: " << meta.seed << "\n"
      << "# samples: " << meta.samples << "\n"
      << kTimestampPrefix << " " << meta.timestamp << "\n";
}

inline std::string EpsilonField(const PrivacyReport& r) { return r.Record()[0]; }

inline std::string SweepParamName(std::string_view curve) {
  if (curve == "eps-vs-k" || curve == "distp-vs-asr") return "k";
  if (curve == "eps-vs-r") return "radius";
  return "epsilon_a";
}

// Columns: sweep-param, epsilon, delta, loss, asr, stderr, n, seed,
// asr_stderr. stderr belongs to epsilon; asr fields are empty when the curve
// does not estimate the attack success rate.
inline void WriteCurveCsv(const RunMetadata& meta,
                          std::span<const CurveRow> rows, std::ostream& out) {
  WriteMetadata(meta, SweepParamName(meta.curve), out);
  out << "sweep-param,epsilon,delta,loss,asr,stderr,n,seed,asr_stderr\n";
  for (const CurveRow& row : rows) {
    out << FormatDouble(row.param) << "," << EpsilonField(row.report) << ","
        << FormatDouble(row.report.delta()) << "," << FormatDouble(row.loss)
        << "," << (row.asr ? FormatDouble(row.asr->value) : "") << ","
        << FormatDouble(row.report.standard_error()) << ","
        << row.report.samples() << "," << row.report.seed() << ","
        << (row.asr ? FormatDouble(row.asr->standard_error) : "") << "\n";
  }
}

inline void WriteComparisonCsv(const RunMetadata& meta,
                               std::span<const ComparisonRow> rows,
                               std::ostream& out) {
  WriteMetadata(meta, "mechanism parameter (epsilon, or sigma for PG)", out);
  out << "mechanism,param,epsilon,delta,loss,asr,stderr,n,seed,asr_stderr,"
         "method\n";
  for (const ComparisonRow& row : rows) {
    out << row.mechanism << "," << FormatDouble(row.param) << ","
        << EpsilonField(row.report) << "," << FormatDouble(row.report.delta())
        << "," << FormatDouble(row.loss) << "," << FormatDouble(row.asr.value)
        << "," << FormatDouble(row.report.standard_error()) << ","
        << row.report.samples() << "," << row.report.seed() << ","
        << FormatDouble(row.asr.standard_error) << ","
        << MethodName(row.report.method()) << "\n";
  }
}

inline void WriteBoundsCsv(const RunMetadata& meta,
                           std::span<const BoundsRow> rows, std::ostream& out) {
  WriteMetadata(meta, "k", out);
  out << "k,delta,beta,eta,alpha,epsilon_alpha,delta_alpha,epsilon_hat,"
         "stderr,dominates,n,seed\n";
  for (const BoundsRow& row : rows) {
    out << row.k << "," << FormatDouble(row.delta) << ",";
    if (row.bound.has_value()) {
      out << FormatDouble(row.bound->beta) << "," << FormatDouble(row.bound->eta)
          << "," << FormatDouble(row.bound->alpha) << ","
          << FormatDouble(row.bound->epsilon_alpha) << ","
          << FormatDouble(row.bound->delta_alpha) << ",";
    } else {
      out << ",,,inf,,";
    }
    out << EpsilonField(row.estimate) << ","
        << FormatDouble(row.estimate.standard_error()) << ","
        << (row.dominates ? 1 : 0) << "," << row.estimate.samples() << ","
        << row.estimate.seed() << "\n";
  }
}

// Runs `curve` and writes <out_dir>/<curve>.csv. Returns the file path.
inline absl::StatusOr<std::string> RunAndWrite(const ExperimentConfig& config,
                                               const Scenario& scenario,
                                               std::string_view curve,
                                               const std::string& out_dir,
                                               const std::string& timestamp) {
  if (!IsCurveName(curve)) {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown curve \"", std::string(curve), "\""));
  }
  const std::string path = absl::StrCat(out_dir, "/", std::string(curve), ".csv");
  std::ostringstream out;
  RunMetadata meta{std::string(curve), config.hash, config.seed,
                   config.privacy.samples, timestamp};
  if (curve == "eps-vs-loss-comparison") {
    DISTPRIV_ASSIGN_OR_RETURN(auto rows, RunComparison(config, scenario));
    WriteComparisonCsv(meta, rows, out);
  } else if (curve == "bounds-report") {
    DISTPRIV_ASSIGN_OR_RETURN(auto rows, RunBoundsReport(config, scenario));
    WriteBoundsCsv(meta, rows, out);
  } else {
    DISTPRIV_ASSIGN_OR_RETURN(auto rows, RunCurve(config, scenario, curve));
    WriteCurveCsv(meta, rows, out);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  file << out.str();
  if (!file) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  return path;
}

}  // namespace distpriv

#endif  // DISTPRIV_EXPERIMENT_H_
