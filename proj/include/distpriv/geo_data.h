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

#ifndef DISTPRIV_GEO_DATA_H_
#define DISTPRIV_GEO_DATA_H_

// Planar region grids, quadtree refinement, check-in records, and a synthetic
// population generator. All coordinates are in kilometres.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "distpriv/core_model.h"
#include "distpriv/csv.h"
#include "distpriv/monte_carlo.h"
#include "distpriv/status_macros.h"

namespace distpriv {

struct Box {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  bool Contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  bool Valid() const {
    return std::isfinite(min_x) && std::isfinite(min_y) &&
           std::isfinite(max_x) && std::isfinite(max_y) && max_x > min_x &&
           max_y > min_y;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Region {
  std::size_t id = 0;
  Box bounds;
  double centroid_x = 0.0;
  double centroid_y = 0.0;

  friend bool operator==(const Region&, const Region&) = default;
};

inline Region MakeRegion(std::size_t id, const Box& bounds) {
  return Region{id, bounds, (bounds.min_x + bounds.max_x) / 2.0,
                (bounds.min_y + bounds.max_y) / 2.0};
}

struct CheckinRecord {
  std::string user_id;
  double x_km = 0.0;
  double y_km = 0.0;
  std::map<std::string, bool> attributes;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const CheckinRecord&, const CheckinRecord&) = default;
};

// rows x cols equal cells. Ids are row-major with row 0 along min_y.
inline absl::StatusOr<std::vector<Region>> BaseGrid(const Box& box, int rows,
                                                    int cols) {
  if (!box.Valid()) return absl::InvalidArgumentError("degenerate box");
  if (rows < 1 || cols < 1) {
    return absl::InvalidArgumentError("rows and cols must be at least 1");
  }
  std::vector<Region> regions;
  regions.reserve(static_cast<std::size_t>(rows) * cols);
  const double dx = box.width() / cols;
  const double dy = box.height() / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Box cell{box.min_x + c * dx, box.min_y + r * dy,
               c + 1 == cols ? box.max_x : box.min_x + (c + 1) * dx,
               r + 1 == rows ? box.max_y : box.min_y + (r + 1) * dy};
      regions.push_back(MakeRegion(regions.size(), cell));
    }
  }
  return regions;
}

inline Box BoundingBox(std::span<const Region> regions) {
  Box box = regions.empty() ? Box{} : regions.front().bounds;
  for (const Region& r : regions) {
    box.min_x = std::min(box.min_x, r.bounds.min_x);
    box.min_y = std::min(box.min_y, r.bounds.min_y);
    box.max_x = std::max(box.max_x, r.bounds.max_x);
    box.max_y = std::max(box.max_y, r.bounds.max_y);
  }
  return box;
}

// Index of the first region whose closed bounds contain (x, y).
inline std::optional<std::size_t> LocateRegion(std::span<const Region> regions,
                                               double x, double y) {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].bounds.Contains(x, y)) return i;
  }
  return std::nullopt;
}

inline constexpr int kMaxPartitionDepth = 12;

struct Partition {
  std::vector<Region> regions;
  int splits = 0;
  // Set when some region still holds more than max_count points at the depth
  // limit, which happens only for heavily duplicated coordinates.
  bool depth_limited = false;
};

namespace internal {

// NW, NE, SW, SE.
inline std::array<Box, 4> Quadrants(const Box& b) {
  const double mx = (b.min_x + b.max_x) / 2.0;
  const double my = (b.min_y + b.max_y) / 2.0;
  return {Box{b.min_x, my, mx, b.max_y}, Box{mx, my, b.max_x, b.max_y},
          Box{b.min_x, b.min_y, mx, my}, Box{mx, b.min_y, b.max_x, my}};
}

inline void SplitRegion(const Box& bounds,
                        std::vector<std::pair<double, double>> points,
                        std::size_t max_count, int depth, Partition& out) {
  if (points.size() <= max_count) {
    out.regions.push_back(MakeRegion(out.regions.size(), bounds));
    return;
  }
  if (depth >= kMaxPartitionDepth) {
    out.depth_limited = true;
    out.regions.push_back(MakeRegion(out.regions.size(), bounds));
    return;
  }
  ++out.splits;
  const auto quads = Quadrants(bounds);
  std::array<std::vector<std::pair<double, double>>, 4> parts;
  for (const auto& p : points) {
    for (std::size_t q = 0; q < 4; ++q) {
      if (quads[q].Contains(p.first, p.second)) {
        parts[q].push_back(p);
        break;
      }
    }
  }
  points.clear();
  points.shrink_to_fit();
  for (std::size_t q = 0; q < 4; ++q) {
    SplitRegion(quads[q], std::move(parts[q]), max_count, depth + 1, out);
  }
}

}  // namespace internal

// Splits every region holding more than max_count points into quadrants,
// recursively. Output ids are dense, in input order with each region's
// descendants listed depth-first as NW, NE, SW, SE. A point lying on several
// closed boxes belongs to the first one in that order. Points outside every
// region are ignored.
inline absl::StatusOr<Partition> AdaptivePartition(
    std::span<const Region> regions,
    std::span<const std::pair<double, double>> points, std::size_t max_count) {
  if (max_count < 1) {
    return absl::InvalidArgumentError("max_count must be at least 1");
  }
  std::vector<std::vector<std::pair<double, double>>> assigned(regions.size());
  for (const auto& p : points) {
    if (auto r = LocateRegion(regions, p.first, p.second)) {
      assigned[*r].push_back(p);
    }
  }
  Partition out;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (!regions[i].bounds.Valid()) {
      return absl::InvalidArgumentError(
          absl::StrCat("region ", regions[i].id, " is degenerate"));
    }
    internal::SplitRegion(regions[i].bounds, std::move(assigned[i]), max_count,
                          0, out);
  }
  return out;
}

// Indices of the regions whose centroid lies in the closed box `inner`.
inline std::vector<std::size_t> RegionsInside(std::span<const Region> regions,
                                              const Box& inner) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (inner.Contains(regions[i].centroid_x, regions[i].centroid_y)) {
      out.push_back(i);
    }
  }
  return out;
}

// Space of region centroids with the Euclidean metric. Labels are "r<id>".
inline absl::StatusOr<SpacePtr> RegionsToSpace(std::span<const Region> regions) {
  if (regions.empty()) return absl::InvalidArgumentError("no regions");
  std::vector<std::string> labels;
  std::vector<std::pair<double, double>> points;
  for (const Region& r : regions) {
    labels.push_back(absl::StrCat("r", r.id));
    points.emplace_back(r.centroid_x, r.centroid_y);
  }
  return FiniteSpace::Planar(std::move(labels), points);
}

struct AttributeDists {
  ProbDist on_true;
  ProbDist on_false;
  std::int64_t true_count = 0;
  std::int64_t false_count = 0;
};

// Normalised region histograms of the records carrying `attribute` = true and
// = false. `members[i]` is the region index of element i of `space`; records
// falling in other regions, or lacking the attribute, are skipped.
inline absl::StatusOr<AttributeDists> EmpiricalAttributeDists(
    std::span<const CheckinRecord> records, std::span<const Region> regions,
    const std::string& attribute, SpacePtr space,
    std::span<const std::size_t> members) {
  if (space == nullptr || members.size() != space->size()) {
    return absl::InvalidArgumentError(
        "members must list one region per space element");
  }
  std::vector<std::optional<std::size_t>> element_of(regions.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] >= regions.size()) {
      return absl::OutOfRangeError("member region index out of range");
    }
    element_of[members[i]] = i;
  }
  std::vector<double> counts_true(space->size(), 0.0);
  std::vector<double> counts_false(space->size(), 0.0);
  double total_true = 0.0;
  double total_false = 0.0;
  for (const CheckinRecord& rec : records) {
    auto it = rec.attributes.find(attribute);
    if (it == rec.attributes.end()) continue;
    auto r = LocateRegion(regions, rec.x_km, rec.y_km);
    if (!r.has_value() || !element_of[*r].has_value()) continue;
    if (it->second) {
      counts_true[*element_of[*r]] += 1.0;
      total_true += 1.0;
    } else {
      counts_false[*element_of[*r]] += 1.0;
      total_false += 1.0;
    }
  }
  if (total_true == 0.0 || total_false == 0.0) {
    return absl::FailedPreconditionError(absl::StrCat(
        "EmptyAttributeSide: no records with ", attribute, "=",
        total_true == 0.0 ? "1" : "0", " inside the protected regions"));
  }
  DISTPRIV_ASSIGN_OR_RETURN(ProbDist on_true,
                            ProbDist::FromWeights(space, std::move(counts_true)));
  DISTPRIV_ASSIGN_OR_RETURN(
      ProbDist on_false, ProbDist::FromWeights(space, std::move(counts_false)));
  return AttributeDists{std::move(on_true), std::move(on_false),
                        static_cast<std::int64_t>(total_true),
                        static_cast<std::int64_t>(total_false)};
}

inline absl::StatusOr<AttributeDists> EmpiricalAttributeDists(
    std::span<const CheckinRecord> records, std::span<const Region> regions,
    const std::string& attribute) {
  DISTPRIV_ASSIGN_OR_RETURN(SpacePtr space, RegionsToSpace(regions));
  std::vector<std::size_t> members(regions.size());
  for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
  return EmpiricalAttributeDists(records, regions, attribute, std::move(space),
                                 members);
}

// Keeps records whose timestamp lies in [from, to]. With either bound set,
// records without a timestamp are dropped.
inline std::vector<CheckinRecord> FilterByTime(
    std::span<const CheckinRecord> records, std::optional<std::int64_t> from,
    std::optional<std::int64_t> to) {
  std::vector<CheckinRecord> out;
  for (const CheckinRecord& rec : records) {
    if (from.has_value() || to.has_value()) {
      if (!rec.timestamp.has_value()) continue;
      if (from.has_value() && *rec.timestamp < *from) continue;
      if (to.has_value() && *rec.timestamp > *to) continue;
    }
    out.push_back(rec);
  }
  return out;
}

// Synthetic populations. Each record carries one boolean attribute; records
// alternate true, false, true, ... Coordinates are drawn from a Gaussian
// mixture truncated to the bounding box, with component centres and standard
// deviations given relative to the box (u along x, v along y, both in [0, 1];
// sigma is a fraction of the shorter box side).
struct GaussianComponent {
  double u = 0.5;
  double v = 0.5;
  double sigma = 0.15;
};

struct SynthProfile {
  enum class Kind { kHomeOutside, kNorthSouth, kBimodal };

  Kind kind = Kind::kNorthSouth;
  std::string attribute;
  std::vector<GaussianComponent> on_true;
  std::vector<GaussianComponent> on_false;

  // "north": two components at v = 0.75 for true, their mirror images at
  // v = 0.25 for false.
  static SynthProfile NorthSouth(double sigma = 0.15) {
    return {Kind::kNorthSouth,
            "north",
            {{0.3, 0.75, sigma}, {0.7, 0.75, sigma}},
            {{0.3, 0.25, sigma}, {0.7, 0.25, sigma}}};
  }

  // "home": three tight residential clusters for true, a broad central
  // component plus a tight downtown one for false.
  static SynthProfile HomeOutside(double sigma = 0.12) {
    return {Kind::kHomeOutside,
            "home",
            {{0.2, 0.3, sigma}, {0.75, 0.8, sigma}, {0.8, 0.2, sigma}},
            {{0.5, 0.5, 2.0 * sigma}, {0.45, 0.55, sigma}}};
  }

  // "bimodal": true components at `centers`, false components at the same
  // centres reflected across the vertical midline u = 0.5.
  static SynthProfile Bimodal(
      double sigma, std::span<const std::pair<double, double>> centers) {
    SynthProfile p{Kind::kBimodal, "bimodal", {}, {}};
    for (const auto& [u, v] : centers) {
      p.on_true.push_back({u, v, sigma});
      p.on_false.push_back({1.0 - u, v, sigma});
    }
    return p;
  }
};

inline absl::StatusOr<SynthProfile::Kind> ParseSynthProfileKind(
    std::string_view name) {
  if (name == "home-outside") return SynthProfile::Kind::kHomeOutside;
  if (name == "north-south") return SynthProfile::Kind::kNorthSouth;
  if (name == "bimodal") return SynthProfile::Kind::kBimodal;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown synthetic profile \"", std::string(name), "\""));
}

namespace internal {

inline absl::Status CheckMixture(std::span<const GaussianComponent> mixture) {
  if (mixture.empty()) {
    return absl::InvalidArgumentError("mixture has no components");
  }
  for (const auto& c : mixture) {
    if (!(c.sigma > 0.0) || !std::isfinite(c.sigma) || !std::isfinite(c.u) ||
        !std::isfinite(c.v)) {
      return absl::InvalidArgumentError("invalid mixture component");
    }
  }
  return absl::OkStatus();
}

inline double StandardNormal(RandomStream& rng) {
  // Box-Muller; 1 - U keeps the logarithm finite.
  const double u1 = 1.0 - rng.Uniform01();
  const double u2 = rng.Uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

inline std::pair<double, double> SampleTruncated(
    std::span<const GaussianComponent> mixture, const Box& box,
    RandomStream& rng) {
  const double scale = std::min(box.width(), box.height());
  const auto& c = mixture[rng.UniformIndex(mixture.size())];
  const double cx = box.min_x + c.u * box.width();
  const double cy = box.min_y + c.v * box.height();
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double x = cx + c.sigma * scale * StandardNormal(rng);
    const double y = cy + c.sigma * scale * StandardNormal(rng);
    if (box.Contains(x, y)) return {x, y};
  }
  return {std::clamp(cx, box.min_x, box.max_x),
          std::clamp(cy, box.min_y, box.max_y)};
}

}  // namespace internal

inline absl::StatusOr<std::vector<CheckinRecord>> SynthAttributePopulation(
    const Box& box, const SynthProfile& profile, std::int64_t n,
    std::uint64_t seed) {
  if (n < 1) return absl::InvalidArgumentError("n must be at least 1");
  if (!box.Valid()) return absl::InvalidArgumentError("degenerate box");
  DISTPRIV_RETURN_IF_ERROR(internal::CheckMixture(profile.on_true));
  DISTPRIV_RETURN_IF_ERROR(internal::CheckMixture(profile.on_false));
  RandomStream rng(seed, 0);
  std::vector<CheckinRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  constexpr std::int64_t kEpochStart = 1'700'000'000;
  for (std::int64_t i = 0; i < n; ++i) {
    const bool value = i % 2 == 0;
    const auto [x, y] = internal::SampleTruncated(
        value ? profile.on_true : profile.on_false, box, rng);
    CheckinRecord rec;
    rec.user_id = absl::StrCat("u", i);
    rec.x_km = x;
    rec.y_km = y;
    rec.attributes[profile.attribute] = value;
    rec.timestamp = kEpochStart + 60 * i;
    records.push_back(std::move(rec));
  }
  return records;
}

inline absl::StatusOr<std::vector<CheckinRecord>> SynthAttributePopulation(
    std::span<const Region> regions, const SynthProfile& profile,
    std::int64_t n, std::uint64_t seed) {
  if (regions.empty()) return absl::InvalidArgumentError("no regions");
  return SynthAttributePopulation(BoundingBox(regions), profile, n, seed);
}

inline std::vector<std::pair<double, double>> RecordPoints(
    std::span<const CheckinRecord> records) {
  std::vector<std::pair<double, double>> points;
  points.reserve(records.size());
  for (const auto& rec : records) points.emplace_back(rec.x_km, rec.y_km);
  return points;
}

// CSV I/O.

inline constexpr char kCheckinHeader[] =
    "user_id,x_km,y_km,attr_name,attr_value,timestamp";
inline constexpr char kRegionHeader[] =
    "id,min_x,min_y,max_x,max_y,centroid_x,centroid_y";

// One row per (record, attribute) pair.
inline void WriteCheckinsCsv(std::span<const CheckinRecord> records,
                             std::ostream& out) {
  out << kCheckinHeader << "\n";
  for (const auto& rec : records) {
    for (const auto& [name, value] : rec.attributes) {
      out << rec.user_id << "," << FormatDouble(rec.x_km) << ","
          << FormatDouble(rec.y_km) << "," << name << "," << (value ? 1 : 0)
          << ",";
      if (rec.timestamp.has_value()) out << *rec.timestamp;
      out << "\n";
    }
  }
}

// Consecutive rows sharing user, coordinates and timestamp are merged into one
// record. With `bounds` set, coordinates outside it are rejected.
inline absl::StatusOr<std::vector<CheckinRecord>> ReadCheckinsCsv(
    std::istream& in, std::optional<Box> bounds = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) {
    return absl::InvalidArgumentError("check-in file is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (!line.empty() && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (line != kCheckinHeader) {
    return absl::InvalidArgumentError(
        absl::StrCat("unexpected check-in header \"", line, "\""));
  }
  std::vector<CheckinRecord> records;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    const auto fields = SplitCsvLine(line);
    const auto where = [&] { return absl::StrCat("line ", line_number, ": "); };
    if (fields.size() != 6) {
      return absl::InvalidArgumentError(
          absl::StrCat(where(), "expected 6 fields, got ", fields.size()));
    }
    const auto x = ParseDouble(fields[1]);
    const auto y = ParseDouble(fields[2]);
    if (!x.has_value() || !y.has_value() || !std::isfinite(*x) ||
        !std::isfinite(*y)) {
      return absl::InvalidArgumentError(absl::StrCat(where(), "bad coordinate"));
    }
    if (bounds.has_value() && !bounds->Contains(*x, *y)) {
      return absl::OutOfRangeError(
          absl::StrCat(where(), "coordinate outside the bounding box"));
    }
    if (fields[3].empty()) {
      return absl::InvalidArgumentError(absl::StrCat(where(), "empty attr_name"));
    }
    if (fields[4] != "0" && fields[4] != "1") {
      return absl::InvalidArgumentError(
          absl::StrCat(where(), "attr_value must be 0 or 1"));
    }
    std::optional<std::int64_t> timestamp;
    if (!fields[5].empty()) {
      std::int64_t t = 0;
      if (!absl::SimpleAtoi(std::string(fields[5]), &t)) {
        return absl::InvalidArgumentError(absl::StrCat(where(), "bad timestamp"));
      }
      timestamp = t;
    }
    const std::string user(fields[0]);
    if (records.empty() || records.back().user_id != user ||
        records.back().x_km != *x || records.back().y_km != *y ||
        records.back().timestamp != timestamp) {
      records.push_back(CheckinRecord{user, *x, *y, {}, timestamp});
    }
    records.back().attributes[std::string(fields[3])] = fields[4] == "1";
  }
  return records;
}

inline void WriteRegionsCsv(std::span<const Region> regions, std::ostream& out) {
  out << kRegionHeader << "\n";
  for (const auto& r : regions) {
    out << r.id << "," << FormatDouble(r.bounds.min_x) << ","
        << FormatDouble(r.bounds.min_y) << "," << FormatDouble(r.bounds.max_x)
        << "," << FormatDouble(r.bounds.max_y) << ","
        << FormatDouble(r.centroid_x) << "," << FormatDouble(r.centroid_y)
        << "\n";
  }
}

}  // namespace distpriv

#endif  // DISTPRIV_GEO_DATA_H_
