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

#ifndef DISTPRIV_MECHANISMS_H_
#define DISTPRIV_MECHANISMS_H_

// Constructors for concrete obfuscation channels.
//
// The planar Laplace and Gaussian mechanisms are discretized by evaluating
// the continuous density at region centroids and renormalizing over Y. This
// is an approximation of the continuous mechanisms, not a cell integral.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "distpriv/core_model.h"
#include "distpriv/status_macros.h"
#include "distpriv/transport.h"

namespace distpriv {

enum class MechanismKind {
  kRandomizedResponse,
  kExponential,
  kPlanarLaplace,
  kPlanarGaussian,
  kRestrictedLaplace,
  kIdentity,
};

inline std::string_view MechanismKindName(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kRandomizedResponse:
      return "randomized-response";
    case MechanismKind::kExponential:
      return "exponential";
    case MechanismKind::kPlanarLaplace:
      return "planar-laplace";
    case MechanismKind::kPlanarGaussian:
      return "planar-gaussian";
    case MechanismKind::kRestrictedLaplace:
      return "restricted-laplace";
    case MechanismKind::kIdentity:
      return "identity";
  }
  return "unknown";
}

inline absl::StatusOr<MechanismKind> ParseMechanismKind(std::string_view name) {
  for (MechanismKind kind :
       {MechanismKind::kRandomizedResponse, MechanismKind::kExponential,
        MechanismKind::kPlanarLaplace, MechanismKind::kPlanarGaussian,
        MechanismKind::kRestrictedLaplace, MechanismKind::kIdentity}) {
    if (MechanismKindName(kind) == name) return kind;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mechanism kind '", std::string(name), "'"));
}

struct MechanismSpec {
  MechanismKind kind = MechanismKind::kIdentity;
  double epsilon = 0.0;
  // Kilometres; restricted-laplace only.
  std::optional<double> radius;
  // Kilometres; planar-gaussian only.
  std::optional<double> sigma;

  absl::Status Validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      return absl::InvalidArgumentError("epsilon must be finite and >= 0");
    }
    const bool wants_radius = kind == MechanismKind::kRestrictedLaplace;
    const bool wants_sigma = kind == MechanismKind::kPlanarGaussian;
    if (radius.has_value() != wants_radius) {
      return absl::InvalidArgumentError(
          wants_radius ? "radius is required for restricted-laplace"
                       : "radius is only allowed for restricted-laplace");
    }
    if (sigma.has_value() != wants_sigma) {
      return absl::InvalidArgumentError(
          wants_sigma ? "sigma is required for planar-gaussian"
                      : "sigma is only allowed for planar-gaussian");
    }
    if (radius.has_value() && !(*radius >= 0.0)) {
      return absl::InvalidArgumentError("radius must be >= 0");
    }
    if (sigma.has_value() && !(*sigma > 0.0 && std::isfinite(*sigma))) {
      return absl::InvalidArgumentError("sigma must be positive and finite");
    }
    return absl::OkStatus();
  }
};

namespace internal {

// Rows proportional to exp(-score(x, y)); scores are shifted by the row
// minimum before exponentiation.
template <typename Score>
absl::StatusOr<Channel> ChannelFromScores(const Domain& domain, Score score) {
  const std::size_t nx = domain.input()->size();
  const std::size_t ny = domain.output()->size();
  std::vector<double> weights(nx * ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < ny; ++y) lowest = std::min(lowest, score(x, y));
    if (!std::isfinite(lowest)) {
      return absl::InvalidArgumentError(
          absl::StrCat("input ", x, " has no admissible output"));
    }
    for (std::size_t y = 0; y < ny; ++y) {
      const double s = score(x, y);
      weights[x * ny + y] = std::isfinite(s) ? std::exp(lowest - s) : 0.0;
    }
  }
  return Channel::FromWeights(domain.input(), domain.output(),
                              std::move(weights));
}

}  // namespace internal

// k-ary randomized response: the true value (its embedding in Y) with
// probability e^eps / (e^eps + |Y| - 1), every other output with
// 1 / (e^eps + |Y| - 1).
inline absl::StatusOr<Channel> RandomizedResponse(const Domain& domain,
                                                  double epsilon) {
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("epsilon must be >= 0");
  }
  if (!domain.embedding().has_value()) {
    return absl::InvalidArgumentError(
        "randomized response needs inputs embedded in the output space");
  }
  const std::size_t nx = domain.input()->size();
  const std::size_t ny = domain.output()->size();
  // Divide through by e^eps so large epsilons do not overflow.
  const double other = std::exp(-epsilon);
  const double denominator = 1.0 + static_cast<double>(ny - 1) * other;
  std::vector<double> rows(nx * ny, other / denominator);
  for (std::size_t x = 0; x < nx; ++x) {
    rows[x * ny + (*domain.embedding())[x]] = 1.0 / denominator;
  }
  return Channel::Create(domain.input(), domain.output(), std::move(rows));
}

inline absl::StatusOr<Channel> RandomizedResponse(SpacePtr space,
                                                  double epsilon) {
  return RandomizedResponse(Domain::Same(std::move(space)), epsilon);
}

// Exponential decay exp(-eps * d(x, y)) restricted to the ball of radius r
// around x, renormalized over that ball.
inline absl::StatusOr<Channel> RestrictedLaplace(const Domain& domain,
                                                 double epsilon,
                                                 double radius) {
  if (!(epsilon >= 0.0) || !(radius >= 0.0)) {
    return absl::InvalidArgumentError("epsilon and radius must be >= 0");
  }
  return internal::ChannelFromScores(
      domain, [&](std::size_t x, std::size_t y) {
        const double d = domain.distance(x, y);
        return d <= radius ? epsilon * d
                           : std::numeric_limits<double>::infinity();
      });
}

inline absl::StatusOr<Channel> RestrictedLaplace(SpacePtr space,
                                                 double epsilon,
                                                 double radius) {
  return RestrictedLaplace(Domain::Same(std::move(space)), epsilon, radius);
}

// Rows proportional to exp(eps * u(x, y) / (2 * sensitivity)), where the
// sensitivity is taken over all pairs of inputs.
inline absl::StatusOr<Channel> ExponentialMechanism(double epsilon,
                                                    const UtilityFunction& u) {
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("epsilon must be >= 0");
  }
  DISTPRIV_ASSIGN_OR_RETURN(
      const double sensitivity,
      Sensitivity(u, AdjacencyRelation::All(u.input_size())));
  if (sensitivity == 0.0 && epsilon > 0.0) {
    return absl::InvalidArgumentError(
        "degenerate utility: sensitivity is zero");
  }
  const double scale = epsilon == 0.0 ? 0.0 : epsilon / (2.0 * sensitivity);
  std::vector<double> distance(u.input_size() * u.output_size(), 0.0);
  DISTPRIV_ASSIGN_OR_RETURN(
      Domain domain, Domain::Create(u.input_space(), u.output_space(),
                                    std::move(distance)));
  return internal::ChannelFromScores(
      domain, [&](std::size_t x, std::size_t y) { return -scale * u(x, y); });
}

// Grid planar Laplace: rows proportional to exp(-eps * d(x, y)) over all Y.
inline absl::StatusOr<Channel> PlanarLaplaceGrid(const Domain& domain,
                                                 double epsilon) {
  if (!(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("epsilon must be >= 0");
  }
  return internal::ChannelFromScores(
      domain, [&](std::size_t x, std::size_t y) {
        return epsilon * domain.distance(x, y);
      });
}

// Grid planar Gaussian: rows proportional to exp(-d(x, y)^2 / (2 sigma^2)).
inline absl::StatusOr<Channel> PlanarGaussianGrid(const Domain& domain,
                                                  double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError("sigma must be positive and finite");
  }
  return internal::ChannelFromScores(
      domain, [&](std::size_t x, std::size_t y) {
        const double d = domain.distance(x, y);
        return d * d / (2.0 * sigma * sigma);
      });
}

// Outputs the embedding of the input unchanged.
inline absl::StatusOr<Channel> IdentityMechanism(const Domain& domain) {
  return RandomizedResponse(domain, std::numeric_limits<double>::infinity());
}

inline absl::StatusOr<Channel> BuildMechanism(const MechanismSpec& spec,
                                              const Domain& domain) {
  DISTPRIV_RETURN_IF_ERROR(spec.Validate());
  switch (spec.kind) {
    case MechanismKind::kRandomizedResponse:
      return RandomizedResponse(domain, spec.epsilon);
    case MechanismKind::kExponential: {
      DISTPRIV_ASSIGN_OR_RETURN(UtilityFunction u,
                                UtilityFunction::NegatedDistance(domain));
      return ExponentialMechanism(spec.epsilon, u);
    }
    case MechanismKind::kPlanarLaplace:
      return PlanarLaplaceGrid(domain, spec.epsilon);
    case MechanismKind::kPlanarGaussian:
      return PlanarGaussianGrid(domain, *spec.sigma);
    case MechanismKind::kRestrictedLaplace:
      return RestrictedLaplace(domain, spec.epsilon, *spec.radius);
    case MechanismKind::kIdentity:
      return IdentityMechanism(domain);
  }
  return absl::InvalidArgumentError("unknown mechanism kind");
}

// E[d(x, y)] with x drawn from `dist` and y from the channel on x.
inline absl::StatusOr<double> ExpectedLoss(const Channel& channel,
                                           const ProbDist& dist,
                                           const Domain& domain) {
  if (!SameSpace(*dist.space(), *channel.input_space()) ||
      domain.input()->size() != channel.input_size() ||
      domain.output()->size() != channel.output_size()) {
    return absl::InvalidArgumentError(
        "distribution, channel and distance table disagree on spaces");
  }
  double total = 0.0;
  for (std::size_t x = 0; x < channel.input_size(); ++x) {
    if (dist[x] == 0.0) continue;
    double row = 0.0;
    for (std::size_t y = 0; y < channel.output_size(); ++y) {
      row += channel(x, y) * domain.distance(x, y);
    }
    total += dist[x] * row;
  }
  return total;
}

}  // namespace distpriv

#endif  // DISTPRIV_MECHANISMS_H_
