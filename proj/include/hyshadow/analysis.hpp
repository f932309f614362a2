// Copyright 2026 The hyshadow Authors
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


#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "hyshadow/ensembles.hpp"

namespace hyshadow {

/// Var(P̂3) bound for HS with Pauli measurements, M = M'.
double bound_p3_hs_pauli(double p2, std::uint64_t d, std::uint64_t M);

/// Var(P̂3) bound for HS with Clifford measurements (simplified form in P2).
/// `p4` is validated against 0 < P4 <= P2 but does not enter the value.
double bound_p3_hs_clifford(double p2, double p4, std::uint64_t d, std::uint64_t M);

/// Leading-order Var(P̂3') for the kernel estimator. With `q` (noisy GHZ
/// visibility) and the local ensemble, the refined interpolating form is used.
double bound_p3_hr(const EnsembleKind& kind, std::uint64_t d, std::uint64_t M, std::uint64_t K,
                   std::optional<double> q = std::nullopt);

/// Settings sufficient for |P̂3 - P3| <= eps with probability >= 1 - delta (Chebyshev).
std::uint64_t sample_complexity_p3_hs(double p2, std::uint64_t d, double eps, double delta);

/// Var(ô_t) bound: (shadow-norm bound of O + tr(Oρ)²) / M.
double bound_ot_hs(const EnsembleKind& kind, const Observable& op, double obs_mean_sq, std::uint64_t M);

struct ScalingFit {
  std::vector<double> xs;
  std::vector<double> ys;
  /// Slope of log2(y) against x: y ∝ d^alpha with d = 2^x.
  double alpha = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Unweighted least squares of log2(errors) on xs; needs >= 4 points, errors > 0.
ScalingFit fit_exponent(std::span<const double> xs, std::span<const double> errors);

/// Sample variance (n - 1 denominator).
double sample_variance(std::span<const double> values);

}  // namespace hyshadow
