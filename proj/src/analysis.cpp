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


#include "hyshadow/analysis.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hyshadow {

namespace {

void check_purity(double p2) {
  if (!(p2 > 0.0 && p2 <= 1.0)) throw std::invalid_argument("purity must lie in (0, 1]");
}

void check_positive(std::uint64_t v, const char* what) {
  if (v == 0) throw std::invalid_argument(std::string(what) + " must be >= 1");
}

}  // namespace

double bound_p3_hs_pauli(double p2, std::uint64_t d, std::uint64_t M) {
  check_purity(p2);
  check_positive(d, "d");
  check_positive(M, "M");
  const double dd = static_cast<double>(d), m = static_cast<double>(M);
  return p2 * ((dd + 1.0) / m + p2 * dd * dd * dd / (m * m));
}

double bound_p3_hs_clifford(double p2, double p4, std::uint64_t d, std::uint64_t M) {
  check_purity(p2);
  if (!(p4 > 0.0 && p4 <= p2)) throw std::invalid_argument("P4 must lie in (0, P2]");
  check_positive(d, "d");
  check_positive(M, "M");
  const double dd = static_cast<double>(d), m = static_cast<double>(M);
  return p2 * ((3.0 + 4.0 * p2) / (2.0 * m) + p2 * (9.0 * dd * dd + 1.0) / (m * m));
}

double bound_p3_hr(const EnsembleKind& kind, std::uint64_t d, std::uint64_t M, std::uint64_t K,
                   std::optional<double> q) {
  check_positive(d, "d");
  check_positive(M, "M");
  if (K < 2) throw std::invalid_argument("K must be >= 2");
  const double dd = static_cast<double>(d);
  const double denom = static_cast<double>(M) * static_cast<double>(K) * static_cast<double>(K);
  if (kind.tag == EnsembleTag::GlobalClifford) return 4.0 * dd / denom;
  const double log2_3 = std::log2(3.0);
  if (!q) return 2.0 * std::pow(dd, log2_3) / denom;
  if (!(*q >= 0.0 && *q <= 1.0)) throw std::invalid_argument("q must lie in [0, 1]");
  const double q2 = *q * *q;
  const double log25_3 = std::log(3.0) / std::log(2.5);
  return (q2 * (dd + std::pow(dd, log2_3)) + 2.0 * (1.0 - q2) * std::pow(dd, log25_3)) / denom;
}

std::uint64_t sample_complexity_p3_hs(double p2, std::uint64_t d, double eps, double delta) {
  check_purity(p2);
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("eps and delta must lie in (0, 1)");
  const double dd = static_cast<double>(d);
  const double first = p2 * (dd + 1.0) / (eps * eps * delta);
  const double second = p2 * std::pow(dd, 1.5) / (eps * std::sqrt(delta));
  // Guard against 2·x landing a hair above an integer through rounding.
  const double raw = 2.0 * std::max(first, second);
  const double nearest = std::round(raw);
  return static_cast<std::uint64_t>(std::abs(raw - nearest) <= 1e-9 * raw ? nearest : std::ceil(raw));
}

double bound_ot_hs(const EnsembleKind& kind, const Observable& op, double obs_mean_sq, std::uint64_t M) {
  check_positive(M, "M");
  if (obs_mean_sq < 0.0) throw std::invalid_argument("obs_mean_sq must be >= 0");
  return (shadow_norm_bound(kind, op) + obs_mean_sq) / static_cast<double>(M);
}

ScalingFit fit_exponent(std::span<const double> xs, std::span<const double> errors) {
  if (xs.size() != errors.size()) throw std::invalid_argument("fit_exponent: length mismatch");
  if (xs.size() < 4) throw std::invalid_argument("fit_exponent: need at least 4 points");
  ScalingFit fit;
  fit.xs.assign(xs.begin(), xs.end());
  fit.ys.assign(errors.begin(), errors.end());
  std::vector<double> ly;
  for (double e : errors) {
    if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("fit_exponent: errors must be positive");
    ly.push_back(std::log2(e));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ly[k] - my);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_exponent: xs must not be constant");
  fit.alpha = sxy / sxx;
  fit.intercept = my - fit.alpha * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / (n - 1.0);
}

}  // namespace hyshadow
