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
#include <string_view>
#include <vector>

#include "hyshadow/circuits.hpp"

namespace hyshadow {

enum class SnapshotTarget { Rho, RhoPowT, Sigma };
enum class Protocol { HS, HR, OS, SwapTest };

std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view text);

/// weight · M^{-1}(U†|b><b|U). The matrix is built only by materialize().
struct ShadowSnapshot {
  SnapshotTarget target = SnapshotTarget::Rho;
  int t = 1;
  Complex weight{1.0, 0.0};
  std::size_t setting_index = 0;
  SampledUnitary unitary;
  BitString b;

  ComplexMatrix materialize() const;
};

/// Weight 1; control information, if any, is ignored.
ShadowSnapshot snapshot_rho(const SnapshotRecord& record, const EnsembleKind& kind);
/// Weight (-1)^{b_c}.
ShadowSnapshot snapshot_rho_pow_t(const SnapshotRecord& record, const EnsembleKind& kind);
/// Weight 2·(-1)^{b_c}·(-i)^c. With c drawn uniformly from {X, Y} and the
/// control Y outcome convention of the circuits module, E[σ̂] = σ.
ShadowSnapshot snapshot_sigma(const SnapshotRecord& record, const EnsembleKind& kind);

/// Per-shot scalar weight used by the three snapshot kinds.
Complex snapshot_weight(SnapshotTarget target, const Shot& shot);

/// Snapshots grouped by setting. Settings are independent; a setting's K
/// snapshots share one unitary.
class ShadowSet {
 public:
  ShadowSet(SnapshotTarget target, int t, std::vector<std::vector<ShadowSnapshot>> by_setting);

  static ShadowSet from_dataset(const Dataset& data, SnapshotTarget target);
  static ShadowSet rho(const Dataset& data) { return from_dataset(data, SnapshotTarget::Rho); }
  static ShadowSet rho_pow_t(const Dataset& data) { return from_dataset(data, SnapshotTarget::RhoPowT); }
  static ShadowSet sigma(const Dataset& data) { return from_dataset(data, SnapshotTarget::Sigma); }

  SnapshotTarget target() const { return target_; }
  int t() const { return t_; }
  std::size_t num_settings() const { return by_setting_.size(); }
  /// Shots per setting; throws when settings disagree.
  std::size_t shots_per_setting() const;
  const std::vector<ShadowSnapshot>& setting(std::size_t i) const { return by_setting_[i]; }

  /// Mean of the K materialized snapshots of setting i.
  ComplexMatrix setting_mean(std::size_t i) const;
  std::vector<ComplexMatrix> setting_means() const;

 private:
  SnapshotTarget target_;
  int t_;
  std::vector<std::vector<ShadowSnapshot>> by_setting_;
};

struct EstimateReport {
  Complex value{0.0, 0.0};
  std::size_t M = 0;
  std::size_t K = 0;
  /// Bootstrap over settings; NaN when bootstrap is disabled.
  double std_error = 0.0;
  std::optional<double> exact;
  Protocol protocol = Protocol::HS;

  double real() const { return value.real(); }
};

struct EstimatorOptions {
  /// Bootstrap resamples over settings (0 disables).
  int bootstrap = 200;
  std::uint64_t seed = 0;
};

enum class PairingMode { TwoDatasets, SingleDataset };

// Shadow (matrix) estimators.
EstimateReport estimate_pm_os(const ShadowSet& rho_set, int m, const EstimatorOptions& opt = {});
EstimateReport estimate_p3_hs(const ShadowSet& set2, const ShadowSet& set1,
                              PairingMode mode = PairingMode::TwoDatasets, const EstimatorOptions& opt = {});
EstimateReport estimate_p4_hs(const ShadowSet& set2, const EstimatorOptions& opt = {});
EstimateReport estimate_ot_hs(const ShadowSet& set_t, const Observable& op, const EstimatorOptions& opt = {});
EstimateReport estimate_o3_hs(const ShadowSet& set2, const ShadowSet& set1, const Observable& op,
                              const EstimatorOptions& opt = {});
EstimateReport estimate_o4_hs(const ShadowSet& set2, const Observable& op, const EstimatorOptions& opt = {});
/// tr(O ρ^m) from single-copy snapshots, m in {1, 2, 3}.
EstimateReport estimate_om_os(const ShadowSet& rho_set, const Observable& op, int m,
                              const EstimatorOptions& opt = {});
/// tr(σ̂_1 O_1 σ̂_2 O_2 ... σ̂_L O_L) averaged over one independent setting per set.
EstimateReport estimate_fm_patched(std::span<const ShadowSet> sets, std::span<const Observable> boundary_ops,
                                   const EstimatorOptions& opt = {});

// Kernel estimators.
double kernel_value(const EnsembleKind& kind, const BitString& b, const BitString& b2);

EstimateReport estimate_p3_hr(const Dataset& data, const EnsembleKind& kind, const EstimatorOptions& opt = {});
EstimateReport estimate_p4_hr(const Dataset& data, const EnsembleKind& kind, const EstimatorOptions& opt = {});
/// `data` is a ControlledVO dataset built from vo_decomposition(op).v, or a
/// HybridSigma t = 2 dataset when op is unitary and Hermitian.
EstimateReport estimate_o3_hr(const Dataset& data, const EnsembleKind& kind, const Observable& op,
                              const EstimatorOptions& opt = {});
/// `vo_data` and `moment_data` must share per-setting unitaries.
EstimateReport estimate_o4_hr(const Dataset& vo_data, const Dataset& moment_data, const EnsembleKind& kind,
                              const Observable& op, const EstimatorOptions& opt = {});
EstimateReport estimate_o3_spectral(const Dataset& data, const EnsembleKind& kind, std::span<const double> lambda,
                                    const EstimatorOptions& opt = {});
EstimateReport estimate_o4_spectral(const Dataset& data, const EnsembleKind& kind, std::span<const double> lambda,
                                    const EstimatorOptions& opt = {});

/// Mean of (-1)^{b_c} over all shots.
EstimateReport swap_test_statistic(const Dataset& data, const EstimatorOptions& opt = {});

/// O = ½||O||_∞ (V + V†) with V unitary.
struct VODecomposition {
  double norm = 0.0;
  ComplexMatrix v;
};
VODecomposition vo_decomposition(const Observable& op);

/// O = V diag(λ) V†.
struct SpectralDecomposition {
  ComplexMatrix v;
  std::vector<double> lambda;
};
SpectralDecomposition spectral_decomposition(const Observable& op);

}  // namespace hyshadow
