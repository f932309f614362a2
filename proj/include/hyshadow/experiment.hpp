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
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyshadow/estimators.hpp"

namespace hyshadow {

/// F2_fidelity is tr(Π ρ²) with Π the GHZ projector.
enum class Quantity { P2, P3, P4, o2, o3, o4, F2_fidelity };

std::string_view to_string(Quantity quantity);
Quantity parse_quantity(std::string_view text);

/// Observable as a Pauli word on listed qubits ("ZZ@0,1") or the GHZ projector.
struct ObservableSpec {
  bool ghz_projector = false;
  std::string pauli = "ZZ";
  std::vector<int> support = {0, 1};

  static ObservableSpec parse(std::string_view text);
  std::string to_string() const;
  Observable build(int n_qubits) const;
};

/// Flat `key = value` configuration. Per-protocol overrides use `HR.M = 2`.
struct ExperimentConfig {
  std::string state = "ghz_noisy";
  int n_min = 2;
  int n_max = 6;
  double q = 0.8;
  std::vector<Protocol> protocols = {Protocol::HS};
  Quantity quantity = Quantity::P3;
  ObservableSpec observable;
  EnsembleTag ensemble = EnsembleTag::LocalClifford;
  int M = 10;
  int K = 1;
  std::map<Protocol, int> M_override;
  std::map<Protocol, int> K_override;
  int R = 100;
  std::uint64_t seed = 1;
  std::string output;
  int threads = 1;
  /// Bootstrap resamples per estimate; 0 leaves std_error as NaN.
  int bootstrap = 0;
  /// Record wall time per row. Off keeps CSV output byte-reproducible.
  bool timing = false;
  /// Ceiling on predicted cost Σ settings · shots · d².
  double budget = 1e10;

  int M_for(Protocol p) const;
  int K_for(Protocol p) const;

  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig load(const std::string& path);
  /// Throws std::invalid_argument for empty ranges or unsupported combinations.
  void validate() const;
};

struct ResultRow {
  Protocol protocol = Protocol::HS;
  Quantity quantity = Quantity::P3;
  int n = 0;
  std::uint64_t d = 0;
  int M = 0;
  int K = 0;
  int trial = 0;
  double estimate = 0.0;
  double exact = 0.0;
  double abs_error = 0.0;
  double std_error = 0.0;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
};

/// RMS of (estimate - exact) over the trials of one (protocol, n).
struct SummaryRow {
  Protocol protocol = Protocol::HS;
  Quantity quantity = Quantity::P3;
  int n = 0;
  std::uint64_t d = 0;
  int M = 0;
  int K = 0;
  int trials = 0;
  double rms_error = 0.0;
};

DensityMatrix build_state(const ExperimentConfig& config, int n);
double exact_value(Quantity quantity, const DensityMatrix& rho, const std::optional<Observable>& op);
bool supports(Protocol protocol, Quantity quantity);

struct TrialOutcome {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// One independent repetition of (protocol, quantity) on rho.
TrialOutcome run_trial(Protocol protocol, Quantity quantity, const DensityMatrix& rho,
                       const std::optional<Observable>& op, const EnsembleKind& kind, int M, int K,
                       std::uint64_t seed, int bootstrap = 0);

/// Seed of trial `trial` for (protocol, n) under a base seed.
std::uint64_t trial_seed(std::uint64_t base, Protocol protocol, int n, int trial);

double predicted_cost(const ExperimentConfig& config);

std::vector<ResultRow> run_experiment(const ExperimentConfig& config);
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Continuous shot count at which the kernel P3 estimator reaches RMS error
/// `target` with M settings. MSE is measured at each K in `k_grid` over R
/// trials and fitted to (γ + β/K + α/(K(K-1)))/M.
struct RequiredShots {
  int n = 0;
  double k_required = 0.0;
  std::vector<int> k_grid;
  std::vector<double> rms;
  double gamma = 0.0, beta = 0.0, alpha = 0.0;
};
RequiredShots find_required_shots(const DensityMatrix& rho, const EnsembleKind& kind, int M, double target,
                                  const std::vector<int>& k_grid, int R, std::uint64_t seed, int threads = 1);

void export_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void export_csv(const std::vector<ResultRow>& rows, const std::string& path);
void export_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
std::vector<ResultRow> import_csv(std::istream& in);

std::vector<SnapshotRecord> import_dataset(const std::string& path);
void export_dataset(const std::vector<SnapshotRecord>& records, const std::string& path);

/// Replaceable pieces of the pipeline, so a corrupted variant can be checked
/// for detectability.
struct OracleHooks {
  std::function<ShadowSnapshot(const SnapshotRecord&, const EnsembleKind&)> snapshot_rho = hyshadow::snapshot_rho;
  std::function<ShadowSnapshot(const SnapshotRecord&, const EnsembleKind&)> snapshot_rho_pow_t =
      hyshadow::snapshot_rho_pow_t;
  std::function<ShadowSnapshot(const SnapshotRecord&, const EnsembleKind&)> snapshot_sigma =
      hyshadow::snapshot_sigma;
};

struct OracleCheck {
  std::string name;
  EnsembleKind kind;
  std::string detail;
  double max_deviation = 0.0;
  bool passed = false;
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  bool all_passed() const;
  std::vector<std::string> failed_names() const;
};

/// Exact-enumeration unbiasedness checks: n = 1 for both ensembles, n = 2 for
/// the local ensemble (and the global one when `include_global_n2`; that
/// 11520-element group runs the snapshot and within-setting kernel checks only).
OracleReport run_oracle_suite(int max_n, const OracleHooks& hooks = {}, bool include_global_n2 = false,
                              double tolerance = kOracleTol);

}  // namespace hyshadow
