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
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hyshadow/ensembles.hpp"
#include "hyshadow/qcore.hpp"

namespace hyshadow {

/// Control-qubit measurement basis. Y is the standard Y measurement: outcome 0
/// is the projection onto |+i> = (|0> + i|1>)/sqrt(2).
enum class ControlBasis : int { X = 0, Y = 1 };

enum class CircuitFamily { PlainRM, SwapTest, HybridMoment, HybridSigma, ControlledVO, SpectralO };

std::string_view to_string(CircuitFamily family);
CircuitFamily parse_circuit_family(std::string_view text);

/// Circuit description. The controlled operation W acts on t copies with
/// tr_{2..t}[(ρ_1 ⊗ ... ⊗ ρ_t) W†] = σ = ρ_1 O_1 ρ_2 ... O_{t-1} ρ_t, and
/// copy 1 is the one measured in the rotated basis.
struct CircuitSpec {
  CircuitFamily family = CircuitFamily::PlainRM;
  int t = 1;
  std::vector<DensityMatrix> states;
  std::vector<Observable> interleaved_ops;  // HybridSigma: t-1 ops; SwapTest: 0 or t ops
  std::optional<ComplexMatrix> v_op;        // ControlledVO
  std::optional<ComplexMatrix> spectral_v;  // SpectralO: O = V diag(λ) V†
  std::vector<double> spectral_lambda;

  static CircuitSpec plain_rm(DensityMatrix rho);
  static CircuitSpec swap_test(std::vector<DensityMatrix> states, std::vector<Observable> ops = {});
  static CircuitSpec hybrid_moment(DensityMatrix rho, int t);
  static CircuitSpec hybrid_sigma(std::vector<DensityMatrix> states, std::vector<Observable> ops);
  static CircuitSpec controlled_vo(DensityMatrix rho, ComplexMatrix v);
  static CircuitSpec spectral_o(DensityMatrix rho, ComplexMatrix v, std::vector<double> lambda);

  /// Throws std::invalid_argument on any violated family invariant.
  void validate() const;
  int num_qubits() const;
  /// Whether shots draw a fresh control basis.
  bool randomizes_control_basis() const { return family == CircuitFamily::HybridSigma; }
};

/// One outcome of a circuit: optional control bit, optional first-copy
/// register b1 (SpectralO), and the rotated-copy register b (empty for SwapTest).
struct Outcome {
  std::optional<int> bc;
  std::optional<BitString> b1;
  BitString b;
};

/// Exact joint distribution over the flattened support [bc][b1][b].
class OutcomeDistribution {
 public:
  /// Validates: weights >= -1e-12 and sum within 1e-9 of 1.
  OutcomeDistribution(bool has_control, int n_b1, int n_b, RealVector probs);

  bool has_control() const { return has_control_; }
  int b1_length() const { return n_b1_; }
  int b_length() const { return n_b_; }
  std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }
  const RealVector& probs() const { return probs_; }

  double prob(std::optional<int> bc, std::uint64_t b1, std::uint64_t b) const;
  Outcome outcome(std::size_t index) const;
  /// Σ_{b1,b} [Pr(0,·) - Pr(1,·)]; zero without a control.
  double signed_control_sum() const;
  /// Σ_{bc,b1} Pr(bc, b1, b) as a vector over b.
  RealVector marginal_b() const;

 private:
  bool has_control_;
  int n_b1_;
  int n_b_;
  RealVector probs_;
};

/// Inverse-CDF sampler. Cumulative sums are kept in long double.
class OutcomeSampler {
 public:
  explicit OutcomeSampler(const OutcomeDistribution& dist);
  /// Index into the distribution support for a uniform draw u in [0, 1).
  std::size_t index_for(double u) const;
  Outcome draw(CounterRng& rng) const;

 private:
  const OutcomeDistribution* dist_;
  std::vector<long double> cdf_;
};

OutcomeDistribution plain_rm_distribution(const DensityMatrix& rho, const SampledUnitary& u);
OutcomeDistribution hybrid_moment_distribution(const DensityMatrix& rho, int t, const SampledUnitary& u);
OutcomeDistribution swap_test_distribution(std::span<const DensityMatrix> states,
                                           std::span<const Observable> ops, ControlBasis basis);
OutcomeDistribution hybrid_sigma_distribution(const CircuitSpec& spec, const SampledUnitary& u,
                                              ControlBasis basis);
OutcomeDistribution controlled_vo_distribution(const DensityMatrix& rho, const ComplexMatrix& v_op,
                                               const SampledUnitary& u);
OutcomeDistribution spectral_o_distribution(const DensityMatrix& rho, const ComplexMatrix& v,
                                            const SampledUnitary& u);

/// Product σ = ρ_1 O_1 ρ_2 ... O_{t-1} ρ_t of a HybridSigma or ControlledVO spec.
ComplexMatrix sigma_operator(const CircuitSpec& spec);

/// Per-spec cache of the operators that enter every setting's distribution.
class PreparedCircuit {
 public:
  explicit PreparedCircuit(CircuitSpec spec);

  const CircuitSpec& spec() const { return spec_; }
  /// Distribution for one setting; `basis` is ignored by families without a
  /// control-basis choice.
  OutcomeDistribution distribution(const SampledUnitary& u, ControlBasis basis = ControlBasis::X) const;

 private:
  CircuitSpec spec_;
  ComplexMatrix first_;   // ρ_1
  ComplexMatrix last_;    // ρ_t
  ComplexMatrix cross_;   // ρᵗ or σ
  ComplexMatrix vt_rho_v_;  // SpectralO: V†ρV
  ComplexMatrix rho_v_;     // SpectralO: ρV
  bool distinct_ends_ = false;
};

struct Shot {
  std::optional<ControlBasis> c;
  std::optional<int> bc;
  std::optional<BitString> b1;
  BitString b;
};

struct Setting {
  SampledUnitary unitary;
  std::vector<Shot> shots;
};

/// Sampled experiment grouped by setting: M settings, K shots each.
struct Dataset {
  CircuitFamily family = CircuitFamily::PlainRM;
  int t = 1;
  EnsembleKind kind;
  std::uint64_t seed = 0;
  std::vector<Setting> settings;

  std::size_t num_settings() const { return settings.size(); }
  /// Shots per setting (throws when settings disagree).
  std::size_t shots_per_setting() const;
};

inline constexpr int kMaxQubitsSingleRegister = 12;
inline constexpr int kMaxQubitsTwoRegisters = 10;

/// Algorithm-level sampler. Setting i draws its unitary from substream
/// (seed, i, 0, Unitary); shot j draws its control basis from (seed, i, j,
/// ControlBasis) and its outcome from (seed, i, j, Outcome). Output is
/// independent of `threads`.
Dataset sample_dataset(const CircuitSpec& spec, const EnsembleKind& kind, int M, int K,
                       std::uint64_t seed, int threads = 1);

/// Same shot sampling with caller-supplied per-setting unitaries (used to pair
/// two datasets on identical settings).
Dataset sample_dataset_with_unitaries(const CircuitSpec& spec, const std::vector<SampledUnitary>& unitaries,
                                      int K, std::uint64_t seed, int threads = 1);

/// One shot of a dataset in its persisted form.
struct SnapshotRecord {
  CircuitFamily family = CircuitFamily::PlainRM;
  int t = 1;
  EnsembleTag ensemble = EnsembleTag::LocalClifford;
  std::string descriptor;
  std::optional<ControlBasis> c;
  std::optional<int> bc;
  std::optional<BitString> b1;
  BitString b;
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const SnapshotRecord&, const SnapshotRecord&) = default;
};

std::vector<SnapshotRecord> to_records(const Dataset& data);
/// Groups records by setting index (any input order); checks uniqueness of
/// (i, j), shared descriptors within a setting, and contiguous indices.
Dataset from_records(const std::vector<SnapshotRecord>& records);

/// One JSON object per line, fixed key order.
std::string record_to_line(const SnapshotRecord& record);
SnapshotRecord record_from_line(std::string_view line);
void write_records(std::ostream& out, const std::vector<SnapshotRecord>& records);
/// Throws std::runtime_error naming the 1-based line of the first malformed record.
std::vector<SnapshotRecord> read_records(std::istream& in);

}  // namespace hyshadow
