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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyshadow/qcore.hpp"
#include "hyshadow/rng.hpp"

namespace hyshadow {

enum class EnsembleTag { LocalClifford, GlobalClifford };

struct EnsembleKind {
  EnsembleTag tag = EnsembleTag::LocalClifford;
  int n_qubits = 1;

  friend bool operator==(const EnsembleKind&, const EnsembleKind&) = default;
};

std::string_view to_string(EnsembleTag tag);
EnsembleTag parse_ensemble_tag(std::string_view text);

inline constexpr int kMaxGlobalCliffordQubits = 8;

/// Hermitian Pauli (-1)^sign · i^{|x&z|} X^x Z^z. Qubit q maps to bit (n-1-q).
struct PauliRow {
  std::uint32_t x = 0;
  std::uint32_t z = 0;
  bool sign = false;

  friend bool operator==(const PauliRow&, const PauliRow&) = default;
};

/// 1 when the two Paulis anticommute.
int symplectic_product(const PauliRow& a, const PauliRow& b);

/// Conjugation images of the generators: rows[2k] = U X_k U†, rows[2k+1] = U Z_k U†.
/// Determines the Clifford up to a global phase.
class CliffordTableau {
 public:
  CliffordTableau(int n_qubits, std::vector<PauliRow> rows);

  static CliffordTableau identity(int n_qubits);
  /// Exactly uniform over the n-qubit Clifford group modulo phase.
  static CliffordTableau random(int n_qubits, CounterRng& rng);
  /// All Cliffords modulo phase; n <= 2.
  static std::vector<CliffordTableau> enumerate(int n_qubits);

  int num_qubits() const { return n_; }
  const std::vector<PauliRow>& rows() const { return rows_; }
  const PauliRow& x_image(int q) const { return rows_[static_cast<std::size_t>(2 * q)]; }
  const PauliRow& z_image(int q) const { return rows_[static_cast<std::size_t>(2 * q + 1)]; }

  /// Dense U with the first nonzero entry of U|0..0> real positive.
  ComplexMatrix to_matrix() const;

  std::string serialize() const;
  static CliffordTableau deserialize(std::string_view text);

  friend bool operator==(const CliffordTableau&, const CliffordTableau&) = default;

 private:
  int n_ = 0;
  std::vector<PauliRow> rows_;
};

/// Applies a Hermitian Pauli to a state vector.
ComplexVector apply_pauli(const PauliRow& p, const ComplexVector& v);

/// Measurement-basis rotation drawn from an ensemble. Local Cliffords store one
/// basis id per qubit (0 = Z, 1 = X via H, 2 = Y via H·S†); global Cliffords
/// store a tableau and its dense matrix.
class SampledUnitary {
 public:
  static SampledUnitary local(std::vector<std::uint8_t> bases);
  static SampledUnitary global(CliffordTableau tableau);
  static SampledUnitary identity(const EnsembleKind& kind);

  /// "L:<base-3 digits, qubit 0 first>" or "G<n>:<tableau rows>".
  static SampledUnitary from_descriptor(std::string_view descriptor);
  std::string descriptor() const;

  const EnsembleKind& kind() const { return kind_; }
  int num_qubits() const { return kind_.n_qubits; }
  const std::vector<std::uint8_t>& bases() const { return bases_; }
  const CliffordTableau& tableau() const;

  /// Dense 2^n x 2^n unitary.
  ComplexMatrix matrix() const;
  /// U · a.
  ComplexMatrix apply_left(const ComplexMatrix& a) const;
  /// U · a · U†.
  ComplexMatrix conjugate(const ComplexMatrix& a) const;
  /// diag(U a U†), real part only (a Hermitian).
  RealVector rotated_probabilities(const ComplexMatrix& a) const;
  /// U†|b>.
  ComplexVector basis_preimage(std::uint64_t b) const;

 private:
  SampledUnitary() = default;

  EnsembleKind kind_;
  std::vector<std::uint8_t> bases_;
  std::shared_ptr<const CliffordTableau> tableau_;
  std::shared_ptr<const ComplexMatrix> dense_;
};

/// Single-qubit basis rotation u for a local basis id.
Eigen::Matrix2cd local_basis_rotation(std::uint8_t basis);

SampledUnitary sample_unitary(const EnsembleKind& kind, CounterRng& rng);

/// Exhaustive ensemble with uniform weights: local n <= 4, global n <= 2.
std::vector<std::pair<SampledUnitary, double>> enumerate_ensemble(const EnsembleKind& kind);

/// M^{-1}(U†|b><b|U) for the ensemble that produced U.
ComplexMatrix inverse_channel(const SampledUnitary& unitary, const BitString& b);
/// Same, with an explicit kind that must match the unitary.
ComplexMatrix inverse_channel(const EnsembleKind& kind, const SampledUnitary& unitary,
                              const BitString& b);

/// Upper bound on the squared shadow norm: 3 tr(O²) for global Cliffords,
/// 2^{|supp O|} ||Õ||_2² for local ones. With `traceless` the bound is applied
/// to O - tr(O) I / d.
double shadow_norm_bound(const EnsembleKind& kind, const Observable& op, bool traceless = false);

}  // namespace hyshadow
