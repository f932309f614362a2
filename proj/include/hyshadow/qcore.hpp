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

#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "hyshadow/types.hpp"

namespace hyshadow {

template <typename Derived>
bool is_square(const Eigen::MatrixBase<Derived>& m) {
  return m.rows() == m.cols() && m.rows() >= 1;
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol = kStructuralTol) {
  if (!is_square(m)) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& m, double tol = kStructuralTol) {
  if (!is_square(m)) return false;
  const auto eye = DenseMatrix<typename Derived::Scalar>::Identity(m.rows(), m.cols());
  return (m.adjoint() * m - eye).cwiseAbs().maxCoeff() <= tol;
}

/// Exact repeated product m^t for t >= 1 (binary exponentiation).
template <typename Derived>
DenseMatrix<typename Derived::Scalar> matrix_power(const Eigen::MatrixBase<Derived>& m, int t) {
  if (!is_square(m)) throw std::invalid_argument("matrix_power: matrix must be square");
  if (t < 1) throw std::invalid_argument("matrix_power: exponent must be >= 1");
  DenseMatrix<typename Derived::Scalar> base = m;
  DenseMatrix<typename Derived::Scalar> result;
  bool have_result = false;
  while (t > 0) {
    if (t & 1) {
      result = have_result ? DenseMatrix<typename Derived::Scalar>(result * base) : base;
      have_result = true;
    }
    t >>= 1;
    if (t > 0) base = base * base;
  }
  return result;
}

/// tr(A B) without forming the product.
template <typename A, typename B>
typename A::Scalar trace_of_product(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

/// n-qubit density matrix: Hermitian, unit trace, optionally checked PSD.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix mat, bool check_psd = false);

  const ComplexMatrix& matrix() const { return mat_; }
  int num_qubits() const { return n_qubits_; }
  Eigen::Index dim() const { return mat_.rows(); }

  bool is_psd(double tol = kStructuralTol) const;

 private:
  ComplexMatrix mat_;
  int n_qubits_ = 0;
};

/// Operator O = Õ ⊗ I acting nontrivially on `support`.
class Observable {
 public:
  Observable(ComplexMatrix local, std::vector<int> support, int n_qubits);

  /// Full-register operator (support = all qubits).
  static Observable full(ComplexMatrix mat);
  /// Pauli word such as "ZZ" placed on the listed qubits.
  static Observable pauli(std::string_view word, std::vector<int> support, int n_qubits);

  const ComplexMatrix& local() const { return local_; }
  const std::vector<int>& support() const { return support_; }
  int num_qubits() const { return n_qubits_; }
  bool is_unitary() const { return is_unitary_; }
  bool is_hermitian() const { return is_hermitian_; }

  /// 2^n x 2^n matrix of O.
  const ComplexMatrix& embedded() const { return embedded_; }

 private:
  ComplexMatrix local_;
  std::vector<int> support_;
  int n_qubits_ = 0;
  bool is_unitary_ = false;
  bool is_hermitian_ = false;
  ComplexMatrix embedded_;
};

Eigen::Matrix2cd pauli_matrix(char label);

/// Places `local` (acting on `support`, in the listed order) into an n-qubit operator.
ComplexMatrix embed(const ComplexMatrix& local, std::span<const int> support, int n_qubits);

/// Reduced operator on the qubits in `keep` (ascending order).
ComplexMatrix partial_trace(const ComplexMatrix& mat, std::span<const int> keep, int n_qubits);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

DensityMatrix ghz_state(int n_qubits);

/// q·rho + (1-q)·I/d.
DensityMatrix depolarize(const DensityMatrix& rho, double q);

inline DensityMatrix noisy_ghz(int n_qubits, double q) { return depolarize(ghz_state(n_qubits), q); }

/// Haar-ish random mixed state from a Ginibre matrix (test and oracle support).
template <typename Rng>
DensityMatrix random_mixed_state(int n_qubits, Rng& rng, int rank = -1);

double exact_moment(const DensityMatrix& rho, int m);

double exact_obs_moment(const DensityMatrix& rho, const Observable& op, int m);

/// tr(ρ1 O1 ρ2 O2 ... ρm Om).
Complex exact_general_function(std::span<const ComplexMatrix> states,
                               std::span<const ComplexMatrix> ops);
Complex exact_general_function(std::span<const DensityMatrix> states,
                               std::span<const ComplexMatrix> ops);

}  // namespace hyshadow

#include "hyshadow/qcore_inl.hpp"
