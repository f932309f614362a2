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

#include "hyshadow/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace hyshadow {

BitString::BitString(std::uint64_t index, int length) : index_(index), length_(length) {
  if (length < 0 || length > 63) throw std::invalid_argument("BitString: length out of range");
  if (length < 63 && (index >> length) != 0)
    throw std::invalid_argument("BitString: index does not fit in length");
}

BitString BitString::parse(std::string_view text) {
  std::uint64_t index = 0;
  for (char ch : text) {
    if (ch != '0' && ch != '1') throw std::invalid_argument("BitString: expected only '0'/'1'");
    index = (index << 1) | static_cast<std::uint64_t>(ch - '0');
  }
  return BitString(index, static_cast<int>(text.size()));
}

std::string BitString::to_string() const {
  std::string out(static_cast<std::size_t>(length_), '0');
  for (int q = 0; q < length_; ++q) out[static_cast<std::size_t>(q)] = bit(q) ? '1' : '0';
  return out;
}

int qubits_of_dim(Eigen::Index dim) {
  if (dim < 1) return -1;
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  return (Eigen::Index{1} << n) == dim ? n : -1;
}

DensityMatrix::DensityMatrix(ComplexMatrix mat, bool check_psd) : mat_(std::move(mat)) {
  if (!is_square(mat_)) throw std::invalid_argument("DensityMatrix: matrix must be square");
  n_qubits_ = qubits_of_dim(mat_.rows());
  if (n_qubits_ < 0) throw std::invalid_argument("DensityMatrix: dimension must be a power of two");
  if (std::abs(mat_.trace() - Complex(1.0)) > kStructuralTol)
    throw std::invalid_argument("DensityMatrix: trace must be 1");
  if (!is_hermitian(mat_)) throw std::invalid_argument("DensityMatrix: matrix must be Hermitian");
  if (check_psd && !is_psd()) throw std::invalid_argument("DensityMatrix: matrix must be PSD");
}

bool DensityMatrix::is_psd(double tol) const {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(mat_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol;
}

Eigen::Matrix2cd pauli_matrix(char label) {
  Eigen::Matrix2cd p;
  switch (label) {
    case 'I': p << 1, 0, 0, 1; break;
    case 'X': p << 0, 1, 1, 0; break;
    case 'Y': p << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case 'Z': p << 1, 0, 0, -1; break;
    default: throw std::invalid_argument(std::string("unknown Pauli label '") + label + "'");
  }
  return p;
}

namespace {

void check_support(std::span<const int> support, int n_qubits) {
  std::vector<int> sorted(support.begin(), support.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("support: duplicate qubit index");
  for (int q : sorted)
    if (q < 0 || q >= n_qubits) throw std::invalid_argument("support: qubit index out of range");
}

// Bit position (within a basis index) of qubit q in an n-qubit register.
inline int bitpos(int q, int n) { return n - 1 - q; }

}  // namespace

ComplexMatrix embed(const ComplexMatrix& local, std::span<const int> support, int n_qubits) {
  check_support(support, n_qubits);
  const int k = static_cast<int>(support.size());
  if (local.rows() != static_cast<Eigen::Index>(dim_of(k)) || local.cols() != local.rows())
    throw std::invalid_argument("embed: local operator dimension must be 2^|support|");
  const std::uint64_t d = dim_of(n_qubits);
  const std::uint64_t dk = dim_of(k);

  std::uint64_t support_mask = 0;
  for (int q : support) support_mask |= std::uint64_t{1} << bitpos(q, n_qubits);

  auto local_index = [&](std::uint64_t full) {
    std::uint64_t li = 0;
    for (int s = 0; s < k; ++s) li = (li << 1) | ((full >> bitpos(support[s], n_qubits)) & 1u);
    return li;
  };
  auto scatter = [&](std::uint64_t base, std::uint64_t li) {
    std::uint64_t full = base & ~support_mask;
    for (int s = 0; s < k; ++s)
      if ((li >> (k - 1 - s)) & 1u) full |= std::uint64_t{1} << bitpos(support[s], n_qubits);
    return full;
  };

  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::uint64_t row = 0; row < d; ++row) {
    const std::uint64_t lr = local_index(row);
    for (std::uint64_t lc = 0; lc < dk; ++lc) {
      const Complex v = local(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc));
      if (v != Complex(0.0)) out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(scatter(row, lc))) = v;
    }
  }
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& mat, std::span<const int> keep, int n_qubits) {
  check_support(keep, n_qubits);
  if (!std::is_sorted(keep.begin(), keep.end()))
    throw std::invalid_argument("partial_trace: kept qubits must be ascending");
  if (mat.rows() != static_cast<Eigen::Index>(dim_of(n_qubits)) || mat.cols() != mat.rows())
    throw std::invalid_argument("partial_trace: dimension mismatch");
  const int k = static_cast<int>(keep.size());
  const std::uint64_t d = dim_of(n_qubits);
  const std::uint64_t dk = dim_of(k);
  std::uint64_t keep_mask = 0;
  for (int q : keep) keep_mask |= std::uint64_t{1} << bitpos(q, n_qubits);

  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::uint64_t row = 0; row < d; ++row) {
    std::uint64_t lr = 0;
    for (int s = 0; s < k; ++s) lr = (lr << 1) | ((row >> bitpos(keep[s], n_qubits)) & 1u);
    for (std::uint64_t lc = 0; lc < dk; ++lc) {
      std::uint64_t col = row & ~keep_mask;
      for (int s = 0; s < k; ++s)
        if ((lc >> (k - 1 - s)) & 1u) col |= std::uint64_t{1} << bitpos(keep[s], n_qubits);
      out(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc)) +=
          mat(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }
  }
  return out;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Observable::Observable(ComplexMatrix local, std::vector<int> support, int n_qubits)
    : local_(std::move(local)), support_(std::move(support)), n_qubits_(n_qubits) {
  if (n_qubits < 1) throw std::invalid_argument("Observable: n_qubits must be >= 1");
  embedded_ = embed(local_, support_, n_qubits_);
  is_unitary_ = hyshadow::is_unitary(local_);
  is_hermitian_ = hyshadow::is_hermitian(local_);
}

Observable Observable::full(ComplexMatrix mat) {
  const int n = qubits_of_dim(mat.rows());
  if (n < 1 || mat.cols() != mat.rows())
    throw std::invalid_argument("Observable::full: dimension must be 2^n with n >= 1");
  std::vector<int> support(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) support[static_cast<std::size_t>(q)] = q;
  return Observable(std::move(mat), std::move(support), n);
}

Observable Observable::pauli(std::string_view word, std::vector<int> support, int n_qubits) {
  if (word.size() != support.size())
    throw std::invalid_argument("Observable::pauli: word length must match support size");
  ComplexMatrix local = ComplexMatrix::Identity(1, 1);
  for (char ch : word) local = kron(local, pauli_matrix(ch));
  return Observable(std::move(local), std::move(support), n_qubits);
}

DensityMatrix ghz_state(int n_qubits) {
  if (n_qubits < 1) throw std::invalid_argument("ghz_state: n must be >= 1");
  if (n_qubits > 14) throw std::invalid_argument("ghz_state: n too large for a dense state");
  const Eigen::Index d = static_cast<Eigen::Index>(dim_of(n_qubits));
  ComplexMatrix rho = ComplexMatrix::Zero(d, d);
  rho(0, 0) = rho(0, d - 1) = rho(d - 1, 0) = rho(d - 1, d - 1) = 0.5;
  return DensityMatrix(std::move(rho));
}

DensityMatrix depolarize(const DensityMatrix& rho, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("depolarize: q must lie in [0, 1]");
  const Eigen::Index d = rho.dim();
  ComplexMatrix out = q * rho.matrix();
  out.diagonal().array() += (1.0 - q) / static_cast<double>(d);
  return DensityMatrix(std::move(out));
}

double exact_moment(const DensityMatrix& rho, int m) {
  if (m < 1) throw std::invalid_argument("exact_moment: m must be >= 1");
  return matrix_power(rho.matrix(), m).trace().real();
}

double exact_obs_moment(const DensityMatrix& rho, const Observable& op, int m) {
  if (m < 1) throw std::invalid_argument("exact_obs_moment: m must be >= 1");
  if (!op.is_hermitian()) throw std::invalid_argument("exact_obs_moment: observable must be Hermitian");
  if (op.num_qubits() != rho.num_qubits())
    throw std::invalid_argument("exact_obs_moment: observable and state sizes differ");
  return trace_of_product(op.embedded(), matrix_power(rho.matrix(), m)).real();
}

Complex exact_general_function(std::span<const ComplexMatrix> states,
                               std::span<const ComplexMatrix> ops) {
  if (states.empty() || states.size() != ops.size())
    throw std::invalid_argument("exact_general_function: need equal, nonempty state/op lists");
  const Eigen::Index d = states.front().rows();
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].rows() != d || states[i].cols() != d || ops[i].rows() != d || ops[i].cols() != d)
      throw std::invalid_argument("exact_general_function: dimension mismatch");
  }
  ComplexMatrix acc = states[0] * ops[0];
  for (std::size_t i = 1; i < states.size(); ++i) acc = (acc * states[i]) * ops[i];
  return acc.trace();
}

Complex exact_general_function(std::span<const DensityMatrix> states,
                               std::span<const ComplexMatrix> ops) {
  std::vector<ComplexMatrix> mats;
  mats.reserve(states.size());
  for (const auto& s : states) mats.push_back(s.matrix());
  return exact_general_function(std::span<const ComplexMatrix>(mats), ops);
}

}  // namespace hyshadow
