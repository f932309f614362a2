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

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace hyshadow {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Structural checks (Hermiticity, trace, unitarity).
inline constexpr double kStructuralTol = 1e-10;
// Comparisons against exact oracles.
inline constexpr double kOracleTol = 1e-9;

// Computational-basis label of an n-qubit register. Qubit 0 is the most
// significant bit of `index`, so the string form reads qubit 0 first.
class BitString {
 public:
  BitString() = default;
  BitString(std::uint64_t index, int length);

  static BitString parse(std::string_view text);

  std::uint64_t index() const { return index_; }
  int length() const { return length_; }
  int bit(int qubit) const {
    return static_cast<int>((index_ >> (length_ - 1 - qubit)) & 1u);
  }
  std::string to_string() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::uint64_t index_ = 0;
  int length_ = 0;
};

inline std::uint64_t dim_of(int n_qubits) { return std::uint64_t{1} << n_qubits; }

// Returns n when dim == 2^n, otherwise -1.
int qubits_of_dim(Eigen::Index dim);

}  // namespace hyshadow
