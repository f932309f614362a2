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

#include <random>

namespace hyshadow {

template <typename Rng>
DensityMatrix random_mixed_state(int n_qubits, Rng& rng, int rank) {
  const Eigen::Index d = static_cast<Eigen::Index>(dim_of(n_qubits));
  const Eigen::Index r = rank <= 0 ? d : rank;
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix g(d, r);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < r; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(std::move(rho));
}

}  // namespace hyshadow
