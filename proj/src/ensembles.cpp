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


#include "hyshadow/ensembles.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace hyshadow {

std::string_view to_string(EnsembleTag tag) {
  return tag == EnsembleTag::LocalClifford ? "LocalClifford" : "GlobalClifford";
}

EnsembleTag parse_ensemble_tag(std::string_view text) {
  if (text == "LocalClifford" || text == "local" || text == "Pauli") return EnsembleTag::LocalClifford;
  if (text == "GlobalClifford" || text == "global" || text == "Clifford") return EnsembleTag::GlobalClifford;
  throw std::invalid_argument("unknown ensemble '" + std::string(text) + "'");
}

int symplectic_product(const PauliRow& a, const PauliRow& b) {
  return std::popcount((a.x & b.z) ^ (a.z & b.x)) & 1;
}

namespace {

// Two-n-bit symplectic vector packed as (x << n) | z.
using SymVec = std::uint64_t;

PauliRow unpack(SymVec v, int n) {
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  return PauliRow{static_cast<std::uint32_t>(v >> n), static_cast<std::uint32_t>(v & mask), false};
}

int form(SymVec a, SymVec b, int n) { return symplectic_product(unpack(a, n), unpack(b, n)); }

// Projection onto the symplectic complement of span{(a_j, b_j)}, where each
// pair satisfies <a_j, b_j> = 1 and distinct pairs are mutually orthogonal.
SymVec project(SymVec v, const std::vector<SymVec>& as, const std::vector<SymVec>& bs, int n) {
  SymVec out = v;
  for (std::size_t j = 0; j < as.size(); ++j) {
    if (form(v, bs[j], n)) out ^= as[j];
    if (form(v, as[j], n)) out ^= bs[j];
  }
  return out;
}

void check_qubits(int n) {
  if (n < 1 || n > 16) throw std::invalid_argument("CliffordTableau: n_qubits must lie in [1, 16]");
}

void enumerate_bases(int n, std::vector<SymVec>& as, std::vector<SymVec>& bs,
                     std::vector<std::vector<PauliRow>>& out) {
  const int k = static_cast<int>(as.size());
  if (k == n) {
    std::vector<PauliRow> rows;
    for (int q = 0; q < n; ++q) {
      rows.push_back(unpack(as[static_cast<std::size_t>(q)], n));
      rows.push_back(unpack(bs[static_cast<std::size_t>(q)], n));
    }
    out.push_back(std::move(rows));
    return;
  }
  const SymVec total = SymVec{1} << (2 * n);
  auto in_complement = [&](SymVec v) { return project(v, as, bs, n) == v; };
  for (SymVec a = 1; a < total; ++a) {
    if (!in_complement(a)) continue;
    for (SymVec b = 1; b < total; ++b) {
      if (!in_complement(b) || form(a, b, n) != 1) continue;
      as.push_back(a);
      bs.push_back(b);
      enumerate_bases(n, as, bs, out);
      as.pop_back();
      bs.pop_back();
    }
  }
}

}  // namespace

CliffordTableau::CliffordTableau(int n_qubits, std::vector<PauliRow> rows)
    : n_(n_qubits), rows_(std::move(rows)) {
  check_qubits(n_qubits);
  if (rows_.size() != static_cast<std::size_t>(2 * n_))
    throw std::invalid_argument("CliffordTableau: expected 2n rows");
  const std::uint32_t mask = static_cast<std::uint32_t>((std::uint64_t{1} << n_) - 1);
  for (const auto& r : rows_)
    if ((r.x & ~mask) || (r.z & ~mask)) throw std::invalid_argument("CliffordTableau: row exceeds n bits");
  for (int i = 0; i < 2 * n_; ++i) {
    for (int j = i + 1; j < 2 * n_; ++j) {
      const int expected = (i / 2 == j / 2) ? 1 : 0;
      if (symplectic_product(rows_[static_cast<std::size_t>(i)], rows_[static_cast<std::size_t>(j)]) != expected)
        throw std::invalid_argument("CliffordTableau: rows do not form a symplectic basis");
    }
  }
}

CliffordTableau CliffordTableau::identity(int n_qubits) {
  check_qubits(n_qubits);
  std::vector<PauliRow> rows;
  for (int q = 0; q < n_qubits; ++q) {
    const std::uint32_t bit = std::uint32_t{1} << (n_qubits - 1 - q);
    rows.push_back(PauliRow{bit, 0, false});
    rows.push_back(PauliRow{0, bit, false});
  }
  return CliffordTableau(n_qubits, std::move(rows));
}

CliffordTableau CliffordTableau::random(int n_qubits, CounterRng& rng) {
  check_qubits(n_qubits);
  const int n = n_qubits;
  const SymVec mask = (SymVec{1} << (2 * n)) - 1;
  std::vector<SymVec> as, bs;
  for (int k = 0; k < n; ++k) {
    SymVec a = 0;
    while (a == 0) a = project(rng() & mask, as, bs, n);
    SymVec b = 0;
    while (true) {
      b = project(rng() & mask, as, bs, n);
      if (form(a, b, n) == 1) break;
    }
    as.push_back(a);
    bs.push_back(b);
  }
  std::vector<PauliRow> rows;
  for (int q = 0; q < n; ++q) {
    PauliRow xr = unpack(as[static_cast<std::size_t>(q)], n);
    PauliRow zr = unpack(bs[static_cast<std::size_t>(q)], n);
    xr.sign = rng.coin();
    zr.sign = rng.coin();
    rows.push_back(xr);
    rows.push_back(zr);
  }
  return CliffordTableau(n, std::move(rows));
}

std::vector<CliffordTableau> CliffordTableau::enumerate(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 2) throw std::invalid_argument("CliffordTableau::enumerate: n must be 1 or 2");
  std::vector<SymVec> as, bs;
  std::vector<std::vector<PauliRow>> bases;
  enumerate_bases(n_qubits, as, bs, bases);
  const int n_signs = 2 * n_qubits;
  std::vector<CliffordTableau> out;
  out.reserve(bases.size() << n_signs);
  for (const auto& base : bases) {
    for (std::uint32_t s = 0; s < (1u << n_signs); ++s) {
      std::vector<PauliRow> rows = base;
      for (int r = 0; r < n_signs; ++r) rows[static_cast<std::size_t>(r)].sign = (s >> r) & 1u;
      out.emplace_back(n_qubits, std::move(rows));
    }
  }
  return out;
}

ComplexVector apply_pauli(const PauliRow& p, const ComplexVector& v) {
  // (X^x Z^z)|j> = (-1)^{|z&j|} |j ^ x>.
  const int y_count = std::popcount(p.x & p.z);
  static const Complex kIPow[4] = {Complex(1, 0), Complex(0, 1), Complex(-1, 0), Complex(0, -1)};
  Complex phase = kIPow[y_count & 3];
  if (p.sign) phase = -phase;
  ComplexVector out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const auto uj = static_cast<std::uint64_t>(j);
    const double s = (std::popcount(p.z & uj) & 1) ? -1.0 : 1.0;
    out(static_cast<Eigen::Index>(uj ^ p.x)) = phase * s * v(j);
  }
  return out;
}

ComplexMatrix CliffordTableau::to_matrix() const {
  if (n_ > kMaxGlobalCliffordQubits)
    throw std::invalid_argument("CliffordTableau::to_matrix: n exceeds dense conversion cap");
  const Eigen::Index d = static_cast<Eigen::Index>(dim_of(n_));
  auto stabilize = [&](ComplexVector v) {
    for (int q = 0; q < n_; ++q) v = 0.5 * (v + apply_pauli(z_image(q), v));
    return v;
  };
  ComplexVector psi;
  for (Eigen::Index j = 0; j < d; ++j) {
    ComplexVector e = ComplexVector::Zero(d);
    e(j) = 1.0;
    ComplexVector v = stabilize(e);
    if (v.squaredNorm() > 0.5 / static_cast<double>(d)) {
      psi = v / v.norm();
      break;
    }
  }
  if (psi.size() == 0) throw std::logic_error("CliffordTableau::to_matrix: empty stabilizer space");
  for (Eigen::Index j = 0; j < d; ++j) {
    if (std::abs(psi(j)) > 1e-12) {
      psi *= std::conj(psi(j)) / std::abs(psi(j));
      break;
    }
  }
  ComplexMatrix u(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    ComplexVector col = psi;
    for (int q = 0; q < n_; ++q)
      if ((static_cast<std::uint64_t>(b) >> (n_ - 1 - q)) & 1u) col = apply_pauli(x_image(q), col);
    u.col(b) = col;
  }
  return u;
}

std::string CliffordTableau::serialize() const {
  std::ostringstream out;
  out << 'G' << n_ << ':';
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (r) out << ',';
    out << std::hex << rows_[r].x << '.' << rows_[r].z << '.' << (rows_[r].sign ? 1 : 0) << std::dec;
  }
  return out.str();
}

CliffordTableau CliffordTableau::deserialize(std::string_view text) {
  const auto colon = text.find(':');
  if (text.empty() || text[0] != 'G' || colon == std::string_view::npos)
    throw std::invalid_argument("CliffordTableau: malformed descriptor");
  int n = 0;
  try {
    n = std::stoi(std::string(text.substr(1, colon - 1)));
  } catch (const std::exception&) {
    throw std::invalid_argument("CliffordTableau: malformed qubit count");
  }
  std::vector<PauliRow> rows;
  std::string body(text.substr(colon + 1));
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    unsigned x = 0, z = 0, s = 0;
    char tail = 0;
    if (std::sscanf(item.c_str(), "%x.%x.%u%c", &x, &z, &s, &tail) != 3 || s > 1)
      throw std::invalid_argument("CliffordTableau: malformed row '" + item + "'");
    rows.push_back(PauliRow{x, z, s == 1});
  }
  return CliffordTableau(n, std::move(rows));
}

Eigen::Matrix2cd local_basis_rotation(std::uint8_t basis) {
  const double h = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd u;
  switch (basis) {
    case 0: u << 1, 0, 0, 1; break;
    case 1: u << h, h, h, -h; break;
    // H·S†: rows <+i| and <-i|, so outcome 0 projects onto |+i>.
    case 2: u << h, Complex(0, -h), h, Complex(0, h); break;
    default: throw std::invalid_argument("local_basis_rotation: basis id must be 0, 1 or 2");
  }
  return u;
}

namespace {

// In-place a <- (g on qubit q) · a.
void apply_1q_rows(ComplexMatrix& a, const Eigen::Matrix2cd& g, int q, int n) {
  const Eigen::Index step = Eigen::Index{1} << (n - 1 - q);
  const Eigen::Index d = a.rows();
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r0 = 0; r0 < d; ++r0) {
      if (r0 & step) continue;
      const Eigen::Index r1 = r0 | step;
      const Complex v0 = a(r0, c), v1 = a(r1, c);
      a(r0, c) = g(0, 0) * v0 + g(0, 1) * v1;
      a(r1, c) = g(1, 0) * v0 + g(1, 1) * v1;
    }
  }
}

}  // namespace

SampledUnitary SampledUnitary::local(std::vector<std::uint8_t> bases) {
  if (bases.empty() || bases.size() > 30) throw std::invalid_argument("SampledUnitary::local: bad qubit count");
  for (auto b : bases)
    if (b > 2) throw std::invalid_argument("SampledUnitary::local: basis id must be 0, 1 or 2");
  SampledUnitary u;
  u.kind_ = EnsembleKind{EnsembleTag::LocalClifford, static_cast<int>(bases.size())};
  u.bases_ = std::move(bases);
  return u;
}

SampledUnitary SampledUnitary::global(CliffordTableau tableau) {
  SampledUnitary u;
  u.kind_ = EnsembleKind{EnsembleTag::GlobalClifford, tableau.num_qubits()};
  u.dense_ = std::make_shared<const ComplexMatrix>(tableau.to_matrix());
  u.tableau_ = std::make_shared<const CliffordTableau>(std::move(tableau));
  return u;
}

SampledUnitary SampledUnitary::identity(const EnsembleKind& kind) {
  if (kind.tag == EnsembleTag::LocalClifford)
    return local(std::vector<std::uint8_t>(static_cast<std::size_t>(kind.n_qubits), 0));
  return global(CliffordTableau::identity(kind.n_qubits));
}

SampledUnitary SampledUnitary::from_descriptor(std::string_view descriptor) {
  if (descriptor.rfind("L:", 0) == 0) {
    std::vector<std::uint8_t> bases;
    for (char ch : descriptor.substr(2)) {
      if (ch < '0' || ch > '2') throw std::invalid_argument("SampledUnitary: bad local descriptor");
      bases.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    return local(std::move(bases));
  }
  if (descriptor.rfind("G", 0) == 0) return global(CliffordTableau::deserialize(descriptor));
  throw std::invalid_argument("SampledUnitary: unknown descriptor '" + std::string(descriptor) + "'");
}

std::string SampledUnitary::descriptor() const {
  if (kind_.tag == EnsembleTag::GlobalClifford) return tableau_->serialize();
  std::string out = "L:";
  for (auto b : bases_) out.push_back(static_cast<char>('0' + b));
  return out;
}

const CliffordTableau& SampledUnitary::tableau() const {
  if (!tableau_) throw std::logic_error("SampledUnitary::tableau: not a global Clifford");
  return *tableau_;
}

ComplexMatrix SampledUnitary::matrix() const {
  if (dense_) return *dense_;
  ComplexMatrix u = ComplexMatrix::Identity(1, 1);
  for (auto b : bases_) u = kron(u, local_basis_rotation(b));
  return u;
}

ComplexMatrix SampledUnitary::apply_left(const ComplexMatrix& a) const {
  if (a.rows() != static_cast<Eigen::Index>(dim_of(kind_.n_qubits)))
    throw std::invalid_argument("SampledUnitary::apply_left: dimension mismatch");
  if (dense_) return (*dense_) * a;
  ComplexMatrix out = a;
  for (int q = 0; q < kind_.n_qubits; ++q)
    if (bases_[static_cast<std::size_t>(q)] != 0)
      apply_1q_rows(out, local_basis_rotation(bases_[static_cast<std::size_t>(q)]), q, kind_.n_qubits);
  return out;
}

ComplexMatrix SampledUnitary::conjugate(const ComplexMatrix& a) const {
  // U a U† = U (U a†)†.
  const ComplexMatrix left = apply_left(a.adjoint());
  return apply_left(left.adjoint());
}

RealVector SampledUnitary::rotated_probabilities(const ComplexMatrix& a) const {
  return conjugate(a).diagonal().real();
}

ComplexVector SampledUnitary::basis_preimage(std::uint64_t b) const {
  const std::uint64_t d = dim_of(kind_.n_qubits);
  if (b >= d) throw std::invalid_argument("SampledUnitary::basis_preimage: outcome out of range");
  if (dense_) return dense_->row(static_cast<Eigen::Index>(b)).adjoint();
  ComplexVector v = ComplexVector::Ones(1);
  for (int q = 0; q < kind_.n_qubits; ++q) {
    const int bit = static_cast<int>((b >> (kind_.n_qubits - 1 - q)) & 1u);
    const Eigen::Vector2cd col = local_basis_rotation(bases_[static_cast<std::size_t>(q)]).row(bit).adjoint();
    v = kron(v, col);
  }
  return v;
}

SampledUnitary sample_unitary(const EnsembleKind& kind, CounterRng& rng) {
  if (kind.n_qubits < 1) throw std::invalid_argument("sample_unitary: n_qubits must be >= 1");
  if (kind.tag == EnsembleTag::LocalClifford) {
    std::vector<std::uint8_t> bases(static_cast<std::size_t>(kind.n_qubits));
    for (auto& b : bases) b = static_cast<std::uint8_t>(rng.below(3));
    return SampledUnitary::local(std::move(bases));
  }
  return SampledUnitary::global(CliffordTableau::random(kind.n_qubits, rng));
}

std::vector<std::pair<SampledUnitary, double>> enumerate_ensemble(const EnsembleKind& kind) {
  std::vector<std::pair<SampledUnitary, double>> out;
  if (kind.tag == EnsembleTag::LocalClifford) {
    if (kind.n_qubits < 1 || kind.n_qubits > 4)
      throw std::invalid_argument("enumerate_ensemble: LocalClifford requires 1 <= n <= 4");
    std::size_t total = 1;
    for (int q = 0; q < kind.n_qubits; ++q) total *= 3;
    const double p = 1.0 / static_cast<double>(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::vector<std::uint8_t> bases(static_cast<std::size_t>(kind.n_qubits));
      std::size_t rem = idx;
      for (int q = kind.n_qubits - 1; q >= 0; --q) {
        bases[static_cast<std::size_t>(q)] = static_cast<std::uint8_t>(rem % 3);
        rem /= 3;
      }
      out.emplace_back(SampledUnitary::local(std::move(bases)), p);
    }
    return out;
  }
  if (kind.n_qubits < 1 || kind.n_qubits > 2)
    throw std::invalid_argument("enumerate_ensemble: GlobalClifford requires n = 1 or 2");
  auto tableaus = CliffordTableau::enumerate(kind.n_qubits);
  const double p = 1.0 / static_cast<double>(tableaus.size());
  out.reserve(tableaus.size());
  for (auto& t : tableaus) out.emplace_back(SampledUnitary::global(std::move(t)), p);
  return out;
}

ComplexMatrix inverse_channel(const SampledUnitary& unitary, const BitString& b) {
  const int n = unitary.num_qubits();
  if (b.length() != n) throw std::invalid_argument("inverse_channel: outcome length must equal n");
  if (unitary.kind().tag == EnsembleTag::GlobalClifford) {
    const ComplexVector psi = unitary.basis_preimage(b.index());
    const double d = static_cast<double>(dim_of(n));
    ComplexMatrix out = (d + 1.0) * (psi * psi.adjoint());
    out.diagonal().array() -= 1.0;
    return out;
  }
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int q = 0; q < n; ++q) {
    const Eigen::Vector2cd v =
        local_basis_rotation(unitary.bases()[static_cast<std::size_t>(q)]).row(b.bit(q)).adjoint();
    Eigen::Matrix2cd f = 3.0 * (v * v.adjoint());
    f.diagonal().array() -= 1.0;
    out = kron(out, f);
  }
  return out;
}

ComplexMatrix inverse_channel(const EnsembleKind& kind, const SampledUnitary& unitary, const BitString& b) {
  if (!(kind == unitary.kind())) throw std::invalid_argument("inverse_channel: ensemble kind does not match unitary");
  return inverse_channel(unitary, b);
}

double shadow_norm_bound(const EnsembleKind& kind, const Observable& op, bool traceless) {
  if (!op.is_hermitian()) throw std::invalid_argument("shadow_norm_bound: observable must be Hermitian");
  if (kind.tag == EnsembleTag::GlobalClifford) {
    ComplexMatrix o = op.embedded();
    if (traceless) o.diagonal().array() -= o.trace() / static_cast<double>(o.rows());
    return 3.0 * o.squaredNorm();
  }
  ComplexMatrix o = op.local();
  if (traceless) o.diagonal().array() -= o.trace() / static_cast<double>(o.rows());
  return std::ldexp(o.squaredNorm(), static_cast<int>(op.support().size()));
}

}  // namespace hyshadow
