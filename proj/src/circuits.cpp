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


#include "hyshadow/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "hyshadow/parallel.hpp"

namespace hyshadow {

namespace {

constexpr double kNegativeWeightTol = 1e-12;
constexpr double kNormalizationTol = 1e-9;

struct FamilyName {
  CircuitFamily family;
  std::string_view name;
};

constexpr FamilyName kFamilyNames[] = {
    {CircuitFamily::PlainRM, "PlainRM"},           {CircuitFamily::SwapTest, "SwapTest"},
    {CircuitFamily::HybridMoment, "HybridMoment"}, {CircuitFamily::HybridSigma, "HybridSigma"},
    {CircuitFamily::ControlledVO, "ControlledVO"}, {CircuitFamily::SpectralO, "SpectralO"},
};

bool same_matrix(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).cwiseAbs().maxCoeff() <= kStructuralTol;
}

ComplexVector rotated_diagonal(const SampledUnitary& u, const ComplexMatrix& a) {
  return u.conjugate(a).diagonal();
}

// Pr(bc, b) = ¼(a + a') + (-1)^bc ½ Re τ        (X)
// Pr(bc, b) = ¼(a + a') - (-1)^bc ½ Im τ        (Y)
// with a = <b|Uρ_tU†|b>, a' = <b|Uρ_1U†|b>, τ = <b|UσU†|b>.
OutcomeDistribution control_distribution(const RealVector& a_first, const RealVector& a_last,
                                         const ComplexVector& tau, ControlBasis basis, int n) {
  const Eigen::Index d = a_first.size();
  RealVector probs(2 * d);
  for (Eigen::Index b = 0; b < d; ++b) {
    const double diag = 0.25 * (a_first(b) + a_last(b));
    const double cross = basis == ControlBasis::X ? 0.5 * tau(b).real() : -0.5 * tau(b).imag();
    probs(b) = diag + cross;
    probs(d + b) = diag - cross;
  }
  return OutcomeDistribution(true, 0, n, std::move(probs));
}

void require_unitary(const ComplexMatrix& m, const char* what) {
  if (!is_unitary(m)) throw std::invalid_argument(std::string(what) + " must be unitary");
}

}  // namespace

std::string_view to_string(CircuitFamily family) {
  for (const auto& f : kFamilyNames)
    if (f.family == family) return f.name;
  throw std::logic_error("unknown circuit family");
}

CircuitFamily parse_circuit_family(std::string_view text) {
  for (const auto& f : kFamilyNames)
    if (f.name == text) return f.family;
  throw std::invalid_argument("unknown circuit family '" + std::string(text) + "'");
}

CircuitSpec CircuitSpec::plain_rm(DensityMatrix rho) {
  CircuitSpec s;
  s.family = CircuitFamily::PlainRM;
  s.t = 1;
  s.states.push_back(std::move(rho));
  s.validate();
  return s;
}

CircuitSpec CircuitSpec::swap_test(std::vector<DensityMatrix> states, std::vector<Observable> ops) {
  CircuitSpec s;
  s.family = CircuitFamily::SwapTest;
  s.t = static_cast<int>(states.size());
  s.states = std::move(states);
  s.interleaved_ops = std::move(ops);
  s.validate();
  return s;
}

CircuitSpec CircuitSpec::hybrid_moment(DensityMatrix rho, int t) {
  if (t < 1) throw std::invalid_argument("hybrid_moment: t must be >= 1");
  CircuitSpec s;
  s.family = CircuitFamily::HybridMoment;
  s.t = t;
  s.states.assign(static_cast<std::size_t>(t), rho);
  s.validate();
  return s;
}

CircuitSpec CircuitSpec::hybrid_sigma(std::vector<DensityMatrix> states, std::vector<Observable> ops) {
  CircuitSpec s;
  s.family = CircuitFamily::HybridSigma;
  s.t = static_cast<int>(states.size());
  s.states = std::move(states);
  s.interleaved_ops = std::move(ops);
  s.validate();
  return s;
}

CircuitSpec CircuitSpec::controlled_vo(DensityMatrix rho, ComplexMatrix v) {
  CircuitSpec s;
  s.family = CircuitFamily::ControlledVO;
  s.t = 2;
  s.states.assign(2, rho);
  s.v_op = std::move(v);
  s.validate();
  return s;
}

CircuitSpec CircuitSpec::spectral_o(DensityMatrix rho, ComplexMatrix v, std::vector<double> lambda) {
  CircuitSpec s;
  s.family = CircuitFamily::SpectralO;
  s.t = 2;
  s.states.assign(2, rho);
  s.spectral_v = std::move(v);
  s.spectral_lambda = std::move(lambda);
  s.validate();
  return s;
}

int CircuitSpec::num_qubits() const {
  if (states.empty()) throw std::invalid_argument("CircuitSpec: no states");
  return states.front().num_qubits();
}

void CircuitSpec::validate() const {
  if (t < 1) throw std::invalid_argument("CircuitSpec: t must be >= 1");
  if (states.size() != static_cast<std::size_t>(t))
    throw std::invalid_argument("CircuitSpec: expected exactly t states");
  const int n = states.front().num_qubits();
  for (const auto& s : states)
    if (s.num_qubits() != n) throw std::invalid_argument("CircuitSpec: states differ in size");
  const Eigen::Index d = states.front().dim();
  switch (family) {
    case CircuitFamily::PlainRM:
      if (t != 1) throw std::invalid_argument("PlainRM: t must be 1");
      break;
    case CircuitFamily::SwapTest:
      if (t < 2) throw std::invalid_argument("SwapTest: need at least 2 states");
      if (!interleaved_ops.empty()) {
        if (interleaved_ops.size() != states.size())
          throw std::invalid_argument("SwapTest: ops must match states in length");
        for (const auto& o : interleaved_ops) {
          if (o.num_qubits() != n) throw std::invalid_argument("SwapTest: op size mismatch");
          if (!o.is_unitary() || !o.is_hermitian())
            throw std::invalid_argument("SwapTest: ops must be unitary and Hermitian");
        }
      }
      break;
    case CircuitFamily::HybridMoment:
      for (const auto& s : states)
        if (!same_matrix(s.matrix(), states.front().matrix()))
          throw std::invalid_argument("HybridMoment: all states must be identical");
      break;
    case CircuitFamily::HybridSigma:
      if (t < 2) throw std::invalid_argument("HybridSigma: t must be >= 2");
      if (interleaved_ops.size() != static_cast<std::size_t>(t - 1))
        throw std::invalid_argument("HybridSigma: expected t-1 interleaved ops");
      for (const auto& o : interleaved_ops) {
        if (o.num_qubits() != n) throw std::invalid_argument("HybridSigma: op size mismatch");
        if (!o.is_unitary() || !o.is_hermitian())
          throw std::invalid_argument("HybridSigma: interleaved ops must be unitary and Hermitian");
      }
      break;
    case CircuitFamily::ControlledVO:
      if (t != 2 || !v_op) throw std::invalid_argument("ControlledVO: requires t = 2 and v_op");
      if (v_op->rows() != d || v_op->cols() != d) throw std::invalid_argument("ControlledVO: v_op size mismatch");
      require_unitary(*v_op, "ControlledVO: v_op");
      break;
    case CircuitFamily::SpectralO:
      if (t != 2 || !spectral_v) throw std::invalid_argument("SpectralO: requires t = 2 and V");
      if (spectral_v->rows() != d || spectral_v->cols() != d)
        throw std::invalid_argument("SpectralO: V size mismatch");
      require_unitary(*spectral_v, "SpectralO: V");
      if (spectral_lambda.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("SpectralO: need one eigenvalue per basis state");
      break;
  }
}

OutcomeDistribution::OutcomeDistribution(bool has_control, int n_b1, int n_b, RealVector probs)
    : has_control_(has_control), n_b1_(n_b1), n_b_(n_b), probs_(std::move(probs)) {
  const std::uint64_t expected = (has_control ? 2u : 1u) * dim_of(n_b1) * dim_of(n_b);
  if (static_cast<std::uint64_t>(probs_.size()) != expected)
    throw std::invalid_argument("OutcomeDistribution: support size mismatch");
  if (probs_.minCoeff() < -kNegativeWeightTol)
    throw std::domain_error("OutcomeDistribution: negative weight");
  if (std::abs(probs_.sum() - 1.0) > kNormalizationTol)
    throw std::domain_error("OutcomeDistribution: weights do not sum to 1");
}

double OutcomeDistribution::prob(std::optional<int> bc, std::uint64_t b1, std::uint64_t b) const {
  if (bc.has_value() != has_control_) throw std::invalid_argument("OutcomeDistribution::prob: control mismatch");
  const std::uint64_t block = dim_of(n_b1_) * dim_of(n_b_);
  const std::uint64_t idx = static_cast<std::uint64_t>(bc.value_or(0)) * block + b1 * dim_of(n_b_) + b;
  if (idx >= size()) throw std::out_of_range("OutcomeDistribution::prob: index out of range");
  return probs_(static_cast<Eigen::Index>(idx));
}

Outcome OutcomeDistribution::outcome(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("OutcomeDistribution::outcome: index out of range");
  const std::uint64_t db = dim_of(n_b_);
  const std::uint64_t block = dim_of(n_b1_) * db;
  Outcome o;
  std::uint64_t rest = index;
  if (has_control_) {
    o.bc = static_cast<int>(rest / block);
    rest %= block;
  }
  if (n_b1_ > 0) o.b1 = BitString(rest / db, n_b1_);
  o.b = BitString(rest % db, n_b_);
  return o;
}

double OutcomeDistribution::signed_control_sum() const {
  if (!has_control_) return 0.0;
  const Eigen::Index half = probs_.size() / 2;
  return probs_.head(half).sum() - probs_.tail(half).sum();
}

RealVector OutcomeDistribution::marginal_b() const {
  const Eigen::Index db = static_cast<Eigen::Index>(dim_of(n_b_));
  RealVector out = RealVector::Zero(db);
  for (Eigen::Index k = 0; k < probs_.size(); ++k) out(k % db) += probs_(k);
  return out;
}

OutcomeSampler::OutcomeSampler(const OutcomeDistribution& dist) : dist_(&dist) {
  cdf_.resize(dist.size());
  long double acc = 0.0L;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    acc += static_cast<long double>(std::max(0.0, dist.probs()(static_cast<Eigen::Index>(k))));
    cdf_[k] = acc;
  }
}

std::size_t OutcomeSampler::index_for(double u) const {
  const long double target = static_cast<long double>(u) * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
  if (k >= cdf_.size()) k = cdf_.size() - 1;
  // Never land on a zero-weight entry at the tail.
  while (k > 0 && cdf_[k] == cdf_[k - 1]) --k;
  return k;
}

Outcome OutcomeSampler::draw(CounterRng& rng) const { return dist_->outcome(index_for(rng.uniform())); }

OutcomeDistribution plain_rm_distribution(const DensityMatrix& rho, const SampledUnitary& u) {
  return OutcomeDistribution(false, 0, rho.num_qubits(), u.rotated_probabilities(rho.matrix()));
}

OutcomeDistribution hybrid_moment_distribution(const DensityMatrix& rho, int t, const SampledUnitary& u) {
  const RealVector p = u.rotated_probabilities(rho.matrix());
  const RealVector q = u.rotated_probabilities(matrix_power(rho.matrix(), t));
  return control_distribution(p, p, q.cast<Complex>(), ControlBasis::X, rho.num_qubits());
}

OutcomeDistribution swap_test_distribution(std::span<const DensityMatrix> states,
                                           std::span<const Observable> ops, ControlBasis basis) {
  if (states.size() < 2) throw std::invalid_argument("swap_test_distribution: need at least 2 states");
  if (!ops.empty() && ops.size() != states.size())
    throw std::invalid_argument("swap_test_distribution: ops must match states in length");
  std::vector<ComplexMatrix> op_mats;
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (ops.empty()) {
      op_mats.push_back(ComplexMatrix::Identity(states[k].dim(), states[k].dim()));
    } else {
      if (!ops[k].is_unitary() || !ops[k].is_hermitian())
        throw std::invalid_argument("swap_test_distribution: ops must be unitary and Hermitian");
      op_mats.push_back(ops[k].embedded());
    }
  }
  const Complex f = exact_general_function(states, op_mats);
  const double e = basis == ControlBasis::X ? f.real() : -f.imag();
  RealVector probs(2);
  probs << 0.5 * (1.0 + e), 0.5 * (1.0 - e);
  return OutcomeDistribution(true, 0, 0, std::move(probs));
}

ComplexMatrix sigma_operator(const CircuitSpec& spec) {
  switch (spec.family) {
    case CircuitFamily::HybridMoment:
      return matrix_power(spec.states.front().matrix(), spec.t);
    case CircuitFamily::HybridSigma: {
      ComplexMatrix acc = spec.states[0].matrix();
      for (int k = 1; k < spec.t; ++k)
        acc = (acc * spec.interleaved_ops[static_cast<std::size_t>(k - 1)].embedded()) *
              spec.states[static_cast<std::size_t>(k)].matrix();
      return acc;
    }
    case CircuitFamily::ControlledVO: {
      const ComplexMatrix& rho = spec.states.front().matrix();
      return rho * (*spec.v_op) * rho;
    }
    default:
      throw std::invalid_argument("sigma_operator: family has no cross operator");
  }
}

OutcomeDistribution hybrid_sigma_distribution(const CircuitSpec& spec, const SampledUnitary& u,
                                              ControlBasis basis) {
  if (spec.family != CircuitFamily::HybridSigma)
    throw std::invalid_argument("hybrid_sigma_distribution: expected a HybridSigma spec");
  spec.validate();
  return PreparedCircuit(spec).distribution(u, basis);
}

OutcomeDistribution controlled_vo_distribution(const DensityMatrix& rho, const ComplexMatrix& v_op,
                                               const SampledUnitary& u) {
  return PreparedCircuit(CircuitSpec::controlled_vo(rho, v_op)).distribution(u);
}

OutcomeDistribution spectral_o_distribution(const DensityMatrix& rho, const ComplexMatrix& v,
                                            const SampledUnitary& u) {
  std::vector<double> ones(static_cast<std::size_t>(rho.dim()), 1.0);
  return PreparedCircuit(CircuitSpec::spectral_o(rho, v, std::move(ones))).distribution(u);
}

PreparedCircuit::PreparedCircuit(CircuitSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  first_ = spec_.states.front().matrix();
  last_ = spec_.states.back().matrix();
  distinct_ends_ = !same_matrix(first_, last_);
  switch (spec_.family) {
    case CircuitFamily::HybridMoment:
    case CircuitFamily::HybridSigma:
    case CircuitFamily::ControlledVO:
      cross_ = sigma_operator(spec_);
      break;
    case CircuitFamily::SpectralO:
      vt_rho_v_ = spec_.spectral_v->adjoint() * first_ * (*spec_.spectral_v);
      rho_v_ = first_ * (*spec_.spectral_v);
      break;
    default:
      break;
  }
}

OutcomeDistribution PreparedCircuit::distribution(const SampledUnitary& u, ControlBasis basis) const {
  const int n = spec_.num_qubits();
  if (spec_.family != CircuitFamily::SwapTest && u.num_qubits() != n)
    throw std::invalid_argument("PreparedCircuit: unitary size does not match the state");
  switch (spec_.family) {
    case CircuitFamily::PlainRM:
      return OutcomeDistribution(false, 0, n, u.rotated_probabilities(first_));
    case CircuitFamily::SwapTest:
      return swap_test_distribution(spec_.states, spec_.interleaved_ops, ControlBasis::X);
    case CircuitFamily::HybridMoment: {
      const RealVector p = u.rotated_probabilities(first_);
      const ComplexVector q = rotated_diagonal(u, cross_);
      return control_distribution(p, p, q, ControlBasis::X, n);
    }
    case CircuitFamily::HybridSigma: {
      const RealVector a1 = u.rotated_probabilities(first_);
      const RealVector at = distinct_ends_ ? u.rotated_probabilities(last_) : a1;
      return control_distribution(a1, at, rotated_diagonal(u, cross_), basis, n);
    }
    case CircuitFamily::ControlledVO: {
      const RealVector p = u.rotated_probabilities(first_);
      return control_distribution(p, p, rotated_diagonal(u, cross_), ControlBasis::X, n);
    }
    case CircuitFamily::SpectralO: {
      // Pr(bc, b1, b2) = ½ <b1|V†ρV|b1> <b2|UρU†|b2> ± ½ |<b2|UρV|b1>|².
      const RealVector w1 = vt_rho_v_.diagonal().real();
      const RealVector p = u.rotated_probabilities(first_);
      const ComplexMatrix m = u.apply_left(rho_v_);
      const Eigen::Index d = p.size();
      RealVector probs(2 * d * d);
      for (Eigen::Index b1 = 0; b1 < d; ++b1) {
        for (Eigen::Index b2 = 0; b2 < d; ++b2) {
          const double diag = 0.5 * w1(b1) * p(b2);
          const double cross = 0.5 * std::norm(m(b2, b1));
          probs(b1 * d + b2) = diag + cross;
          probs(d * d + b1 * d + b2) = diag - cross;
        }
      }
      return OutcomeDistribution(true, n, n, std::move(probs));
    }
  }
  throw std::logic_error("PreparedCircuit: unhandled family");
}

std::size_t Dataset::shots_per_setting() const {
  if (settings.empty()) return 0;
  const std::size_t k = settings.front().shots.size();
  for (const auto& s : settings)
    if (s.shots.size() != k) throw std::logic_error("Dataset: settings have different shot counts");
  return k;
}

namespace {

void check_caps(const CircuitSpec& spec) {
  const int n = spec.num_qubits();
  const bool single = spec.family == CircuitFamily::PlainRM || spec.family == CircuitFamily::HybridMoment ||
                      spec.family == CircuitFamily::SwapTest;
  const int cap = single ? kMaxQubitsSingleRegister : kMaxQubitsTwoRegisters;
  if (n > cap) throw std::invalid_argument("sample_dataset: n exceeds the dense support cap for this family");
}

Setting sample_setting(const PreparedCircuit& circuit, const SampledUnitary& u, std::size_t i, int K,
                       std::uint64_t seed) {
  const CircuitSpec& spec = circuit.spec();
  Setting setting{u, {}};
  setting.shots.reserve(static_cast<std::size_t>(K));
  const OutcomeDistribution dist_x = circuit.distribution(u, ControlBasis::X);
  const OutcomeSampler sampler_x(dist_x);
  std::optional<OutcomeDistribution> dist_y;
  std::optional<OutcomeSampler> sampler_y;
  for (int j = 0; j < K; ++j) {
    const auto uj = static_cast<std::uint64_t>(j);
    Shot shot;
    const OutcomeSampler* sampler = &sampler_x;
    if (spec.randomizes_control_basis()) {
      CounterRng basis_rng(seed, i, uj, StreamTag::ControlBasis);
      shot.c = basis_rng.coin() ? ControlBasis::Y : ControlBasis::X;
      if (*shot.c == ControlBasis::Y) {
        if (!dist_y) {
          dist_y.emplace(circuit.distribution(u, ControlBasis::Y));
          sampler_y.emplace(*dist_y);
        }
        sampler = &*sampler_y;
      }
    }
    CounterRng outcome_rng(seed, i, uj, StreamTag::Outcome);
    Outcome o = sampler->draw(outcome_rng);
    shot.bc = o.bc;
    shot.b1 = o.b1;
    shot.b = o.b;
    setting.shots.push_back(std::move(shot));
  }
  return setting;
}

EnsembleKind kind_of(const std::vector<SampledUnitary>& unitaries) {
  if (unitaries.empty()) throw std::invalid_argument("sample_dataset: need at least one setting");
  const EnsembleKind kind = unitaries.front().kind();
  for (const auto& u : unitaries)
    if (!(u.kind() == kind)) throw std::invalid_argument("sample_dataset: unitaries from mixed ensembles");
  return kind;
}

}  // namespace

Dataset sample_dataset_with_unitaries(const CircuitSpec& spec, const std::vector<SampledUnitary>& unitaries,
                                      int K, std::uint64_t seed, int threads) {
  spec.validate();
  check_caps(spec);
  if (K < 1) throw std::invalid_argument("sample_dataset: K must be >= 1");
  const EnsembleKind kind = kind_of(unitaries);
  if (kind.n_qubits != spec.num_qubits())
    throw std::invalid_argument("sample_dataset: unitary size does not match the state");
  const PreparedCircuit circuit(spec);
  std::vector<std::optional<Setting>> slots(unitaries.size());
  parallel_for(unitaries.size(), threads,
               [&](std::size_t i) { slots[i] = sample_setting(circuit, unitaries[i], i, K, seed); });
  Dataset data;
  data.family = spec.family;
  data.t = spec.t;
  data.kind = kind;
  data.seed = seed;
  data.settings.reserve(slots.size());
  for (auto& s : slots) data.settings.push_back(std::move(*s));
  return data;
}

Dataset sample_dataset(const CircuitSpec& spec, const EnsembleKind& kind, int M, int K, std::uint64_t seed,
                       int threads) {
  check_caps(spec);
  spec.validate();
  if (M < 1) throw std::invalid_argument("sample_dataset: M must be >= 1");
  if (kind.n_qubits != spec.num_qubits())
    throw std::invalid_argument("sample_dataset: ensemble size does not match the state");
  std::vector<std::optional<SampledUnitary>> slots(static_cast<std::size_t>(M));
  parallel_for(slots.size(), threads, [&](std::size_t i) {
    if (spec.family == CircuitFamily::SwapTest) {
      slots[i] = SampledUnitary::identity(kind);
    } else {
      CounterRng rng(seed, i, 0, StreamTag::Unitary);
      slots[i] = sample_unitary(kind, rng);
    }
  });
  std::vector<SampledUnitary> unitaries;
  unitaries.reserve(slots.size());
  for (auto& s : slots) unitaries.push_back(std::move(*s));
  return sample_dataset_with_unitaries(spec, unitaries, K, seed, threads);
}

std::vector<SnapshotRecord> to_records(const Dataset& data) {
  std::vector<SnapshotRecord> out;
  for (std::size_t i = 0; i < data.settings.size(); ++i) {
    const Setting& s = data.settings[i];
    const std::string desc = s.unitary.descriptor();
    for (std::size_t j = 0; j < s.shots.size(); ++j) {
      const Shot& shot = s.shots[j];
      SnapshotRecord r;
      r.family = data.family;
      r.t = data.t;
      r.ensemble = data.kind.tag;
      r.descriptor = desc;
      r.c = shot.c;
      r.bc = shot.bc;
      r.b1 = shot.b1;
      r.b = shot.b;
      r.i = static_cast<std::int64_t>(i);
      r.j = static_cast<std::int64_t>(j);
      r.seed = data.seed;
      out.push_back(std::move(r));
    }
  }
  return out;
}

Dataset from_records(const std::vector<SnapshotRecord>& records) {
  if (records.empty()) throw std::invalid_argument("from_records: no records");
  const SnapshotRecord& first = records.front();
  std::map<std::int64_t, std::map<std::int64_t, const SnapshotRecord*>> grouped;
  for (const auto& r : records) {
    if (r.family != first.family || r.t != first.t || r.ensemble != first.ensemble || r.seed != first.seed)
      throw std::invalid_argument("from_records: records mix different experiments");
    if (r.i < 0 || r.j < 0) throw std::invalid_argument("from_records: negative index");
    auto& shots = grouped[r.i];
    if (!shots.emplace(r.j, &r).second)
      throw std::invalid_argument("from_records: duplicate (i, j) = (" + std::to_string(r.i) + ", " +
                                  std::to_string(r.j) + ")");
  }
  Dataset data;
  data.family = first.family;
  data.t = first.t;
  data.seed = first.seed;
  std::int64_t expected_i = 0;
  for (const auto& [i, shots] : grouped) {
    if (i != expected_i++) throw std::invalid_argument("from_records: setting indices are not contiguous");
    const std::string& desc = shots.begin()->second->descriptor;
    SampledUnitary u = SampledUnitary::from_descriptor(desc);
    if (u.kind().tag != first.ensemble) throw std::invalid_argument("from_records: descriptor/ensemble mismatch");
    Setting setting{u, {}};
    std::int64_t expected_j = 0;
    for (const auto& [j, rec] : shots) {
      if (j != expected_j++) throw std::invalid_argument("from_records: shot indices are not contiguous");
      if (rec->descriptor != desc) throw std::invalid_argument("from_records: descriptors differ within a setting");
      if (rec->b.length() != u.num_qubits() && first.family != CircuitFamily::SwapTest)
        throw std::invalid_argument("from_records: outcome length does not match the unitary");
      setting.shots.push_back(Shot{rec->c, rec->bc, rec->b1, rec->b});
    }
    data.settings.push_back(std::move(setting));
  }
  data.kind = data.settings.front().unitary.kind();
  return data;
}

std::string record_to_line(const SnapshotRecord& r) {
  nlohmann::ordered_json j;
  j["family"] = std::string(to_string(r.family));
  j["t"] = r.t;
  j["ensemble"] = std::string(to_string(r.ensemble));
  j["descriptor"] = r.descriptor;
  j["c"] = r.c ? nlohmann::ordered_json(*r.c == ControlBasis::X ? "X" : "Y") : nlohmann::ordered_json(nullptr);
  j["b_c"] = r.bc ? nlohmann::ordered_json(*r.bc) : nlohmann::ordered_json(nullptr);
  j["b1"] = r.b1 ? nlohmann::ordered_json(r.b1->to_string()) : nlohmann::ordered_json(nullptr);
  j["b"] = r.b.to_string();
  j["i"] = r.i;
  j["j"] = r.j;
  j["seed"] = r.seed;
  return j.dump();
}

SnapshotRecord record_from_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  SnapshotRecord r;
  r.family = parse_circuit_family(j.at("family").get<std::string>());
  r.t = j.at("t").get<int>();
  r.ensemble = parse_ensemble_tag(j.at("ensemble").get<std::string>());
  r.descriptor = j.at("descriptor").get<std::string>();
  if (!j.at("c").is_null()) {
    const auto c = j.at("c").get<std::string>();
    if (c != "X" && c != "Y") throw std::invalid_argument("record: control basis must be X or Y");
    r.c = c == "X" ? ControlBasis::X : ControlBasis::Y;
  }
  if (!j.at("b_c").is_null()) {
    const int bc = j.at("b_c").get<int>();
    if (bc != 0 && bc != 1) throw std::invalid_argument("record: b_c must be 0 or 1");
    r.bc = bc;
  }
  if (!j.at("b1").is_null()) r.b1 = BitString::parse(j.at("b1").get<std::string>());
  r.b = BitString::parse(j.at("b").get<std::string>());
  r.i = j.at("i").get<std::int64_t>();
  r.j = j.at("j").get<std::int64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

void write_records(std::ostream& out, const std::vector<SnapshotRecord>& records) {
  for (const auto& r : records) out << record_to_line(r) << '\n';
}

std::vector<SnapshotRecord> read_records(std::istream& in) {
  std::vector<SnapshotRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hyshadow
