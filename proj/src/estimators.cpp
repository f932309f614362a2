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


#include "hyshadow/estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace hyshadow {

namespace {

// Neumaier summation on each component.
class CompensatedSum {
 public:
  void add(Complex v) {
    add_component(re_, re_c_, v.real());
    add_component(im_, im_c_, v.imag());
  }
  Complex value() const { return {re_ + re_c_, im_ + im_c_}; }

 private:
  static void add_component(double& sum, double& comp, double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double re_ = 0.0, re_c_ = 0.0, im_ = 0.0, im_c_ = 0.0;
};

using IndexList = std::vector<std::size_t>;

IndexList identity_indices(std::size_t m) {
  IndexList idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

// Bootstrap over settings: each group of settings is resampled with replacement
// and the estimator is re-evaluated on the resampled index lists.
double bootstrap_error(const std::vector<std::size_t>& sizes, const EstimatorOptions& opt,
                       const std::function<Complex(const std::vector<IndexList>&)>& estimate) {
  if (opt.bootstrap <= 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<Complex> reps;
  reps.reserve(static_cast<std::size_t>(opt.bootstrap));
  for (int r = 0; r < opt.bootstrap; ++r) {
    CounterRng rng(opt.seed, static_cast<std::uint64_t>(r), 0, StreamTag::Bootstrap);
    std::vector<IndexList> lists;
    for (std::size_t m : sizes) {
      IndexList idx(m);
      for (auto& v : idx) v = static_cast<std::size_t>(rng.below(m));
      lists.push_back(std::move(idx));
    }
    reps.push_back(estimate(lists));
  }
  CompensatedSum mean_sum;
  for (const auto& v : reps) mean_sum.add(v);
  const Complex mean = mean_sum.value() / static_cast<double>(reps.size());
  double acc = 0.0;
  for (const auto& v : reps) acc += std::norm(v - mean);
  return reps.size() > 1 ? std::sqrt(acc / static_cast<double>(reps.size() - 1)) : 0.0;
}

ComplexMatrix sum_of(const std::vector<ComplexMatrix>& mats, const IndexList& idx) {
  ComplexMatrix s = ComplexMatrix::Zero(mats.front().rows(), mats.front().cols());
  for (std::size_t i : idx) s += mats[i];
  return s;
}

Complex sum_of(const std::vector<Complex>& vals, const IndexList& idx) {
  CompensatedSum s;
  for (std::size_t i : idx) s.add(vals[i]);
  return s.value();
}

Complex trace_prod(const ComplexMatrix& a, const ComplexMatrix& b) { return trace_of_product(a, b); }

void require_target(const ShadowSet& set, SnapshotTarget target, int t, const char* who) {
  if (set.target() != target) throw std::invalid_argument(std::string(who) + ": wrong snapshot target");
  if (t > 0 && set.t() != t) throw std::invalid_argument(std::string(who) + ": wrong copy count t");
}

void require_nonempty(const ShadowSet& set, std::size_t min_settings, const char* who) {
  if (set.num_settings() < min_settings)
    throw std::invalid_argument(std::string(who) + ": not enough settings");
}

void require_dim(const ComplexMatrix& op, const ComplexMatrix& ref, const char* who) {
  if (op.rows() != ref.rows() || op.cols() != ref.cols())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

EstimateReport make_report(Complex value, std::size_t M, std::size_t K, double err, Protocol protocol) {
  EstimateReport r;
  r.value = value;
  r.M = M;
  r.K = K;
  r.std_error = err;
  r.protocol = protocol;
  return r;
}

// Σ over ordered pairs of distinct positions of tr(O A_i A_j), O optional.
Complex ordered_pair_sum(const std::vector<ComplexMatrix>& a, const std::vector<Complex>& diag,
                         const ComplexMatrix* op, const IndexList& idx) {
  const ComplexMatrix s = sum_of(a, idx);
  const Complex total = op ? trace_prod(*op, s * s) : trace_prod(s, s);
  return total - sum_of(diag, idx);
}

// ½[tr(O A B) + tr(O B A)].
Complex sym_trace(const ComplexMatrix& op, const ComplexMatrix& a, const ComplexMatrix& b) {
  return 0.5 * (trace_prod(op, a * b) + trace_prod(op, b * a));
}

double falling(std::size_t m, int k) {
  double v = 1.0;
  for (int r = 0; r < k; ++r) v *= static_cast<double>(m) - r;
  return v;
}

}  // namespace

std::string_view to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::HS: return "HS";
    case Protocol::HR: return "HR";
    case Protocol::OS: return "OS";
    case Protocol::SwapTest: return "SwapTest";
  }
  throw std::logic_error("unknown protocol");
}

Protocol parse_protocol(std::string_view text) {
  if (text == "HS") return Protocol::HS;
  if (text == "HR") return Protocol::HR;
  if (text == "OS") return Protocol::OS;
  if (text == "SwapTest") return Protocol::SwapTest;
  throw std::invalid_argument("unknown protocol '" + std::string(text) + "'");
}

ComplexMatrix ShadowSnapshot::materialize() const { return weight * inverse_channel(unitary, b); }

Complex snapshot_weight(SnapshotTarget target, const Shot& shot) {
  switch (target) {
    case SnapshotTarget::Rho:
      return {1.0, 0.0};
    case SnapshotTarget::RhoPowT:
      if (!shot.bc) throw std::invalid_argument("snapshot_rho_pow_t: record has no control outcome");
      return {*shot.bc ? -1.0 : 1.0, 0.0};
    case SnapshotTarget::Sigma: {
      if (!shot.bc) throw std::invalid_argument("snapshot_sigma: record has no control outcome");
      if (!shot.c) throw std::invalid_argument("snapshot_sigma: record has no control basis");
      const double s = *shot.bc ? -2.0 : 2.0;
      return *shot.c == ControlBasis::X ? Complex(s, 0.0) : Complex(0.0, -s);
    }
  }
  throw std::logic_error("unknown snapshot target");
}

namespace {

ShadowSnapshot snapshot_from_record(const SnapshotRecord& record, const EnsembleKind& kind, SnapshotTarget target) {
  SampledUnitary u = SampledUnitary::from_descriptor(record.descriptor);
  if (!(u.kind() == kind)) throw std::invalid_argument("snapshot: descriptor does not match the ensemble kind");
  const Shot shot{record.c, record.bc, record.b1, record.b};
  const Complex w = snapshot_weight(target, shot);
  if (record.b.length() != kind.n_qubits) throw std::invalid_argument("snapshot: outcome length mismatch");
  return ShadowSnapshot{target, record.t, w, static_cast<std::size_t>(record.i), std::move(u), record.b};
}

}  // namespace

ShadowSnapshot snapshot_rho(const SnapshotRecord& record, const EnsembleKind& kind) {
  return snapshot_from_record(record, kind, SnapshotTarget::Rho);
}

ShadowSnapshot snapshot_rho_pow_t(const SnapshotRecord& record, const EnsembleKind& kind) {
  return snapshot_from_record(record, kind, SnapshotTarget::RhoPowT);
}

ShadowSnapshot snapshot_sigma(const SnapshotRecord& record, const EnsembleKind& kind) {
  return snapshot_from_record(record, kind, SnapshotTarget::Sigma);
}

ShadowSet::ShadowSet(SnapshotTarget target, int t, std::vector<std::vector<ShadowSnapshot>> by_setting)
    : target_(target), t_(t), by_setting_(std::move(by_setting)) {
  for (const auto& s : by_setting_) {
    if (s.empty()) throw std::invalid_argument("ShadowSet: empty setting");
    const std::string desc = s.front().unitary.descriptor();
    for (const auto& snap : s)
      if (snap.target != target) throw std::invalid_argument("ShadowSet: mixed snapshot targets");
    if (s.size() > 1)
      for (const auto& snap : s)
        if (snap.unitary.descriptor() != desc) throw std::invalid_argument("ShadowSet: unitaries differ within a setting");
  }
}

ShadowSet ShadowSet::from_dataset(const Dataset& data, SnapshotTarget target) {
  std::vector<std::vector<ShadowSnapshot>> groups;
  groups.reserve(data.settings.size());
  for (std::size_t i = 0; i < data.settings.size(); ++i) {
    const Setting& s = data.settings[i];
    std::vector<ShadowSnapshot> group;
    group.reserve(s.shots.size());
    for (const Shot& shot : s.shots)
      group.push_back(ShadowSnapshot{target, data.t, snapshot_weight(target, shot), i, s.unitary, shot.b});
    groups.push_back(std::move(group));
  }
  return ShadowSet(target, data.t, std::move(groups));
}

std::size_t ShadowSet::shots_per_setting() const {
  if (by_setting_.empty()) return 0;
  const std::size_t k = by_setting_.front().size();
  for (const auto& s : by_setting_)
    if (s.size() != k) throw std::logic_error("ShadowSet: settings have different shot counts");
  return k;
}

ComplexMatrix ShadowSet::setting_mean(std::size_t i) const {
  const auto& group = by_setting_.at(i);
  ComplexMatrix acc = group.front().materialize();
  for (std::size_t j = 1; j < group.size(); ++j) acc += group[j].materialize();
  return acc / static_cast<double>(group.size());
}

std::vector<ComplexMatrix> ShadowSet::setting_means() const {
  std::vector<ComplexMatrix> out;
  out.reserve(by_setting_.size());
  for (std::size_t i = 0; i < by_setting_.size(); ++i) out.push_back(setting_mean(i));
  return out;
}

EstimateReport estimate_pm_os(const ShadowSet& rho_set, int m, const EstimatorOptions& opt) {
  require_target(rho_set, SnapshotTarget::Rho, 0, "estimate_pm_os");
  if (m < 1) throw std::invalid_argument("estimate_pm_os: m must be >= 1");
  require_nonempty(rho_set, static_cast<std::size_t>(m), "estimate_pm_os");
  const auto a = rho_set.setting_means();
  const std::size_t M = a.size();

  std::function<Complex(const IndexList&)> eval;
  std::vector<Complex> c2, c3;
  std::vector<ComplexMatrix> a2;
  if (m == 1) {
    std::vector<Complex> c1;
    for (const auto& x : a) c1.push_back(x.trace());
    eval = [c1](const IndexList& idx) { return sum_of(c1, idx) / static_cast<double>(idx.size()); };
  } else if (m == 2) {
    for (const auto& x : a) c2.push_back(trace_prod(x, x));
    eval = [&](const IndexList& idx) { return ordered_pair_sum(a, c2, nullptr, idx) / falling(idx.size(), 2); };
  } else if (m == 3) {
    for (const auto& x : a) {
      a2.push_back(x * x);
      c3.push_back(trace_prod(a2.back(), x));
    }
    eval = [&](const IndexList& idx) {
      const ComplexMatrix s = sum_of(a, idx);
      const ComplexMatrix q = sum_of(a2, idx);
      const Complex total = trace_prod(s * s, s) - 3.0 * trace_prod(q, s) + 2.0 * sum_of(c3, idx);
      return total / falling(idx.size(), 3);
    };
  } else {
    // Disjoint blocks of m settings; each block averages its (m-1)! non-cyclic orderings.
    eval = [&, m](const IndexList& idx) {
      const std::size_t blocks = idx.size() / static_cast<std::size_t>(m);
      CompensatedSum total;
      for (std::size_t blk = 0; blk < blocks; ++blk) {
        std::vector<std::size_t> perm(static_cast<std::size_t>(m - 1));
        std::iota(perm.begin(), perm.end(), std::size_t{1});
        CompensatedSum block_sum;
        std::size_t count = 0;
        do {
          ComplexMatrix acc = a[idx[blk * m]];
          for (std::size_t p : perm) acc = acc * a[idx[blk * m + p]];
          block_sum.add(acc.trace());
          ++count;
        } while (std::next_permutation(perm.begin(), perm.end()));
        total.add(block_sum.value() / static_cast<double>(count));
      }
      return total.value() / static_cast<double>(blocks);
    };
  }
  const Complex value = eval(identity_indices(M));
  const double err = bootstrap_error({M}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  return make_report(value, M, rho_set.shots_per_setting(), err, Protocol::OS);
}

namespace {

// ½[tr(O ρ̂²ρ̂) + tr(O ρ̂ρ̂²)] averaged over pairs (shared by P3 and o3).
EstimateReport patched_third_order(const ShadowSet& set2, const ShadowSet& set1, const ComplexMatrix& op,
                                   PairingMode mode, const EstimatorOptions& opt, const char* who) {
  require_target(set2, SnapshotTarget::RhoPowT, 2, who);
  require_target(set1, SnapshotTarget::Rho, 0, who);
  const auto a = set2.setting_means();
  const auto b = set1.setting_means();
  require_nonempty(set2, mode == PairingMode::SingleDataset ? 2 : 1, who);
  require_nonempty(set1, 1, who);
  require_dim(op, a.front(), who);
  require_dim(b.front(), a.front(), who);
  const std::size_t M = a.size();

  Complex value;
  double err;
  if (mode == PairingMode::TwoDatasets) {
    auto eval = [&](const IndexList& ia, const IndexList& ib) {
      const ComplexMatrix abar = sum_of(a, ia) / static_cast<double>(ia.size());
      const ComplexMatrix bbar = sum_of(b, ib) / static_cast<double>(ib.size());
      return sym_trace(op, abar, bbar);
    };
    value = eval(identity_indices(M), identity_indices(b.size()));
    err = bootstrap_error({M, b.size()}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0], l[1]); });
  } else {
    if (b.size() != M) throw std::invalid_argument(std::string(who) + ": single-dataset mode needs one dataset");
    for (std::size_t i = 0; i < M; ++i)
      if (set1.setting(i).size() != set2.setting(i).size() ||
          set1.setting(i).front().unitary.descriptor() != set2.setting(i).front().unitary.descriptor())
        throw std::invalid_argument(std::string(who) + ": single-dataset mode needs one dataset");
    std::vector<Complex> diag;
    for (std::size_t i = 0; i < M; ++i) diag.push_back(sym_trace(op, a[i], b[i]));
    auto eval = [&](const IndexList& idx) {
      const ComplexMatrix sa = sum_of(a, idx);
      const ComplexMatrix sb = sum_of(b, idx);
      return (sym_trace(op, sa, sb) - sum_of(diag, idx)) / falling(idx.size(), 2);
    };
    value = eval(identity_indices(M));
    err = bootstrap_error({M}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  }
  return make_report(value, M, set2.shots_per_setting(), err, Protocol::HS);
}

}  // namespace

EstimateReport estimate_p3_hs(const ShadowSet& set2, const ShadowSet& set1, PairingMode mode,
                              const EstimatorOptions& opt) {
  require_nonempty(set2, 1, "estimate_p3_hs");
  const Eigen::Index d = set2.setting(0).front().unitary.matrix().rows();
  return patched_third_order(set2, set1, ComplexMatrix::Identity(d, d), mode, opt, "estimate_p3_hs");
}

EstimateReport estimate_o3_hs(const ShadowSet& set2, const ShadowSet& set1, const Observable& op,
                              const EstimatorOptions& opt) {
  return patched_third_order(set2, set1, op.embedded(), PairingMode::TwoDatasets, opt, "estimate_o3_hs");
}

namespace {

// tr(O A_i A_j) over ordered pairs of distinct settings; O = nullptr means identity.
EstimateReport pairwise_second_order(const ShadowSet& set, const ComplexMatrix* op, const EstimatorOptions& opt,
                                     Protocol protocol) {
  const auto a = set.setting_means();
  const std::size_t M = a.size();
  if (op) require_dim(*op, a.front(), "pairwise estimator");
  std::vector<Complex> diag;
  for (const auto& x : a) diag.push_back(op ? trace_prod(*op, x * x) : trace_prod(x, x));
  auto eval = [&](const IndexList& idx) { return ordered_pair_sum(a, diag, op, idx) / falling(idx.size(), 2); };
  const Complex value = eval(identity_indices(M));
  const double err = bootstrap_error({M}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  return make_report(value, M, set.shots_per_setting(), err, protocol);
}

}  // namespace

EstimateReport estimate_p4_hs(const ShadowSet& set2, const EstimatorOptions& opt) {
  require_target(set2, SnapshotTarget::RhoPowT, 2, "estimate_p4_hs");
  require_nonempty(set2, 2, "estimate_p4_hs");
  return pairwise_second_order(set2, nullptr, opt, Protocol::HS);
}

EstimateReport estimate_o4_hs(const ShadowSet& set2, const Observable& op, const EstimatorOptions& opt) {
  require_target(set2, SnapshotTarget::RhoPowT, 2, "estimate_o4_hs");
  require_nonempty(set2, 2, "estimate_o4_hs");
  return pairwise_second_order(set2, &op.embedded(), opt, Protocol::HS);
}

EstimateReport estimate_ot_hs(const ShadowSet& set_t, const Observable& op, const EstimatorOptions& opt) {
  require_target(set_t, SnapshotTarget::RhoPowT, 0, "estimate_ot_hs");
  require_nonempty(set_t, 1, "estimate_ot_hs");
  const auto a = set_t.setting_means();
  require_dim(op.embedded(), a.front(), "estimate_ot_hs");
  std::vector<Complex> vals;
  for (const auto& x : a) vals.push_back(trace_prod(op.embedded(), x));
  auto eval = [&](const IndexList& idx) { return sum_of(vals, idx) / static_cast<double>(idx.size()); };
  const Complex value = eval(identity_indices(a.size()));
  const double err = bootstrap_error({a.size()}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  return make_report(value, a.size(), set_t.shots_per_setting(), err, Protocol::HS);
}

EstimateReport estimate_om_os(const ShadowSet& rho_set, const Observable& op, int m, const EstimatorOptions& opt) {
  require_target(rho_set, SnapshotTarget::Rho, 0, "estimate_om_os");
  if (m < 1 || m > 3) throw std::invalid_argument("estimate_om_os: m must be 1, 2 or 3");
  require_nonempty(rho_set, static_cast<std::size_t>(m), "estimate_om_os");
  const ComplexMatrix& o = op.embedded();
  if (m == 2) return pairwise_second_order(rho_set, &o, opt, Protocol::OS);
  const auto a = rho_set.setting_means();
  require_dim(o, a.front(), "estimate_om_os");
  const std::size_t M = a.size();
  std::function<Complex(const IndexList&)> eval;
  std::vector<Complex> c1, c3;
  std::vector<ComplexMatrix> a2, aoa;
  if (m == 1) {
    for (const auto& x : a) c1.push_back(trace_prod(o, x));
    eval = [&](const IndexList& idx) { return sum_of(c1, idx) / static_cast<double>(idx.size()); };
  } else {
    for (const auto& x : a) {
      a2.push_back(x * x);
      aoa.push_back(x * o * x);
      c3.push_back(trace_prod(o, a2.back() * x));
    }
    eval = [&](const IndexList& idx) {
      const ComplexMatrix s = sum_of(a, idx);
      const ComplexMatrix q = sum_of(a2, idx);
      const ComplexMatrix r = sum_of(aoa, idx);
      const ComplexMatrix os = o * s;
      const Complex total = trace_prod(os * s, s) - trace_prod(o * q, s) - trace_prod(os, q) - trace_prod(r, s) +
                            2.0 * sum_of(c3, idx);
      return total / falling(idx.size(), 3);
    };
  }
  const Complex value = eval(identity_indices(M));
  const double err = bootstrap_error({M}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  return make_report(value, M, rho_set.shots_per_setting(), err, Protocol::OS);
}

EstimateReport estimate_fm_patched(std::span<const ShadowSet> sets, std::span<const Observable> boundary_ops,
                                   const EstimatorOptions& opt) {
  if (sets.empty() || sets.size() != boundary_ops.size())
    throw std::invalid_argument("estimate_fm_patched: need one boundary op per set");
  std::vector<std::vector<ComplexMatrix>> means;
  std::vector<std::size_t> sizes;
  for (const auto& s : sets) {
    require_nonempty(s, 1, "estimate_fm_patched");
    means.push_back(s.setting_means());
    sizes.push_back(means.back().size());
  }
  for (std::size_t l = 0; l < sets.size(); ++l) {
    require_dim(means[l].front(), means[0].front(), "estimate_fm_patched");
    require_dim(boundary_ops[l].embedded(), means[0].front(), "estimate_fm_patched");
  }
  auto eval = [&](const std::vector<IndexList>& lists) {
    ComplexMatrix acc;
    for (std::size_t l = 0; l < means.size(); ++l) {
      const ComplexMatrix bar = sum_of(means[l], lists[l]) / static_cast<double>(lists[l].size());
      acc = l == 0 ? ComplexMatrix(bar * boundary_ops[l].embedded())
                   : ComplexMatrix((acc * bar) * boundary_ops[l].embedded());
    }
    return acc.trace();
  };
  std::vector<IndexList> all;
  for (std::size_t m : sizes) all.push_back(identity_indices(m));
  const Complex value = eval(all);
  const double err = bootstrap_error(sizes, opt, eval);
  return make_report(value, sizes.front(), sets.front().shots_per_setting(), err, Protocol::HS);
}

double kernel_value(const EnsembleKind& kind, const BitString& b, const BitString& b2) {
  if (b.length() != b2.length()) throw std::invalid_argument("kernel_value: length mismatch");
  if (kind.tag == EnsembleTag::GlobalClifford)
    return b == b2 ? static_cast<double>(dim_of(b.length())) : -1.0;
  const int h = std::popcount(b.index() ^ b2.index());
  const double mag = std::ldexp(1.0, b.length() - h);
  return (h & 1) ? -mag : mag;
}

namespace {

using ShotWeight = std::function<Complex(const Shot&)>;

Complex control_sign(const Shot& s) {
  if (!s.bc) throw std::invalid_argument("kernel estimator: shot has no control outcome");
  return {*s.bc ? -1.0 : 1.0, 0.0};
}

const BitString& kernel_register(const Shot& s) { return s.b; }

void require_kernel_data(const Dataset& data, const EnsembleKind& kind, std::size_t min_k, const char* who) {
  if (data.settings.empty()) throw std::invalid_argument(std::string(who) + ": empty dataset");
  if (!(data.kind == kind)) throw std::invalid_argument(std::string(who) + ": ensemble kind mismatch");
  for (const auto& s : data.settings)
    if (s.shots.size() < min_k) throw std::invalid_argument(std::string(who) + ": need K >= 2 shots per setting");
}

// h_i = Σ_{j≠j'} w(j) v(j') X(b_j, b_j') / (K(K-1)); estimate = scale · mean_i h_i.
EstimateReport within_setting_kernel(const Dataset& data, const EnsembleKind& kind, const ShotWeight& w,
                                     const ShotWeight& v, double scale, const EstimatorOptions& opt,
                                     const char* who) {
  require_kernel_data(data, kind, 2, who);
  std::vector<Complex> h;
  h.reserve(data.settings.size());
  for (const auto& s : data.settings) {
    const std::size_t K = s.shots.size();
    std::vector<Complex> wj, vj;
    for (const auto& shot : s.shots) {
      wj.push_back(w(shot));
      vj.push_back(v(shot));
    }
    CompensatedSum acc;
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t jp = 0; jp < K; ++jp)
        if (j != jp)
          acc.add(wj[j] * vj[jp] * kernel_value(kind, kernel_register(s.shots[j]), kernel_register(s.shots[jp])));
    h.push_back(scale * acc.value() / (static_cast<double>(K) * static_cast<double>(K - 1)));
  }
  auto eval = [&](const IndexList& idx) { return sum_of(h, idx) / static_cast<double>(idx.size()); };
  const Complex value = eval(identity_indices(h.size()));
  const double err = bootstrap_error({h.size()}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  return make_report(value, h.size(), data.shots_per_setting(), err, Protocol::HR);
}

void require_two_copy_control(const Dataset& data, const char* who) {
  const bool ok = data.t == 2 && (data.family == CircuitFamily::HybridMoment ||
                                  data.family == CircuitFamily::ControlledVO ||
                                  data.family == CircuitFamily::SpectralO || data.family == CircuitFamily::HybridSigma);
  if (!ok) throw std::invalid_argument(std::string(who) + ": needs a two-copy controlled dataset");
}

Complex unit(const Shot&) { return {1.0, 0.0}; }

}  // namespace

EstimateReport estimate_p3_hr(const Dataset& data, const EnsembleKind& kind, const EstimatorOptions& opt) {
  require_two_copy_control(data, "estimate_p3_hr");
  return within_setting_kernel(data, kind, control_sign, unit, 1.0, opt, "estimate_p3_hr");
}

EstimateReport estimate_p4_hr(const Dataset& data, const EnsembleKind& kind, const EstimatorOptions& opt) {
  require_two_copy_control(data, "estimate_p4_hr");
  return within_setting_kernel(data, kind, control_sign, control_sign, 1.0, opt, "estimate_p4_hr");
}

EstimateReport estimate_o3_hr(const Dataset& data, const EnsembleKind& kind, const Observable& op,
                              const EstimatorOptions& opt) {
  require_two_copy_control(data, "estimate_o3_hr");
  if (data.family == CircuitFamily::HybridSigma) {
    if (!op.is_unitary() || !op.is_hermitian())
      throw std::invalid_argument("estimate_o3_hr: HybridSigma data needs a unitary Hermitian observable");
    auto w = [](const Shot& s) { return snapshot_weight(SnapshotTarget::Sigma, s); };
    return within_setting_kernel(data, kind, w, unit, 1.0, opt, "estimate_o3_hr");
  }
  const double norm = vo_decomposition(op).norm;
  return within_setting_kernel(data, kind, control_sign, unit, norm, opt, "estimate_o3_hr");
}

EstimateReport estimate_o4_hr(const Dataset& vo_data, const Dataset& moment_data, const EnsembleKind& kind,
                              const Observable& op, const EstimatorOptions& opt) {
  require_two_copy_control(vo_data, "estimate_o4_hr");
  require_two_copy_control(moment_data, "estimate_o4_hr");
  require_kernel_data(vo_data, kind, 1, "estimate_o4_hr");
  require_kernel_data(moment_data, kind, 1, "estimate_o4_hr");
  if (vo_data.settings.size() != moment_data.settings.size())
    throw std::invalid_argument("estimate_o4_hr: datasets are not aligned per setting");
  for (std::size_t i = 0; i < vo_data.settings.size(); ++i)
    if (vo_data.settings[i].unitary.descriptor() != moment_data.settings[i].unitary.descriptor())
      throw std::invalid_argument("estimate_o4_hr: datasets are not aligned per setting");
  const double norm = vo_decomposition(op).norm;
  std::vector<Complex> h;
  for (std::size_t i = 0; i < vo_data.settings.size(); ++i) {
    const auto& a = vo_data.settings[i].shots;
    const auto& b = moment_data.settings[i].shots;
    CompensatedSum acc;
    for (const auto& x : a)
      for (const auto& y : b) acc.add(control_sign(x) * control_sign(y) * kernel_value(kind, x.b, y.b));
    h.push_back(norm * acc.value() / (static_cast<double>(a.size()) * static_cast<double>(b.size())));
  }
  auto eval = [&](const IndexList& idx) { return sum_of(h, idx) / static_cast<double>(idx.size()); };
  const Complex value = eval(identity_indices(h.size()));
  const double err = bootstrap_error({h.size()}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  return make_report(value, h.size(), vo_data.shots_per_setting(), err, Protocol::HR);
}

namespace {

ShotWeight spectral_weight(std::span<const double> lambda, std::size_t d) {
  if (lambda.size() != d) throw std::invalid_argument("spectral estimator: need one eigenvalue per basis state");
  std::vector<double> lam(lambda.begin(), lambda.end());
  return [lam](const Shot& s) {
    if (!s.b1) throw std::invalid_argument("spectral estimator: shot has no first-copy outcome");
    return control_sign(s) * lam[static_cast<std::size_t>(s.b1->index())];
  };
}

}  // namespace

EstimateReport estimate_o3_spectral(const Dataset& data, const EnsembleKind& kind, std::span<const double> lambda,
                                    const EstimatorOptions& opt) {
  if (data.family != CircuitFamily::SpectralO) throw std::invalid_argument("estimate_o3_spectral: needs SpectralO data");
  return within_setting_kernel(data, kind, spectral_weight(lambda, dim_of(kind.n_qubits)), unit, 1.0, opt,
                               "estimate_o3_spectral");
}

EstimateReport estimate_o4_spectral(const Dataset& data, const EnsembleKind& kind, std::span<const double> lambda,
                                    const EstimatorOptions& opt) {
  if (data.family != CircuitFamily::SpectralO) throw std::invalid_argument("estimate_o4_spectral: needs SpectralO data");
  return within_setting_kernel(data, kind, spectral_weight(lambda, dim_of(kind.n_qubits)), control_sign, 1.0, opt,
                               "estimate_o4_spectral");
}

EstimateReport swap_test_statistic(const Dataset& data, const EstimatorOptions& opt) {
  if (data.settings.empty()) throw std::invalid_argument("swap_test_statistic: empty dataset");
  std::vector<Complex> h;
  for (const auto& s : data.settings) {
    CompensatedSum acc;
    for (const auto& shot : s.shots) acc.add(control_sign(shot));
    h.push_back(acc.value() / static_cast<double>(s.shots.size()));
  }
  auto eval = [&](const IndexList& idx) { return sum_of(h, idx) / static_cast<double>(idx.size()); };
  const Complex value = eval(identity_indices(h.size()));
  const double err = bootstrap_error({h.size()}, opt, [&](const std::vector<IndexList>& l) { return eval(l[0]); });
  return make_report(value, h.size(), data.shots_per_setting(), err, Protocol::SwapTest);
}

VODecomposition vo_decomposition(const Observable& op) {
  if (!op.is_hermitian()) throw std::invalid_argument("vo_decomposition: observable must be Hermitian");
  if (op.is_unitary()) return {1.0, op.embedded()};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(op.embedded());
  const RealVector lam = solver.eigenvalues();
  const double norm = lam.cwiseAbs().maxCoeff();
  if (norm <= 0.0) throw std::invalid_argument("vo_decomposition: observable is zero");
  ComplexVector phases(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    phases(k) = std::polar(1.0, std::acos(std::clamp(lam(k) / norm, -1.0, 1.0)));
  const ComplexMatrix& w = solver.eigenvectors();
  return {norm, w * phases.asDiagonal() * w.adjoint()};
}

SpectralDecomposition spectral_decomposition(const Observable& op) {
  if (!op.is_hermitian()) throw std::invalid_argument("spectral_decomposition: observable must be Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(op.embedded());
  SpectralDecomposition out;
  out.v = solver.eigenvectors();
  out.lambda.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  return out;
}

}  // namespace hyshadow
