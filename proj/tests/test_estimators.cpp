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


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hyshadow/estimators.hpp"
#include "test_support.hpp"

using namespace hyshadow;
using hyshadow::testing::max_abs;
using hyshadow::testing::random_state;

namespace {

const EnsembleKind kLocal1{EnsembleTag::LocalClifford, 1};
const EnsembleKind kLocal2{EnsembleTag::LocalClifford, 2};
const EnsembleKind kGlobal2{EnsembleTag::GlobalClifford, 2};

// Oracle values for noisy GHZ, n = 2, q = 0.8 (spectrum 0.85, 0.05 ×3).
constexpr double kP3 = 0.6145;
constexpr double kP4 = 0.522025;

EstimatorOptions boot(std::uint64_t seed = 1) { return {200, seed}; }
EstimatorOptions no_boot() { return {0, 0}; }

void check_within(const EstimateReport& r, double target, double k = 5.0) {
  INFO("estimate " << r.real() << " target " << target << " std_error " << r.std_error);
  REQUIRE(std::isfinite(r.std_error));
  CHECK(r.std_error > 0.0);
  CHECK(std::abs(r.real() - target) <= k * r.std_error);
}

Dataset moment_data(const DensityMatrix& rho, const EnsembleKind& kind, int M, int K, std::uint64_t seed, int t = 2) {
  return sample_dataset(CircuitSpec::hybrid_moment(rho, t), kind, M, K, seed);
}

Dataset flip_controls(Dataset data) {
  for (auto& s : data.settings)
    for (auto& shot : s.shots) shot.bc = 1 - *shot.bc;
  return data;
}

Dataset shuffle_shots(Dataset data, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (auto& s : data.settings) std::shuffle(s.shots.begin(), s.shots.end(), gen);
  return data;
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(kernel_value(kLocal2, BitString::parse("01"), BitString::parse("01")) == 4.0);
  CHECK(kernel_value(kLocal2, BitString::parse("01"), BitString::parse("00")) == -2.0);
  CHECK(kernel_value(kLocal2, BitString::parse("01"), BitString::parse("10")) == 1.0);
  CHECK(kernel_value(kGlobal2, BitString::parse("11"), BitString::parse("11")) == 4.0);
  CHECK(kernel_value(kGlobal2, BitString::parse("11"), BitString::parse("01")) == -1.0);
  for (std::uint64_t a = 0; a < 2; ++a)
    for (std::uint64_t b = 0; b < 2; ++b)
      CHECK(kernel_value(kLocal1, BitString(a, 1), BitString(b, 1)) ==
            kernel_value({EnsembleTag::GlobalClifford, 1}, BitString(a, 1), BitString(b, 1)));
  CHECK_THROWS_AS(kernel_value(kLocal2, BitString(0, 2), BitString(0, 1)), std::invalid_argument);
}

TEST_CASE("snapshot weights and traces") {
  SnapshotRecord rec;
  rec.family = CircuitFamily::PlainRM;
  rec.ensemble = EnsembleTag::LocalClifford;
  rec.descriptor = "L:0";
  rec.b = BitString(0, 1);
  const ShadowSnapshot s = snapshot_rho(rec, kLocal1);
  CHECK(s.weight == Complex(1.0));
  CHECK(max_abs(s.materialize() - (ComplexMatrix(2, 2) << 2, 0, 0, -1).finished()) < 1e-15);
  CHECK_THROWS_AS(snapshot_rho_pow_t(rec, kLocal1), std::invalid_argument);
  CHECK_THROWS_AS(snapshot_rho(rec, kLocal2), std::invalid_argument);
  rec.bc = 1;
  CHECK(snapshot_rho_pow_t(rec, kLocal1).weight == Complex(-1.0));
  CHECK(max_abs(snapshot_rho_pow_t(rec, kLocal1).materialize() + s.materialize()) < 1e-15);
  CHECK_THROWS_AS(snapshot_sigma(rec, kLocal1), std::invalid_argument);
  rec.c = ControlBasis::Y;
  CHECK(std::abs(snapshot_sigma(rec, kLocal1).weight - Complex(0.0, 2.0)) < 1e-15);
  rec.bc = 0;
  rec.c = ControlBasis::X;
  CHECK(snapshot_sigma(rec, kLocal1).weight == Complex(2.0));

  const int n = 2;
  const auto spec = CircuitSpec::hybrid_sigma({random_state(n, 1), random_state(n, 2)},
                                              {Observable::pauli("XY", {0, 1}, n)});
  for (const auto kind : {kLocal2, kGlobal2}) {
    const Dataset data = sample_dataset(spec, kind, 20, 4, 9);
    for (const auto target : {SnapshotTarget::Rho, SnapshotTarget::RhoPowT, SnapshotTarget::Sigma}) {
      const ShadowSet set = ShadowSet::from_dataset(data, target);
      CHECK(set.num_settings() == 20);
      CHECK(set.shots_per_setting() == 4);
      for (std::size_t i = 0; i < set.num_settings(); ++i)
        for (const auto& snap : set.setting(i)) {
          CHECK(std::abs(snap.materialize().trace() - snap.weight) < 1e-10);
          if (target != SnapshotTarget::Sigma) CHECK(std::abs(std::abs(snap.weight.real()) - 1.0) == 0.0);
        }
    }
  }
}

TEST_CASE("estimators reject malformed inputs") {
  const DensityMatrix rho = random_state(1, 3);
  const Dataset moment = moment_data(rho, kLocal1, 3, 1, 1);
  const Dataset plain = sample_dataset(CircuitSpec::plain_rm(rho), kLocal1, 3, 2, 1);
  CHECK_THROWS_AS(estimate_p3_hr(moment, kLocal1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_p3_hr(plain, kLocal1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_p3_hr(moment_data(rho, kLocal1, 3, 2, 1), {EnsembleTag::GlobalClifford, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_pm_os(ShadowSet::rho(plain), 4), std::invalid_argument);
  CHECK_THROWS_AS(estimate_pm_os(ShadowSet::rho(plain), 0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_p4_hs(ShadowSet::rho_pow_t(moment_data(rho, kLocal1, 1, 1, 1))), std::invalid_argument);
  CHECK_THROWS_AS(estimate_p4_hs(ShadowSet::rho(plain)), std::invalid_argument);
  CHECK_THROWS_AS(estimate_p3_hs(ShadowSet::rho(plain), ShadowSet::rho(plain)), std::invalid_argument);
  CHECK_THROWS_AS(estimate_ot_hs(ShadowSet::rho_pow_t(moment), Observable::pauli("Z", {0}, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_om_os(ShadowSet::rho(plain), Observable::pauli("Z", {0}, 1), 4), std::invalid_argument);
  CHECK_THROWS_AS(estimate_o3_spectral(moment_data(rho, kLocal1, 3, 2, 1), kLocal1, std::vector<double>{1.0, 1.0}),
                  std::invalid_argument);
  const auto sp = CircuitSpec::spectral_o(rho, ComplexMatrix::Identity(2, 2), {1.0, -1.0});
  CHECK_THROWS_AS(estimate_o3_spectral(sample_dataset(sp, kLocal1, 3, 2, 1), kLocal1, std::vector<double>{1.0}),
                  std::invalid_argument);
  const std::vector<ShadowSet> sets{ShadowSet::rho(plain)};
  CHECK_THROWS_AS(estimate_fm_patched(sets, std::vector<Observable>{}), std::invalid_argument);

  const Dataset a = sample_dataset(CircuitSpec::controlled_vo(rho, pauli_matrix('Z')), kLocal1, 4, 2, 1);
  const Dataset b = moment_data(rho, kLocal1, 4, 2, 2);
  CHECK_THROWS_AS(estimate_o4_hr(a, b, kLocal1, Observable::pauli("Z", {0}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(estimate_o4_hr(a, moment_data(rho, kLocal1, 3, 2, 2), kLocal1, Observable::pauli("Z", {0}, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(vo_decomposition(Observable(ComplexMatrix::Zero(2, 2), {0}, 1)), std::invalid_argument);
  ComplexMatrix nh = ComplexMatrix::Zero(2, 2);
  nh(0, 1) = 1.0;
  CHECK_THROWS_AS(vo_decomposition(Observable(nh, {0}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(spectral_decomposition(Observable(nh, {0}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(parse_protocol("XX"), std::invalid_argument);
  CHECK(parse_protocol("HR") == Protocol::HR);
}

TEST_CASE("reports carry sizes, protocol and bootstrap error") {
  const DensityMatrix rho = noisy_ghz(2, 0.8);
  const Dataset data = moment_data(rho, kLocal2, 30, 4, 3);
  const EstimateReport hr = estimate_p3_hr(data, kLocal2, boot());
  CHECK(hr.M == 30);
  CHECK(hr.K == 4);
  CHECK(hr.protocol == Protocol::HR);
  CHECK(hr.std_error > 0.0);
  CHECK(std::isnan(estimate_p3_hr(data, kLocal2, no_boot()).std_error));
  CHECK(estimate_p3_hr(data, kLocal2, boot()).std_error == hr.std_error);
  CHECK(estimate_p4_hs(ShadowSet::rho_pow_t(data)).protocol == Protocol::HS);
  CHECK(estimate_pm_os(ShadowSet::rho(data), 2).protocol == Protocol::OS);
  CHECK(swap_test_statistic(data).protocol == Protocol::SwapTest);
}

TEST_CASE("vo and spectral decompositions reconstruct the observable") {
  const Observable op(random_state(2, 4).matrix() * 3.0 - ComplexMatrix::Identity(4, 4) * 0.4, {0, 1}, 2);
  const VODecomposition vo = vo_decomposition(op);
  CHECK(is_unitary(vo.v));
  CHECK(max_abs(0.5 * vo.norm * (vo.v + vo.v.adjoint()) - op.embedded()) < 1e-12);
  const SpectralDecomposition sd = spectral_decomposition(op);
  CHECK(is_unitary(sd.v));
  RealVector lam = Eigen::Map<const RealVector>(sd.lambda.data(), static_cast<Eigen::Index>(sd.lambda.size()));
  CHECK(max_abs(sd.v * lam.cast<Complex>().asDiagonal() * sd.v.adjoint() - op.embedded()) < 1e-12);
  const Observable z = Observable::pauli("Z", {0}, 1);
  CHECK(vo_decomposition(z).norm == 1.0);
  CHECK(max_abs(vo_decomposition(z).v - z.embedded()) == 0.0);
}

TEST_CASE("flipping every control outcome negates single-sign estimators exactly") {
  const DensityMatrix rho = random_state(2, 5);
  const Dataset data = moment_data(rho, kLocal2, 40, 5, 11);
  const Dataset flipped = flip_controls(data);
  CHECK(estimate_p3_hr(flipped, kLocal2, no_boot()).value == -estimate_p3_hr(data, kLocal2, no_boot()).value);
  CHECK(estimate_p4_hr(flipped, kLocal2, no_boot()).value == estimate_p4_hr(data, kLocal2, no_boot()).value);
  CHECK(swap_test_statistic(flipped, no_boot()).value == -swap_test_statistic(data, no_boot()).value);
  const ShadowSet set1 = ShadowSet::rho(sample_dataset(CircuitSpec::plain_rm(rho), kLocal2, 40, 1, 12));
  CHECK(estimate_p3_hs(ShadowSet::rho_pow_t(flipped), set1, PairingMode::TwoDatasets, no_boot()).value ==
        -estimate_p3_hs(ShadowSet::rho_pow_t(data), set1, PairingMode::TwoDatasets, no_boot()).value);
  const Observable z = Observable::pauli("Z", {1}, 2);
  CHECK(estimate_ot_hs(ShadowSet::rho_pow_t(flipped), z, no_boot()).value ==
        -estimate_ot_hs(ShadowSet::rho_pow_t(data), z, no_boot()).value);
  // Snapshots of ρ ignore the control entirely.
  CHECK(estimate_pm_os(ShadowSet::rho(flipped), 2, no_boot()).value ==
        estimate_pm_os(ShadowSet::rho(data), 2, no_boot()).value);
}

TEST_CASE("kernel estimators are invariant under relabeling shots within a setting") {
  const DensityMatrix rho = random_state(2, 6);
  const Dataset data = moment_data(rho, kGlobal2, 30, 6, 13);
  const Dataset perm = shuffle_shots(data, 1);
  CHECK(std::abs(estimate_p3_hr(perm, kGlobal2, no_boot()).value - estimate_p3_hr(data, kGlobal2, no_boot()).value) <
        1e-13);
  CHECK(std::abs(estimate_p4_hr(perm, kGlobal2, no_boot()).value - estimate_p4_hr(data, kGlobal2, no_boot()).value) <
        1e-13);
  const auto sp = spectral_decomposition(Observable::pauli("ZX", {0, 1}, 2));
  const Dataset spec_data =
      sample_dataset(CircuitSpec::spectral_o(rho, sp.v, sp.lambda), kLocal2, 30, 6, 14);
  const Dataset spec_perm = shuffle_shots(spec_data, 2);
  CHECK(std::abs(estimate_o3_spectral(spec_perm, kLocal2, sp.lambda, no_boot()).value -
                 estimate_o3_spectral(spec_data, kLocal2, sp.lambda, no_boot()).value) < 1e-13);
  CHECK(std::abs(estimate_o4_spectral(spec_perm, kLocal2, sp.lambda, no_boot()).value -
                 estimate_o4_spectral(spec_data, kLocal2, sp.lambda, no_boot()).value) < 1e-13);
}

TEST_CASE("identity observable reduces to the moment estimators") {
  const int n = 2;
  const DensityMatrix rho = random_state(n, 7);
  const Observable id = Observable::pauli("II", {0, 1}, n);
  const Dataset data = moment_data(rho, kLocal2, 50, 4, 15);
  const ShadowSet set2 = ShadowSet::rho_pow_t(data);
  const ShadowSet set1 = ShadowSet::rho(sample_dataset(CircuitSpec::plain_rm(rho), kLocal2, 50, 2, 16));

  CHECK(estimate_o3_hr(data, kLocal2, id, no_boot()).value == estimate_p3_hr(data, kLocal2, no_boot()).value);
  const std::vector<double> ones(4, 1.0);
  const Dataset spectral_id =
      sample_dataset(CircuitSpec::spectral_o(rho, ComplexMatrix::Identity(4, 4), ones), kLocal2, 50, 4, 15);
  CHECK(estimate_o3_spectral(spectral_id, kLocal2, ones, no_boot()).value ==
        estimate_p3_hr(spectral_id, kLocal2, no_boot()).value);
  CHECK(estimate_o4_spectral(spectral_id, kLocal2, ones, no_boot()).value ==
        estimate_p4_hr(spectral_id, kLocal2, no_boot()).value);
  CHECK(std::abs(estimate_ot_hs(set2, id, no_boot()).value - swap_test_statistic(data, no_boot()).value) < 1e-12);
  CHECK(std::abs(estimate_o3_hs(set2, set1, id, no_boot()).value -
                 estimate_p3_hs(set2, set1, PairingMode::TwoDatasets, no_boot()).value) < 1e-12);
  CHECK(std::abs(estimate_o4_hs(set2, id, no_boot()).value - estimate_p4_hs(set2, no_boot()).value) < 1e-12);
  CHECK(std::abs(estimate_om_os(set1, id, 3, no_boot()).value - estimate_pm_os(set1, 3, no_boot()).value) < 1e-12);
  CHECK(std::abs(estimate_om_os(set1, id, 2, no_boot()).value - estimate_pm_os(set1, 2, no_boot()).value) < 1e-12);
  CHECK(std::abs(estimate_pm_os(set1, 1, no_boot()).value - 1.0) < 1e-12);

  // Patched F with identity boundaries and degrees (2, 1) is the P3 estimate.
  const std::vector<ShadowSet> sets{set2, set1};
  const std::vector<Observable> ops{id, id};
  CHECK(std::abs(estimate_fm_patched(sets, ops, no_boot()).value -
                 estimate_p3_hs(set2, set1, PairingMode::TwoDatasets, no_boot()).value) < 1e-12);
}

TEST_CASE("moment estimators on noisy GHZ (n = 2) agree with the oracle") {
  const int n = 2;
  const DensityMatrix rho = noisy_ghz(n, 0.8);
  REQUIRE(exact_moment(rho, 3) == doctest::Approx(kP3).epsilon(1e-14));
  REQUIRE(exact_moment(rho, 4) == doctest::Approx(kP4).epsilon(1e-14));

  const Dataset d2 = moment_data(rho, kLocal2, 10000, 1, 101);
  const Dataset d1 = sample_dataset(CircuitSpec::plain_rm(rho), kLocal2, 10000, 1, 102);
  const ShadowSet set2 = ShadowSet::rho_pow_t(d2);
  const ShadowSet set1 = ShadowSet::rho(d1);
  check_within(estimate_pm_os(set1, 3, boot()), kP3);
  check_within(estimate_p3_hs(set2, set1, PairingMode::TwoDatasets, boot()), kP3);
  check_within(estimate_p3_hs(set2, ShadowSet::rho(d2), PairingMode::SingleDataset, boot()), kP3);
  check_within(estimate_p4_hs(set2, boot()), kP4);
  check_within(estimate_p3_hr(moment_data(rho, kLocal2, 1000, 20, 103), kLocal2, boot()), kP3);
  check_within(estimate_p4_hr(moment_data(rho, kGlobal2, 1000, 20, 104), kGlobal2, boot()), kP4);
  check_within(swap_test_statistic(moment_data(rho, kLocal2, 1000, 20, 105, 3), boot()), kP3);
}

TEST_CASE("maximally mixed and pure states") {
  const DensityMatrix mixed1(ComplexMatrix::Identity(2, 2) * 0.5);
  check_within(estimate_p4_hr(moment_data(mixed1, kLocal1, 2000, 4, 21), kLocal1, boot()), 0.125);
  const DensityMatrix mixed2(ComplexMatrix::Identity(4, 4) * 0.25);
  check_within(estimate_p4_hs(ShadowSet::rho_pow_t(moment_data(mixed2, kGlobal2, 4000, 1, 22)), boot()), 1.0 / 64.0);

  // Noiseless GHZ: Z1Z2 is a stabilizer.
  const DensityMatrix ghz = ghz_state(2);
  const Observable zz = Observable::pauli("ZZ", {0, 1}, 2);
  const ShadowSet g2 = ShadowSet::rho_pow_t(moment_data(ghz, kLocal2, 4000, 1, 23));
  const ShadowSet g1 = ShadowSet::rho(sample_dataset(CircuitSpec::plain_rm(ghz), kLocal2, 4000, 1, 24));
  check_within(estimate_ot_hs(g2, zz, boot()), 1.0);
  check_within(estimate_o3_hs(g2, g1, zz, boot()), 1.0);
  check_within(estimate_p4_hs(g2, boot()), 1.0);
  check_within(estimate_pm_os(g1, 3, boot()), 1.0);
  check_within(estimate_p3_hr(moment_data(ghz, kGlobal2, 500, 10, 25), kGlobal2, boot()), 1.0);
}

TEST_CASE("observable estimators agree with the dense oracle") {
  const DensityMatrix rho = random_state(2, 8);
  const Observable unit = Observable::pauli("ZX", {0, 1}, 2);
  const Observable general(random_state(2, 9).matrix() * 2.0 - ComplexMatrix::Identity(4, 4) * 0.3, {0, 1}, 2);
  for (const Observable* op : {&unit, &general}) {
    const double o2 = exact_obs_moment(rho, *op, 2), o3 = exact_obs_moment(rho, *op, 3),
                 o4 = exact_obs_moment(rho, *op, 4);
    const ShadowSet set2 = ShadowSet::rho_pow_t(moment_data(rho, kLocal2, 8000, 1, 31));
    const ShadowSet set1 = ShadowSet::rho(sample_dataset(CircuitSpec::plain_rm(rho), kLocal2, 8000, 1, 32));
    check_within(estimate_ot_hs(set2, *op, boot()), o2);
    check_within(estimate_o3_hs(set2, set1, *op, boot()), o3);
    check_within(estimate_o4_hs(set2, *op, boot()), o4);
    check_within(estimate_om_os(set1, *op, 2, boot()), o2);
    check_within(estimate_om_os(set1, *op, 3, boot()), o3);

    const VODecomposition vo = vo_decomposition(*op);
    const Dataset vo_data = sample_dataset(CircuitSpec::controlled_vo(rho, vo.v), kGlobal2, 1000, 10, 33);
    check_within(estimate_o3_hr(vo_data, kGlobal2, *op, boot()), o3);
    std::vector<SampledUnitary> us;
    for (const auto& s : vo_data.settings) us.push_back(s.unitary);
    const Dataset paired = sample_dataset_with_unitaries(CircuitSpec::hybrid_moment(rho, 2), us, 10, 34);
    check_within(estimate_o4_hr(vo_data, paired, kGlobal2, *op, boot()), o4);

    const SpectralDecomposition sd = spectral_decomposition(*op);
    const Dataset sp = sample_dataset(CircuitSpec::spectral_o(rho, sd.v, sd.lambda), kLocal2, 1000, 10, 35);
    check_within(estimate_o3_spectral(sp, kLocal2, sd.lambda, boot()), o3);
    check_within(estimate_o4_spectral(sp, kLocal2, sd.lambda, boot()), o4);
  }
  const Dataset sigma = sample_dataset(CircuitSpec::hybrid_sigma({rho, rho}, {unit}), kLocal2, 1000, 10, 36);
  check_within(estimate_o3_hr(sigma, kLocal2, unit, boot()), exact_obs_moment(rho, unit, 3));
  CHECK_THROWS_AS(estimate_o3_hr(sigma, kLocal2, general), std::invalid_argument);
}

TEST_CASE("single-qubit spectral estimator with a non-unitary observable") {
  const DensityMatrix rho = random_state(1, 10);
  const Observable op((ComplexMatrix(2, 2) << 0.3, 0, 0, -1.7).finished(), {0}, 1);
  const std::vector<double> lambda{0.3, -1.7};
  const Dataset data =
      sample_dataset(CircuitSpec::spectral_o(rho, ComplexMatrix::Identity(2, 2), lambda), kLocal1, 4000, 8, 41);
  check_within(estimate_o3_spectral(data, kLocal1, lambda, boot()), exact_obs_moment(rho, op, 3));
}

TEST_CASE("patched general function estimator is complex-unbiased") {
  const DensityMatrix rho = random_state(1, 11);
  const Observable z = Observable::pauli("Z", {0}, 1), id = Observable::pauli("I", {0}, 1);
  const Dataset sig = sample_dataset(CircuitSpec::hybrid_sigma({rho, rho}, {z}), kLocal1, 20000, 1, 51);
  const Dataset one = sample_dataset(CircuitSpec::plain_rm(rho), kLocal1, 20000, 1, 52);
  const std::vector<ShadowSet> sets{ShadowSet::sigma(sig), ShadowSet::rho(one)};
  const std::vector<Observable> ops{id, z};
  // tr(σ₁ I σ₂ Z) with σ₁ = ρZρ, σ₂ = ρ.
  const ComplexMatrix& r = rho.matrix();
  const Complex exact = (r * z.embedded() * r * r * z.embedded()).trace();
  const EstimateReport rep = estimate_fm_patched(sets, ops, boot());
  check_within(rep, exact.real());
  CHECK(std::abs(rep.value.imag() - exact.imag()) < 0.05);

  // One set of single-copy snapshots: tr(ρ̂ Z) → tr(Zρ).
  const std::vector<ShadowSet> single{ShadowSet::rho(one)};
  const std::vector<Observable> zop{z};
  check_within(estimate_fm_patched(single, zop, boot()), (r * z.embedded()).trace().real());
}
