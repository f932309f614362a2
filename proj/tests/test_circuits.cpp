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
#include <random>
#include <sstream>

#include "hyshadow/circuits.hpp"
#include "test_support.hpp"

using namespace hyshadow;
using hyshadow::testing::chi_square;
using hyshadow::testing::chi_square_critical;
using hyshadow::testing::max_abs;
using hyshadow::testing::random_state;
using hyshadow::testing::random_unitary;

namespace {

SampledUnitary draw(const EnsembleKind& kind, std::uint64_t salt) {
  CounterRng rng(0xC1C, salt, 0, StreamTag::Unitary);
  return sample_unitary(kind, rng);
}

double max_diff(const OutcomeDistribution& a, const OutcomeDistribution& b) {
  REQUIRE(a.size() == b.size());
  return (a.probs() - b.probs()).cwiseAbs().maxCoeff();
}

DensityMatrix pure(const ComplexVector& psi) { return DensityMatrix(psi * psi.adjoint()); }

std::string dump(const Dataset& data) {
  std::ostringstream out;
  write_records(out, to_records(data));
  return out.str();
}

}  // namespace

TEST_CASE("hybrid moment examples") {
  const EnsembleKind local1{EnsembleTag::LocalClifford, 1};
  const DensityMatrix mixed(ComplexMatrix::Identity(2, 2) * 0.5);
  for (std::uint64_t s = 0; s < 6; ++s) {
    const OutcomeDistribution dist = hybrid_moment_distribution(mixed, 2, draw(local1, s));
    for (std::uint64_t b = 0; b < 2; ++b) {
      CHECK(dist.prob(0, 0, b) == doctest::Approx(0.375).epsilon(1e-14));
      CHECK(dist.prob(1, 0, b) == doctest::Approx(0.125).epsilon(1e-14));
    }
  }

  ComplexVector zero = ComplexVector::Zero(4);
  zero(0) = 1.0;
  const EnsembleKind local2{EnsembleTag::LocalClifford, 2};
  const OutcomeDistribution dist = hybrid_moment_distribution(pure(zero), 2, SampledUnitary::identity(local2));
  CHECK(dist.prob(0, 0, 0) == doctest::Approx(1.0));
  CHECK(dist.probs().sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(dist.probs().cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("every distribution is normalized and nonnegative with correct marginals") {
  for (int n = 1; n <= 3; ++n) {
    for (const auto tag : {EnsembleTag::LocalClifford, EnsembleTag::GlobalClifford}) {
      const EnsembleKind kind{tag, n};
      for (std::uint64_t s = 0; s < 4; ++s) {
        const DensityMatrix rho = random_state(n, 100 + s);
        const DensityMatrix rho_b = random_state(n, 200 + s);
        const SampledUnitary u = draw(kind, s);
        const RealVector plain = plain_rm_distribution(rho, u).probs();
        const Observable z = Observable::pauli("Z", {0}, n);
        const Observable x = Observable::pauli("X", {n - 1}, n);
        const ComplexMatrix v = random_unitary(n, s);

        std::vector<OutcomeDistribution> dists;
        for (int t = 1; t <= 4; ++t) {
          const OutcomeDistribution d = hybrid_moment_distribution(rho, t, u);
          CHECK(d.signed_control_sum() == doctest::Approx(exact_moment(rho, t)).epsilon(1e-12));
          dists.push_back(d);
        }
        dists.push_back(controlled_vo_distribution(rho, v, u));
        dists.push_back(spectral_o_distribution(rho, v, u));
        for (const auto basis : {ControlBasis::X, ControlBasis::Y}) {
          const auto spec = CircuitSpec::hybrid_sigma({rho, rho_b, rho}, {z, x});
          const OutcomeDistribution d = hybrid_sigma_distribution(spec, u, basis);
          CHECK(max_abs(d.marginal_b() - plain) < 1e-12);
          dists.push_back(d);
          const auto spec2 = CircuitSpec::hybrid_sigma({rho_b, rho}, {z});
          const RealVector mix = plain_rm_distribution(
              DensityMatrix(0.5 * (rho.matrix() + rho_b.matrix())), u).probs();
          CHECK((hybrid_sigma_distribution(spec2, u, basis).marginal_b() - mix).cwiseAbs().maxCoeff() < 1e-12);
        }
        for (const auto& d : dists) {
          CHECK(d.probs().minCoeff() >= -1e-12);
          CHECK(std::abs(d.probs().sum() - 1.0) < 1e-9);
          CHECK((d.marginal_b() - plain).cwiseAbs().maxCoeff() < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("degeneracy chain") {
  const int n = 2;
  const EnsembleKind kind{EnsembleTag::GlobalClifford, n};
  const DensityMatrix rho = random_state(n, 7);
  const SampledUnitary u = draw(kind, 3);
  const Observable id = Observable::pauli("I", {0}, n);

  for (int t = 2; t <= 4; ++t) {
    const std::vector<DensityMatrix> states(static_cast<std::size_t>(t), rho);
    const std::vector<Observable> ops(static_cast<std::size_t>(t - 1), id);
    const auto spec = CircuitSpec::hybrid_sigma(states, ops);
    CHECK(max_diff(hybrid_sigma_distribution(spec, u, ControlBasis::X), hybrid_moment_distribution(rho, t, u)) <
          1e-13);
  }
  CHECK(max_diff(controlled_vo_distribution(rho, ComplexMatrix::Identity(4, 4), u),
                 hybrid_moment_distribution(rho, 2, u)) < 1e-13);

  const OutcomeDistribution t1 = hybrid_moment_distribution(rho, 1, u);
  for (std::uint64_t b = 0; b < 4; ++b) CHECK(std::abs(t1.prob(1, 0, b)) < 1e-15);
  CHECK(t1.signed_control_sum() == doctest::Approx(1.0));
}

TEST_CASE("swap test examples") {
  const DensityMatrix mixed(ComplexMatrix::Identity(2, 2) * 0.5);
  const std::vector<DensityMatrix> two{mixed, mixed};
  const OutcomeDistribution d = swap_test_distribution(two, {}, ControlBasis::X);
  CHECK(d.has_control());
  CHECK(d.signed_control_sum() == doctest::Approx(0.5).epsilon(1e-14));

  ComplexVector psi(2);
  psi << Complex(0.6, 0.0), Complex(0.0, 0.8);
  const std::vector<DensityMatrix> pure3(3, pure(psi));
  CHECK(swap_test_distribution(pure3, {}, ControlBasis::X).signed_control_sum() == doctest::Approx(1.0));

  for (int m = 2; m <= 4; ++m) {
    const DensityMatrix rho = random_state(2, 300 + static_cast<std::uint64_t>(m));
    const std::vector<DensityMatrix> states(static_cast<std::size_t>(m), rho);
    CHECK(swap_test_distribution(states, {}, ControlBasis::X).signed_control_sum() ==
          doctest::Approx(exact_moment(rho, m)).epsilon(1e-12));
  }

  // tr(ρ Z ρ Z) is real: the Y measurement is balanced.
  const DensityMatrix rho = random_state(1, 9);
  const Observable z = Observable::pauli("Z", {0}, 1);
  const std::vector<DensityMatrix> rr{rho, rho};
  const std::vector<Observable> zz{z, z};
  CHECK(std::abs(swap_test_distribution(rr, zz, ControlBasis::Y).signed_control_sum()) < 1e-14);

  // X and Y together reconstruct a complex F as E_X - i E_Y.
  const DensityMatrix r1 = random_state(1, 10), r2 = random_state(1, 11), r3 = random_state(1, 12);
  const Observable x = Observable::pauli("X", {0}, 1), y = Observable::pauli("Y", {0}, 1);
  const std::vector<DensityMatrix> rs{r1, r2, r3};
  const std::vector<Observable> ops{z, x, y};
  const std::vector<ComplexMatrix> op_mats{z.embedded(), x.embedded(), y.embedded()};
  const Complex f = exact_general_function(std::span<const DensityMatrix>(rs), op_mats);
  REQUIRE(std::abs(f.imag()) > 1e-3);
  CHECK(swap_test_distribution(rs, ops, ControlBasis::X).signed_control_sum() == doctest::Approx(f.real()));
  CHECK(swap_test_distribution(rs, ops, ControlBasis::Y).signed_control_sum() == doctest::Approx(-f.imag()));

  CHECK_THROWS_AS(swap_test_distribution(std::vector<DensityMatrix>{rho}, {}, ControlBasis::X),
                  std::invalid_argument);
  CHECK_THROWS_AS(swap_test_distribution(rr, std::vector<Observable>{z}, ControlBasis::X), std::invalid_argument);
}

TEST_CASE("hybrid sigma examples") {
  const int n = 2;
  const EnsembleKind kind{EnsembleTag::LocalClifford, n};
  const DensityMatrix rho = noisy_ghz(n, 0.8);
  const Observable zz = Observable::pauli("ZZ", {0, 1}, n);
  const auto spec = CircuitSpec::hybrid_sigma({rho, rho}, {zz});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SampledUnitary u = draw(kind, s);
    const OutcomeDistribution dy = hybrid_sigma_distribution(spec, u, ControlBasis::Y);
    for (std::uint64_t b = 0; b < 4; ++b) CHECK(std::abs(dy.prob(0, 0, b) - dy.prob(1, 0, b)) < 1e-14);
  }
  // Signed sum is U independent and equals tr(O ρ²) = 0.72 here.
  CHECK(hybrid_sigma_distribution(spec, draw(kind, 0), ControlBasis::X).signed_control_sum() ==
        doctest::Approx(0.72).epsilon(1e-13));
  CHECK(sigma_operator(spec).trace().real() == doctest::Approx(0.72).epsilon(1e-13));

  const Observable non_unitary(ComplexMatrix::Identity(2, 2) * 2.0, {0}, n);
  CHECK_THROWS_AS(CircuitSpec::hybrid_sigma({rho, rho}, {non_unitary}), std::invalid_argument);
  CHECK_THROWS_AS(CircuitSpec::hybrid_sigma({rho, rho}, {}), std::invalid_argument);
}

TEST_CASE("controlled V_O signed marginal equals tr(O rho^2)") {
  for (int n = 1; n <= 3; ++n) {
    const DensityMatrix rho = random_state(n, 400 + static_cast<std::uint64_t>(n));
    const Observable op = Observable::pauli(n == 1 ? "X" : "XZ", n == 1 ? std::vector<int>{0} : std::vector<int>{0, n - 1}, n);
    const OutcomeDistribution d =
        controlled_vo_distribution(rho, op.embedded(), draw({EnsembleTag::GlobalClifford, n}, 1));
    CHECK(d.signed_control_sum() == doctest::Approx(exact_obs_moment(rho, op, 2)).epsilon(1e-12));
  }
  const DensityMatrix rho = random_state(1, 1);
  CHECK_THROWS_AS(CircuitSpec::controlled_vo(rho, ComplexMatrix::Identity(2, 2) * 2.0), std::invalid_argument);
}

TEST_CASE("spectral circuit on a pure eigenvector") {
  const ComplexMatrix h = (ComplexMatrix(2, 2) << 1, 1, 1, -1).finished() / std::sqrt(2.0);
  for (const ComplexMatrix& v : {h, random_unitary(1, 5)}) {
    const ComplexVector psi = v.col(0);
    const OutcomeDistribution d =
        spectral_o_distribution(pure(psi), v, SampledUnitary::identity({EnsembleTag::LocalClifford, 1}));
    CHECK(d.b1_length() == 1);
    for (std::uint64_t b2 = 0; b2 < 2; ++b2) {
      CHECK(d.prob(0, 0, b2) == doctest::Approx(std::norm(psi(static_cast<Eigen::Index>(b2)))).epsilon(1e-13));
      CHECK(std::abs(d.prob(0, 1, b2)) < 1e-14);
      CHECK(std::abs(d.prob(1, 0, b2)) < 1e-14);
      CHECK(std::abs(d.prob(1, 1, b2)) < 1e-14);
    }
  }
  const DensityMatrix rho = random_state(1, 1);
  CHECK_THROWS_AS(CircuitSpec::spectral_o(rho, ComplexMatrix::Identity(2, 2) * 2.0, {1.0, -1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(CircuitSpec::spectral_o(rho, ComplexMatrix::Identity(2, 2), {1.0}), std::invalid_argument);
}

TEST_CASE("spec validation") {
  const DensityMatrix a = random_state(1, 1), b = random_state(1, 2);
  CircuitSpec bad = CircuitSpec::hybrid_moment(a, 2);
  bad.states[1] = b;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(CircuitSpec::hybrid_moment(a, 0), std::invalid_argument);
  CHECK_THROWS_AS(CircuitSpec::swap_test({a}), std::invalid_argument);
  CHECK_THROWS_AS(CircuitSpec::swap_test({a, random_state(2, 1)}), std::invalid_argument);
  CHECK(parse_circuit_family("SpectralO") == CircuitFamily::SpectralO);
  CHECK(to_string(CircuitFamily::HybridSigma) == "HybridSigma");
  CHECK_THROWS_AS(parse_circuit_family("Hybrid"), std::invalid_argument);
  CHECK_THROWS_AS(OutcomeDistribution(false, 0, 1, RealVector::Constant(2, 0.6)), std::domain_error);
  CHECK_THROWS_AS(OutcomeDistribution(false, 0, 1, (RealVector(2) << 1.1, -0.1).finished()), std::domain_error);
  CHECK_THROWS_AS(OutcomeDistribution(false, 0, 1, RealVector::Constant(3, 1.0 / 3)), std::invalid_argument);
}

TEST_CASE("inverse-CDF sampler never lands on zero-weight outcomes") {
  const OutcomeDistribution d(false, 0, 2, (RealVector(4) << 0.0, 0.5, 0.5, 0.0).finished());
  const OutcomeSampler sampler(d);
  for (double u : {0.0, 1e-300, 0.25, 0.4999999999, 0.5, 0.75, std::nextafter(1.0, 0.0)}) {
    const std::size_t k = sampler.index_for(u);
    CHECK((k == 1 || k == 2));
  }
}

TEST_CASE("sampled outcomes follow the exact distribution (n = 4, M = 400)") {
  const int n = 4, M = 400, K = 50;
  const EnsembleKind kind{EnsembleTag::LocalClifford, n};
  const CircuitSpec spec = CircuitSpec::hybrid_moment(noisy_ghz(n, 0.8), 2);
  const Dataset data = sample_dataset(spec, kind, M, K, 2024);
  REQUIRE(data.num_settings() == static_cast<std::size_t>(M));
  REQUIRE(data.shots_per_setting() == static_cast<std::size_t>(K));

  // Pooled over settings, each cell count is a sum of independent binomials,
  // so the Pearson statistic is stochastically dominated by chi-square(df).
  const std::size_t cells = 2 * dim_of(n);
  std::vector<double> observed(cells, 0.0), expected(cells, 0.0);
  for (const auto& setting : data.settings) {
    const OutcomeDistribution dist = hybrid_moment_distribution(spec.states[0], 2, setting.unitary);
    for (std::size_t k = 0; k < cells; ++k) expected[k] += K * dist.probs()(static_cast<Eigen::Index>(k));
    for (const auto& shot : setting.shots) {
      REQUIRE(shot.bc.has_value());
      observed[static_cast<std::size_t>(*shot.bc) * dim_of(n) + shot.b.index()] += 1.0;
    }
  }
  CHECK(chi_square(observed, expected) < chi_square_critical(static_cast<double>(cells - 1)));
  for (std::size_t k = 0; k < cells; ++k) CHECK(std::abs(observed[k] - expected[k]) <= 5.0 * std::sqrt(expected[k]) + 1.0);
}

TEST_CASE("sigma sampler draws each control basis with probability one half") {
  const int n = 2;
  const auto spec = CircuitSpec::hybrid_sigma({random_state(n, 1), random_state(n, 2)},
                                              {Observable::pauli("ZX", {0, 1}, n)});
  const Dataset data = sample_dataset(spec, {EnsembleTag::GlobalClifford, n}, 200, 100, 5);
  double y = 0.0;
  for (const auto& s : data.settings)
    for (const auto& shot : s.shots) y += *shot.c == ControlBasis::Y ? 1.0 : 0.0;
  CHECK(std::abs(y - 10000.0) < 5.0 * 50.0);
}

TEST_CASE("sampling is deterministic and thread-count independent") {
  const int n = 3;
  const DensityMatrix rho = noisy_ghz(n, 0.8);
  const std::vector<CircuitSpec> specs{
      CircuitSpec::plain_rm(rho), CircuitSpec::hybrid_moment(rho, 3),
      CircuitSpec::hybrid_sigma({rho, random_state(n, 1)}, {Observable::pauli("Y", {1}, n)}),
      CircuitSpec::controlled_vo(rho, random_unitary(n, 2)),
      CircuitSpec::spectral_o(rho, random_unitary(n, 3), std::vector<double>(8, 0.5)),
      CircuitSpec::swap_test({rho, rho, rho})};
  for (const auto& spec : specs) {
    for (const auto tag : {EnsembleTag::LocalClifford, EnsembleTag::GlobalClifford}) {
      const std::string ref = dump(sample_dataset(spec, {tag, n}, 37, 5, 99, 1));
      CHECK(dump(sample_dataset(spec, {tag, n}, 37, 5, 99, 1)) == ref);
      CHECK(dump(sample_dataset(spec, {tag, n}, 37, 5, 99, 4)) == ref);
      CHECK(dump(sample_dataset(spec, {tag, n}, 37, 5, 99, 8)) == ref);
      CHECK(dump(sample_dataset(spec, {tag, n}, 37, 5, 100, 1)) != ref);
    }
  }
  const Dataset one = sample_dataset(specs[1], {EnsembleTag::LocalClifford, n}, 1, 1, 1);
  CHECK(to_records(one).size() == 1);
}

TEST_CASE("paired sampling reuses the supplied unitaries") {
  const int n = 2;
  const EnsembleKind kind{EnsembleTag::LocalClifford, n};
  const DensityMatrix rho = random_state(n, 3);
  const Dataset a = sample_dataset(CircuitSpec::plain_rm(rho), kind, 20, 2, 1);
  std::vector<SampledUnitary> us;
  for (const auto& s : a.settings) us.push_back(s.unitary);
  const Dataset b = sample_dataset_with_unitaries(CircuitSpec::hybrid_moment(rho, 2), us, 3, 2);
  REQUIRE(b.num_settings() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(b.settings[i].unitary.descriptor() == us[i].descriptor());
  CHECK_THROWS_AS(sample_dataset_with_unitaries(CircuitSpec::plain_rm(rho), {}, 1, 1), std::invalid_argument);
}

TEST_CASE("dense support caps") {
  // The cap is checked before the (dense, expensive) spec validation.
  const int n = 11;
  const auto d = static_cast<Eigen::Index>(dim_of(n));
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  m.diagonal().setConstant(1.0 / static_cast<double>(d));
  const DensityMatrix rho(m);
  const EnsembleKind kind{EnsembleTag::LocalClifford, n};
  CircuitSpec vo;
  vo.family = CircuitFamily::ControlledVO;
  vo.t = 2;
  vo.states.assign(2, rho);
  vo.v_op = ComplexMatrix::Identity(d, d);
  CHECK_THROWS_AS(sample_dataset(vo, kind, 1, 1, 1), std::invalid_argument);
  CircuitSpec sigma = vo;
  sigma.family = CircuitFamily::HybridSigma;
  sigma.v_op.reset();
  sigma.interleaved_ops.push_back(Observable::pauli("Z", {0}, n));
  CHECK_THROWS_AS(sample_dataset(sigma, kind, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_dataset(CircuitSpec::plain_rm(random_state(2, 1)), {EnsembleTag::LocalClifford, 2}, 0, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_dataset(CircuitSpec::plain_rm(random_state(2, 1)), {EnsembleTag::LocalClifford, 2}, 1, 0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_dataset(CircuitSpec::plain_rm(random_state(2, 1)), {EnsembleTag::LocalClifford, 3}, 1, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("record serialization round-trips 1e5 shots bit-exactly") {
  const int n = 3;
  const Dataset data = sample_dataset(CircuitSpec::hybrid_moment(noisy_ghz(n, 0.8), 2),
                                      {EnsembleTag::GlobalClifford, n}, 1000, 100, 77);
  const auto records = to_records(data);
  REQUIRE(records.size() == 100000);
  std::ostringstream out;
  write_records(out, records);
  std::istringstream in(out.str());
  const auto back = read_records(in);
  CHECK(back == records);

  auto shuffled = records;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
  CHECK(to_records(from_records(shuffled)) == records);
}

TEST_CASE("records carry every optional field") {
  const auto spec = CircuitSpec::spectral_o(random_state(1, 1), random_unitary(1, 1), {1.0, -1.0});
  const auto recs = to_records(sample_dataset(spec, {EnsembleTag::LocalClifford, 1}, 2, 2, 4));
  for (const auto& r : recs) {
    CHECK(r.b1.has_value());
    CHECK(r.bc.has_value());
    CHECK(record_from_line(record_to_line(r)) == r);
  }
  const auto sigma = CircuitSpec::hybrid_sigma({random_state(1, 1), random_state(1, 2)},
                                               {Observable::pauli("Z", {0}, 1)});
  for (const auto& r : to_records(sample_dataset(sigma, {EnsembleTag::LocalClifford, 1}, 3, 3, 4))) {
    CHECK(r.c.has_value());
    CHECK(record_from_line(record_to_line(r)) == r);
  }
}

TEST_CASE("malformed records are reported with their line number") {
  const auto recs = to_records(sample_dataset(CircuitSpec::plain_rm(random_state(1, 1)),
                                              {EnsembleTag::LocalClifford, 1}, 2, 2, 4));
  std::vector<std::string> lines;
  for (const auto& r : recs) lines.push_back(record_to_line(r));
  const std::vector<std::pair<std::string, std::string>> corruptions{
      {"\"b\":\"", "\"b\":\"2"}, {"\"family\":\"PlainRM\"", "\"family\":\"Nope\""}, {"}", ""}, {"\"seed\"", "\"sed\""}};
  for (const auto& [from, to] : corruptions) {
    auto copy = lines;
    copy[2].replace(copy[2].find(from), from.size(), to);
    std::string text;
    for (const auto& l : copy) text += l + "\n";
    std::istringstream in(text);
    try {
      read_records(in);
      FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
    }
  }
}

TEST_CASE("from_records rejects inconsistent record sets") {
  const auto recs = to_records(sample_dataset(CircuitSpec::plain_rm(random_state(1, 1)),
                                              {EnsembleTag::LocalClifford, 1}, 3, 2, 4));
  CHECK_THROWS_AS(from_records({}), std::invalid_argument);
  auto dup = recs;
  dup.push_back(recs[0]);
  CHECK_THROWS_AS(from_records(dup), std::invalid_argument);
  auto gap = recs;
  for (auto& r : gap)
    if (r.i == 1) r.i = 5;
  CHECK_THROWS_AS(from_records(gap), std::invalid_argument);
  auto desc = recs;
  desc[1].descriptor = desc[1].descriptor == "L:0" ? "L:1" : "L:0";
  CHECK_THROWS_AS(from_records(desc), std::invalid_argument);
  auto mixed = recs;
  mixed[0].family = CircuitFamily::HybridMoment;
  CHECK_THROWS_AS(from_records(mixed), std::invalid_argument);
  auto len = recs;
  len[0].b = BitString(0, 2);
  CHECK_THROWS_AS(from_records(len), std::invalid_argument);
}
