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


// Command-line front end: sample, estimate, sweep, oracle.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyshadow/analysis.hpp"
#include "hyshadow/experiment.hpp"

namespace {

using namespace hyshadow;

struct SampleArgs {
  std::string family = "HybridMoment";
  int n = 2;
  int t = 2;
  double q = 0.8;
  std::string ensemble = "LocalClifford";
  int M = 100;
  int K = 1;
};

struct EstimateArgs {
  std::string in;
  std::string in2;
  std::string estimator = "p3_hr";
  int m = 2;
  std::optional<double> q;
};

int run_sample(const SampleArgs& a, std::uint64_t seed, int threads, const std::string& out) {
  const CircuitFamily family = parse_circuit_family(a.family);
  const DensityMatrix rho = noisy_ghz(a.n, a.q);
  CircuitSpec spec;
  switch (family) {
    case CircuitFamily::PlainRM: spec = CircuitSpec::plain_rm(rho); break;
    case CircuitFamily::HybridMoment: spec = CircuitSpec::hybrid_moment(rho, a.t); break;
    case CircuitFamily::SwapTest: spec = CircuitSpec::swap_test(std::vector<DensityMatrix>(static_cast<std::size_t>(a.t), rho)); break;
    default: throw std::invalid_argument("sample: family must be PlainRM, HybridMoment or SwapTest");
  }
  const EnsembleKind kind{parse_ensemble_tag(a.ensemble), a.n};
  const Dataset data = sample_dataset(spec, kind, a.M, a.K, seed, threads);
  const auto records = to_records(data);
  if (out.empty()) {
    write_records(std::cout, records);
  } else {
    export_dataset(records, out);
  }
  return 0;
}

int run_estimate(const EstimateArgs& a, std::uint64_t seed, const std::string& out) {
  const Dataset data = from_records(import_dataset(a.in));
  const EnsembleKind kind = data.kind;
  const EstimatorOptions opt{200, seed};
  EstimateReport r;
  int order = 3;
  if (a.estimator == "p3_hr") {
    r = estimate_p3_hr(data, kind, opt);
  } else if (a.estimator == "p4_hr") {
    r = estimate_p4_hr(data, kind, opt);
    order = 4;
  } else if (a.estimator == "p4_hs") {
    r = estimate_p4_hs(ShadowSet::rho_pow_t(data), opt);
    order = 4;
  } else if (a.estimator == "pt_hs") {
    const Observable id = Observable::full(ComplexMatrix::Identity(static_cast<Eigen::Index>(dim_of(kind.n_qubits)),
                                                                   static_cast<Eigen::Index>(dim_of(kind.n_qubits))));
    r = estimate_ot_hs(ShadowSet::rho_pow_t(data), id, opt);
    order = data.t;
  } else if (a.estimator == "p3_hs") {
    if (a.in2.empty()) throw std::invalid_argument("p3_hs needs --in2 with a PlainRM dataset");
    const Dataset single = from_records(import_dataset(a.in2));
    r = estimate_p3_hs(ShadowSet::rho_pow_t(data), ShadowSet::rho(single), PairingMode::TwoDatasets, opt);
  } else if (a.estimator == "pm_os") {
    r = estimate_pm_os(ShadowSet::rho(data), a.m, opt);
    order = a.m;
  } else if (a.estimator == "swap_test") {
    r = swap_test_statistic(data, opt);
    order = data.t;
  } else {
    throw std::invalid_argument("unknown estimator '" + a.estimator + "'");
  }
  if (order < 2 || order > 4) throw std::invalid_argument("estimate: CSV output covers moments 2..4");
  const Quantity quantity = order == 2 ? Quantity::P2 : order == 3 ? Quantity::P3 : Quantity::P4;

  ResultRow row;
  row.protocol = r.protocol;
  row.quantity = quantity;
  row.n = kind.n_qubits;
  row.d = dim_of(kind.n_qubits);
  row.M = static_cast<int>(r.M);
  row.K = static_cast<int>(r.K);
  row.estimate = r.real();
  row.exact = a.q ? exact_moment(noisy_ghz(kind.n_qubits, *a.q), order) : std::nan("");
  row.abs_error = std::abs(row.estimate - row.exact);
  row.std_error = r.std_error;
  row.seed = data.seed;
  if (out.empty()) {
    export_csv({row}, std::cout);
  } else {
    export_csv({row}, out);
  }
  return 0;
}

int run_sweep(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> threads,
              const std::string& out) {
  ExperimentConfig config = ExperimentConfig::load(config_path);
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  if (!out.empty()) config.output = out;
  const auto rows = run_experiment(config);
  if (config.output.empty()) {
    export_csv(rows, std::cout);
  } else {
    export_csv(rows, config.output);
  }
  const auto summary = summarize(rows);
  export_summary_csv(summary, std::cerr);
  for (Protocol p : config.protocols) {
    std::vector<double> xs, ys;
    for (const auto& s : summary)
      if (s.protocol == p) {
        xs.push_back(s.n);
        ys.push_back(s.rms_error);
      }
    if (xs.size() >= 4) {
      const ScalingFit fit = fit_exponent(xs, ys);
      std::fprintf(stderr, "%s alpha=%.4f r2=%.4f\n", std::string(to_string(p)).c_str(), fit.alpha, fit.r2);
    }
  }
  return 0;
}

int run_oracle(int max_n, bool global_n2) {
  const OracleReport report = run_oracle_suite(max_n, {}, global_n2);
  for (const auto& c : report.checks)
    std::printf("%s %-22s %-14s n=%d %-26s max_dev=%.3e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                std::string(to_string(c.kind.tag)).c_str(), c.kind.n_qubits, c.detail.c_str(), c.max_deviation);
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyshadow: hybrid shadow and randomized-measurement estimators"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--seed", seed, "Base seed");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output path (stdout when omitted)");
  app.add_option("--config", config_path, "Experiment config file");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Sample a snapshot dataset (one JSON record per line)");
  sample->add_option("--family", sa.family, "PlainRM, HybridMoment or SwapTest");
  sample->add_option("--n", sa.n, "Qubits")->check(CLI::Range(1, 12));
  sample->add_option("--t", sa.t, "Copies");
  sample->add_option("--q", sa.q, "Noisy GHZ visibility");
  sample->add_option("--ensemble", sa.ensemble, "LocalClifford or GlobalClifford");
  sample->add_option("--M", sa.M, "Settings");
  sample->add_option("--K", sa.K, "Shots per setting");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Estimate a moment from a dataset");
  estimate->add_option("--in", ea.in, "Dataset path")->required();
  estimate->add_option("--in2", ea.in2, "Second (single-copy) dataset for p3_hs");
  estimate->add_option("--estimator", ea.estimator, "p3_hr, p4_hr, p4_hs, pt_hs, p3_hs, pm_os, swap_test");
  estimate->add_option("--m", ea.m, "Moment order for pm_os");
  estimate->add_option("--q", ea.q, "Noisy GHZ visibility for the exact column");

  auto* sweep = app.add_subcommand("sweep", "Run a configured experiment sweep");
  int max_n = 2;
  bool global_n2 = false;
  auto* oracle = app.add_subcommand("oracle", "Run the exact-enumeration oracle suite");
  oracle->add_option("--max-n", max_n, "Largest register (1 or 2)")->check(CLI::Range(1, 2));
  oracle->add_flag("--global-n2", global_n2, "Include the two-qubit global Clifford ensemble");

  CLI11_PARSE(app, argc, argv);
  try {
    if (sample->parsed()) return run_sample(sa, seed.value_or(1), threads.value_or(1), out);
    if (estimate->parsed()) return run_estimate(ea, seed.value_or(0), out);
    if (sweep->parsed()) {
      if (config_path.empty()) throw std::invalid_argument("sweep needs --config");
      return run_sweep(config_path, seed, threads, out);
    }
    if (oracle->parsed()) return run_oracle(max_n, global_n2);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
