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


#include "hyshadow/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hyshadow/parallel.hpp"

namespace hyshadow {

namespace {

constexpr std::array<std::pair<Quantity, std::string_view>, 7> kQuantityNames{{
    {Quantity::P2, "P2"},
    {Quantity::P3, "P3"},
    {Quantity::P4, "P4"},
    {Quantity::o2, "o2"},
    {Quantity::o3, "o3"},
    {Quantity::o4, "o4"},
    {Quantity::F2_fidelity, "F2_fidelity"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

long long parse_int(std::string_view text, const std::string& key) {
  std::string s(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw std::invalid_argument("config: '" + key + "' expects an integer");
  return v;
}

double parse_double(std::string_view text, const std::string& key) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw std::invalid_argument("config: '" + key + "' expects a number");
  return v;
}

bool parse_bool(std::string_view text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true/false");
}

int moment_order(Quantity q) {
  switch (q) {
    case Quantity::P2:
    case Quantity::o2:
    case Quantity::F2_fidelity: return 2;
    case Quantity::P3:
    case Quantity::o3: return 3;
    case Quantity::P4:
    case Quantity::o4: return 4;
  }
  return 0;
}

bool is_observable_quantity(Quantity q) {
  return q == Quantity::o2 || q == Quantity::o3 || q == Quantity::o4 || q == Quantity::F2_fidelity;
}

std::uint64_t role_seed(std::uint64_t seed, std::uint64_t role) { return mix_keys({seed, role}); }

ComplexMatrix identity_of(Eigen::Index d) { return ComplexMatrix::Identity(d, d); }

// Datasets drawn per trial, used for the cost model.
int datasets_per_trial(Protocol p, Quantity q) {
  if (p == Protocol::HS && (q == Quantity::P3 || q == Quantity::o3)) return 2;
  if (p == Protocol::HR && q == Quantity::o4) return 2;
  return 1;
}

}  // namespace

std::string_view to_string(Quantity quantity) {
  for (const auto& [q, name] : kQuantityNames)
    if (q == quantity) return name;
  throw std::invalid_argument("unknown quantity");
}

Quantity parse_quantity(std::string_view text) {
  for (const auto& [q, name] : kQuantityNames)
    if (name == text) return q;
  throw std::invalid_argument("unknown quantity '" + std::string(text) + "'");
}

ObservableSpec ObservableSpec::parse(std::string_view text) {
  text = trim(text);
  ObservableSpec spec;
  if (text == "ghz_projector") {
    spec.ghz_projector = true;
    spec.pauli.clear();
    spec.support.clear();
    return spec;
  }
  const auto at = text.find('@');
  if (at == std::string_view::npos) throw std::invalid_argument("observable: expected 'WORD@q0,q1,...' or 'ghz_projector'");
  spec.pauli = std::string(trim(text.substr(0, at)));
  spec.support.clear();
  for (auto part : split(text.substr(at + 1), ','))
    spec.support.push_back(static_cast<int>(parse_int(part, "observable")));
  if (spec.pauli.size() != spec.support.size())
    throw std::invalid_argument("observable: Pauli word and support differ in length");
  for (char c : spec.pauli)
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') throw std::invalid_argument("observable: bad Pauli letter");
  return spec;
}

std::string ObservableSpec::to_string() const {
  if (ghz_projector) return "ghz_projector";
  std::string out = pauli + "@";
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(support[k]);
  }
  return out;
}

Observable ObservableSpec::build(int n_qubits) const {
  if (ghz_projector) return Observable::full(ghz_state(n_qubits).matrix());
  return Observable::pauli(pauli, support, n_qubits);
}

int ExperimentConfig::M_for(Protocol p) const {
  const auto it = M_override.find(p);
  return it == M_override.end() ? M : it->second;
}

int ExperimentConfig::K_for(Protocol p) const {
  const auto it = K_override.find(p);
  return it == K_override.end() ? K : it->second;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig c;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    try {
      if (const auto dot = key.find('.'); dot != std::string::npos) {
        const Protocol p = parse_protocol(key.substr(0, dot));
        const std::string field = key.substr(dot + 1);
        const int v = static_cast<int>(parse_int(value, key));
        if (field == "M") {
          c.M_override[p] = v;
        } else if (field == "K") {
          c.K_override[p] = v;
        } else {
          throw std::invalid_argument("config: unknown per-protocol field '" + key + "'");
        }
      } else if (key == "state") {
        c.state = std::string(value);
      } else if (key == "n_min") {
        c.n_min = static_cast<int>(parse_int(value, key));
      } else if (key == "n_max") {
        c.n_max = static_cast<int>(parse_int(value, key));
      } else if (key == "q") {
        c.q = parse_double(value, key);
      } else if (key == "protocols") {
        c.protocols.clear();
        for (auto part : split(value, ',')) c.protocols.push_back(parse_protocol(part));
      } else if (key == "quantity") {
        c.quantity = parse_quantity(value);
      } else if (key == "observable") {
        c.observable = ObservableSpec::parse(value);
      } else if (key == "ensemble") {
        c.ensemble = parse_ensemble_tag(value);
      } else if (key == "M") {
        c.M = static_cast<int>(parse_int(value, key));
      } else if (key == "K") {
        c.K = static_cast<int>(parse_int(value, key));
      } else if (key == "R") {
        c.R = static_cast<int>(parse_int(value, key));
      } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(parse_int(value, key));
      } else if (key == "output") {
        c.output = std::string(value);
      } else if (key == "threads") {
        c.threads = static_cast<int>(parse_int(value, key));
      } else if (key == "bootstrap") {
        c.bootstrap = static_cast<int>(parse_int(value, key));
      } else if (key == "timing") {
        c.timing = parse_bool(value, key);
      } else if (key == "budget") {
        c.budget = parse_double(value, key);
      } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse(in);
}

bool supports(Protocol protocol, Quantity quantity) {
  switch (protocol) {
    case Protocol::HS: return true;
    case Protocol::HR:
      return quantity == Quantity::P3 || quantity == Quantity::P4 || quantity == Quantity::o3 ||
             quantity == Quantity::o4;
    case Protocol::OS: return quantity != Quantity::o4;
    case Protocol::SwapTest: return quantity != Quantity::F2_fidelity;
  }
  return false;
}

void ExperimentConfig::validate() const {
  if (state != "ghz_noisy") throw std::invalid_argument("config: only state = ghz_noisy is supported");
  if (n_min < 1 || n_max < n_min) throw std::invalid_argument("config: empty qubit range");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("config: q must lie in [0, 1]");
  if (protocols.empty()) throw std::invalid_argument("config: no protocols");
  if (R < 1) throw std::invalid_argument("config: R must be >= 1");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (bootstrap < 0) throw std::invalid_argument("config: bootstrap must be >= 0");
  for (Protocol p : protocols) {
    if (!supports(p, quantity))
      throw std::invalid_argument("config: unknown quantity/protocol combination " + std::string(to_string(p)) +
                                  "/" + std::string(to_string(quantity)));
    if (M_for(p) < 1 || K_for(p) < 1) throw std::invalid_argument("config: M and K must be >= 1");
    if (p == Protocol::HR && K_for(p) < 2) throw std::invalid_argument("config: HR needs K >= 2");
    if (p == Protocol::HS && quantity == Quantity::P4 && M_for(p) < 2)
      throw std::invalid_argument("config: HS P4/o4 needs M >= 2");
    if (p == Protocol::OS && M_for(p) < moment_order(quantity))
      throw std::invalid_argument("config: OS needs M >= moment order");
  }
  if (is_observable_quantity(quantity) && !observable.ghz_projector)
    for (int s : observable.support)
      if (s < 0 || s >= n_min) throw std::invalid_argument("config: observable support exceeds n_min");
  if (quantity == Quantity::F2_fidelity && !observable.ghz_projector)
    throw std::invalid_argument("config: F2_fidelity uses observable = ghz_projector");
  if (predicted_cost(*this) > budget) throw std::invalid_argument("config: predicted cost exceeds the budget");
}

DensityMatrix build_state(const ExperimentConfig& config, int n) { return noisy_ghz(n, config.q); }

double exact_value(Quantity quantity, const DensityMatrix& rho, const std::optional<Observable>& op) {
  const int m = moment_order(quantity);
  if (!is_observable_quantity(quantity)) return exact_moment(rho, m);
  if (!op) throw std::invalid_argument("exact_value: quantity needs an observable");
  return exact_obs_moment(rho, *op, m);
}

TrialOutcome run_trial(Protocol protocol, Quantity quantity, const DensityMatrix& rho,
                       const std::optional<Observable>& op_in, const EnsembleKind& kind, int M, int K,
                       std::uint64_t seed, int bootstrap) {
  if (!supports(protocol, quantity))
    throw std::invalid_argument("run_trial: unknown quantity/protocol combination");
  const int m = moment_order(quantity);
  const bool needs_op = is_observable_quantity(quantity);
  if (needs_op && !op_in) throw std::invalid_argument("run_trial: quantity needs an observable");
  const Observable op = needs_op ? *op_in : Observable::full(identity_of(rho.dim()));
  const EstimatorOptions opt{bootstrap, role_seed(seed, 99)};
  EstimateReport r;

  switch (protocol) {
    case Protocol::HS: {
      const Dataset d2 = sample_dataset(CircuitSpec::hybrid_moment(rho, 2), kind, M, K, role_seed(seed, 0));
      const ShadowSet s2 = ShadowSet::rho_pow_t(d2);
      if (m == 2) {
        r = estimate_ot_hs(s2, op, opt);
      } else if (m == 3) {
        const Dataset d1 = sample_dataset(CircuitSpec::plain_rm(rho), kind, M, K, role_seed(seed, 1));
        const ShadowSet s1 = ShadowSet::rho(d1);
        r = needs_op ? estimate_o3_hs(s2, s1, op, opt) : estimate_p3_hs(s2, s1, PairingMode::TwoDatasets, opt);
      } else {
        r = needs_op ? estimate_o4_hs(s2, op, opt) : estimate_p4_hs(s2, opt);
      }
      break;
    }
    case Protocol::HR: {
      if (!needs_op) {
        const Dataset d2 = sample_dataset(CircuitSpec::hybrid_moment(rho, 2), kind, M, K, role_seed(seed, 0));
        r = m == 3 ? estimate_p3_hr(d2, kind, opt) : estimate_p4_hr(d2, kind, opt);
      } else {
        const VODecomposition vo = vo_decomposition(op);
        const Dataset dv = sample_dataset(CircuitSpec::controlled_vo(rho, vo.v), kind, M, K, role_seed(seed, 0));
        if (m == 3) {
          r = estimate_o3_hr(dv, kind, op, opt);
        } else {
          std::vector<SampledUnitary> us;
          for (const auto& s : dv.settings) us.push_back(s.unitary);
          const Dataset dm =
              sample_dataset_with_unitaries(CircuitSpec::hybrid_moment(rho, 2), us, K, role_seed(seed, 2));
          r = estimate_o4_hr(dv, dm, kind, op, opt);
        }
      }
      break;
    }
    case Protocol::OS: {
      const Dataset d1 = sample_dataset(CircuitSpec::plain_rm(rho), kind, M, K, role_seed(seed, 1));
      const ShadowSet s1 = ShadowSet::rho(d1);
      r = needs_op ? estimate_om_os(s1, op, m, opt) : estimate_pm_os(s1, m, opt);
      break;
    }
    case Protocol::SwapTest: {
      std::vector<DensityMatrix> states(static_cast<std::size_t>(m), rho);
      std::vector<Observable> ops;
      if (needs_op) {
        if (!op.is_unitary()) throw std::invalid_argument("run_trial: swap test needs a unitary observable");
        ops.push_back(op);
        for (int k = 1; k < m; ++k) ops.push_back(Observable::full(identity_of(rho.dim())));
      }
      const Dataset ds = sample_dataset(CircuitSpec::swap_test(std::move(states), std::move(ops)), kind, M, K,
                                        role_seed(seed, 0));
      r = swap_test_statistic(ds, opt);
      break;
    }
  }
  return {r.real(), r.std_error};
}

std::uint64_t trial_seed(std::uint64_t base, Protocol protocol, int n, int trial) {
  return mix_keys({base, static_cast<std::uint64_t>(protocol) + 1, static_cast<std::uint64_t>(n),
                   static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(StreamTag::Trial)});
}

double predicted_cost(const ExperimentConfig& config) {
  double total = 0.0;
  for (int n = config.n_min; n <= config.n_max; ++n) {
    const double d = std::ldexp(1.0, n);
    for (Protocol p : config.protocols)
      total += static_cast<double>(config.R) * datasets_per_trial(p, config.quantity) *
               static_cast<double>(config.M_for(p)) * static_cast<double>(config.K_for(p)) * d * d;
  }
  return total;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  struct Task {
    Protocol protocol;
    int n;
    int trial;
  };
  std::vector<Task> tasks;
  for (Protocol p : config.protocols)
    for (int n = config.n_min; n <= config.n_max; ++n)
      for (int r = 0; r < config.R; ++r) tasks.push_back({p, n, r});

  std::vector<DensityMatrix> states;
  std::vector<std::optional<Observable>> ops;
  std::vector<double> exacts;
  for (int n = config.n_min; n <= config.n_max; ++n) {
    states.push_back(build_state(config, n));
    ops.push_back(is_observable_quantity(config.quantity) ? std::optional<Observable>(config.observable.build(n))
                                                          : std::nullopt);
    exacts.push_back(exact_value(config.quantity, states.back(), ops.back()));
  }

  std::vector<ResultRow> rows(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](std::size_t k) {
    const Task& task = tasks[k];
    const auto idx = static_cast<std::size_t>(task.n - config.n_min);
    const std::uint64_t seed = trial_seed(config.seed, task.protocol, task.n, task.trial);
    const auto start = std::chrono::steady_clock::now();
    const TrialOutcome out =
        run_trial(task.protocol, config.quantity, states[idx], ops[idx], EnsembleKind{config.ensemble, task.n},
                  config.M_for(task.protocol), config.K_for(task.protocol), seed, config.bootstrap);
    const auto stop = std::chrono::steady_clock::now();
    ResultRow& row = rows[k];
    row.protocol = task.protocol;
    row.quantity = config.quantity;
    row.n = task.n;
    row.d = dim_of(task.n);
    row.M = config.M_for(task.protocol);
    row.K = config.K_for(task.protocol);
    row.trial = task.trial;
    row.estimate = out.estimate;
    row.exact = exacts[idx];
    row.abs_error = std::abs(out.estimate - exacts[idx]);
    row.std_error = out.std_error;
    row.wall_time = config.timing ? std::chrono::duration<double>(stop - start).count() : 0.0;
    row.seed = seed;
  });
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<double> sq;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.protocol == r.protocol && s.quantity == r.quantity && s.n == r.n && s.M == r.M && s.K == r.K;
    });
    if (it == out.end()) {
      out.push_back({r.protocol, r.quantity, r.n, r.d, r.M, r.K, 0, 0.0});
      sq.push_back(0.0);
      it = out.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - out.begin());
    it->trials += 1;
    sq[k] += (r.estimate - r.exact) * (r.estimate - r.exact);
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k].rms_error = std::sqrt(sq[k] / out[k].trials);
  return out;
}

namespace {

// Weighted least squares for y_k ≈ Σ_c coef_c f_c(K_k) with coefficients
// restricted to the subset `mask`; weights 1/y_k² fit relative error.
bool fit_subset(const std::vector<std::array<double, 3>>& f, const std::vector<double>& y, unsigned mask,
                std::array<double, 3>& coef, double& residual) {
  std::vector<int> cols;
  for (int c = 0; c < 3; ++c)
    if (mask & (1u << c)) cols.push_back(c);
  const auto rows = static_cast<Eigen::Index>(y.size());
  const auto ncol = static_cast<Eigen::Index>(cols.size());
  if (rows < ncol) return false;
  Eigen::MatrixXd a(rows, ncol);
  Eigen::VectorXd b(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double w = 1.0 / y[static_cast<std::size_t>(k)];
    for (Eigen::Index c = 0; c < ncol; ++c)
      a(k, c) = w * f[static_cast<std::size_t>(k)][static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])];
    b(k) = 1.0;
  }
  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  coef = {0.0, 0.0, 0.0};
  for (Eigen::Index c = 0; c < ncol; ++c) {
    if (!(x(c) >= 0.0)) return false;
    coef[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)])] = x(c);
  }
  residual = (a * x - b).squaredNorm();
  return true;
}

}  // namespace

RequiredShots find_required_shots(const DensityMatrix& rho, const EnsembleKind& kind, int M, double target,
                                  const std::vector<int>& k_grid, int R, std::uint64_t seed, int threads) {
  if (k_grid.size() < 3) throw std::invalid_argument("find_required_shots: need >= 3 grid points");
  for (int K : k_grid)
    if (K < 2) throw std::invalid_argument("find_required_shots: grid values must be >= 2");
  if (!(target > 0.0) || R < 2 || M < 1) throw std::invalid_argument("find_required_shots: bad arguments");
  const double exact = exact_moment(rho, 3);
  const std::size_t G = k_grid.size();
  std::vector<double> sq(G * static_cast<std::size_t>(R));
  parallel_for(sq.size(), threads, [&](std::size_t t) {
    const std::size_t g = t / static_cast<std::size_t>(R);
    const auto r = static_cast<int>(t % static_cast<std::size_t>(R));
    const std::uint64_t s = mix_keys({seed, static_cast<std::uint64_t>(kind.n_qubits),
                                      static_cast<std::uint64_t>(k_grid[g]), static_cast<std::uint64_t>(r)});
    const TrialOutcome out = run_trial(Protocol::HR, Quantity::P3, rho, std::nullopt, kind, M, k_grid[g], s, 0);
    sq[t] = (out.estimate - exact) * (out.estimate - exact);
  });

  RequiredShots res;
  res.n = kind.n_qubits;
  res.k_grid = k_grid;
  std::vector<double> y;
  std::vector<std::array<double, 3>> f;
  for (std::size_t g = 0; g < G; ++g) {
    double acc = 0.0;
    for (int r = 0; r < R; ++r) acc += sq[g * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)];
    const double mse = acc / R;
    res.rms.push_back(std::sqrt(mse));
    const double K = k_grid[g];
    y.push_back(mse * M);
    f.push_back({1.0, 1.0 / K, 1.0 / (K * (K - 1.0))});
  }
  // Nonnegative fit: best residual over all feasible coefficient subsets.
  std::array<double, 3> best{};
  double best_res = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < 8; ++mask) {
    std::array<double, 3> coef{};
    double residual = 0.0;
    if (fit_subset(f, y, mask, coef, residual) && residual < best_res) {
      best_res = residual;
      best = coef;
    }
  }
  if (!std::isfinite(best_res)) throw std::runtime_error("find_required_shots: variance model fit failed");
  res.gamma = best[0];
  res.beta = best[1];
  res.alpha = best[2];
  const double goal = target * target * M;
  auto model = [&](double K) { return res.gamma + res.beta / K + res.alpha / (K * (K - 1.0)); };
  if (res.gamma >= goal) {
    res.k_required = std::numeric_limits<double>::infinity();
    return res;
  }
  double lo = 1.0 + 1e-9, hi = 2.0;
  while (model(hi) > goal) hi *= 2.0;
  if (model(lo) <= goal) {
    res.k_required = lo;
    return res;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model(mid) > goal ? lo : hi) = mid;
  }
  res.k_required = 0.5 * (lo + hi);
  return res;
}

namespace {

constexpr const char* kCsvHeader =
    "protocol,quantity,n,d,M,K,trial,estimate,exact,abs_error,std_error,wall_time,seed";

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void export_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.protocol) << ',' << to_string(r.quantity) << ',' << r.n << ',' << r.d << ',' << r.M << ','
        << r.K << ',' << r.trial << ',' << fmt_double(r.estimate) << ',' << fmt_double(r.exact) << ','
        << fmt_double(r.abs_error) << ',' << fmt_double(r.std_error) << ',' << fmt_double(r.wall_time) << ','
        << r.seed << '\n';
  }
}

void export_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  export_csv(rows, out);
}

void export_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "protocol,quantity,n,d,M,K,trials,rms_error\n";
  for (const auto& r : rows)
    out << to_string(r.protocol) << ',' << to_string(r.quantity) << ',' << r.n << ',' << r.d << ',' << r.M << ','
        << r.K << ',' << r.trials << ',' << fmt_double(r.rms_error) << '\n';
}

std::vector<ResultRow> import_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader)
    throw std::runtime_error("line 1: unexpected CSV header");
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) throw std::runtime_error("line " + std::to_string(line_no) + ": expected 13 fields");
    try {
      ResultRow r;
      r.protocol = parse_protocol(f[0]);
      r.quantity = parse_quantity(f[1]);
      r.n = static_cast<int>(parse_int(f[2], "n"));
      r.d = static_cast<std::uint64_t>(parse_int(f[3], "d"));
      r.M = static_cast<int>(parse_int(f[4], "M"));
      r.K = static_cast<int>(parse_int(f[5], "K"));
      r.trial = static_cast<int>(parse_int(f[6], "trial"));
      r.estimate = parse_double(f[7], "estimate");
      r.exact = parse_double(f[8], "exact");
      r.abs_error = parse_double(f[9], "abs_error");
      r.std_error = parse_double(f[10], "std_error");
      r.wall_time = parse_double(f[11], "wall_time");
      r.seed = std::stoull(std::string(f[12]));
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<SnapshotRecord> import_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return read_records(in);
}

void export_dataset(const std::vector<SnapshotRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_records(out, records);
}

// ---------------------------------------------------------------------------
// Enumeration oracle suite.

bool OracleReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.passed; });
}

std::vector<std::string> OracleReport::failed_names() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed && std::find(out.begin(), out.end(), c.name) == out.end()) out.push_back(c.name);
  return out;
}

namespace {

// One outcome of one setting with its exact probability (ensemble weight included).
struct Branch {
  double p = 0.0;
  std::size_t setting = 0;
  Shot shot;
  SnapshotRecord record;
};

struct Enumerated {
  std::vector<SampledUnitary> unitaries;
  std::vector<double> weights;
  // branches[u] lists the outcomes of setting u with Pr(outcome | U).
  std::vector<std::vector<Branch>> branches;
};

Shot shot_of(const Outcome& o, std::optional<ControlBasis> c) { return Shot{c, o.bc, o.b1, o.b}; }

SnapshotRecord record_of(const CircuitSpec& spec, const SampledUnitary& u, const Shot& s) {
  SnapshotRecord r;
  r.family = spec.family;
  r.t = spec.t;
  r.ensemble = u.kind().tag;
  r.descriptor = u.descriptor();
  r.c = s.c;
  r.bc = s.bc;
  r.b1 = s.b1;
  r.b = s.b;
  return r;
}

Enumerated enumerate_outcomes(const CircuitSpec& spec, const EnsembleKind& kind) {
  Enumerated e;
  const PreparedCircuit circuit(spec);
  for (auto& [u, w] : enumerate_ensemble(kind)) {
    std::vector<Branch> list;
    const std::vector<std::optional<ControlBasis>> bases =
        spec.randomizes_control_basis()
            ? std::vector<std::optional<ControlBasis>>{ControlBasis::X, ControlBasis::Y}
            : std::vector<std::optional<ControlBasis>>{std::nullopt};
    for (const auto& c : bases) {
      const OutcomeDistribution dist = circuit.distribution(u, c.value_or(ControlBasis::X));
      for (std::size_t k = 0; k < dist.size(); ++k) {
        const double p = dist.probs()(static_cast<Eigen::Index>(k)) / static_cast<double>(bases.size());
        if (p == 0.0) continue;
        Branch b;
        b.p = p;
        b.setting = e.unitaries.size();
        b.shot = shot_of(dist.outcome(k), c);
        b.record = record_of(spec, u, b.shot);
        list.push_back(std::move(b));
      }
    }
    e.unitaries.push_back(u);
    e.weights.push_back(w);
    e.branches.push_back(std::move(list));
  }
  return e;
}

// Flattened (weight · Pr, branch) list over all settings.
struct Flat {
  double w;
  const Branch* branch;
};

std::vector<Flat> flatten(const Enumerated& e) {
  std::vector<Flat> out;
  for (std::size_t u = 0; u < e.unitaries.size(); ++u)
    for (const auto& b : e.branches[u]) out.push_back({e.weights[u] * b.p, &b});
  return out;
}

double max_dev(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Dataset one_setting(const CircuitSpec& spec, const EnsembleKind& kind, const SampledUnitary& u,
                    std::vector<Shot> shots) {
  Dataset d;
  d.family = spec.family;
  d.t = spec.t;
  d.kind = kind;
  d.settings.push_back(Setting{u, std::move(shots)});
  return d;
}

// E over independent settings of estimator(snapshots...), one snapshot per set.
template <typename Fn>
Complex expect_sets(const std::vector<std::vector<std::pair<double, ShadowSnapshot>>>& sources, Fn&& fn) {
  Complex acc{0.0, 0.0};
  std::vector<std::size_t> idx(sources.size(), 0);
  while (true) {
    double w = 1.0;
    std::vector<const ShadowSnapshot*> snaps;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      w *= sources[s][idx[s]].first;
      snaps.push_back(&sources[s][idx[s]].second);
    }
    acc += w * fn(snaps);
    std::size_t s = 0;
    while (s < sources.size() && ++idx[s] == sources[s].size()) idx[s++] = 0;
    if (s == sources.size()) break;
  }
  return acc;
}

ShadowSet set_of(SnapshotTarget target, int t, std::vector<const ShadowSnapshot*> snaps) {
  std::vector<std::vector<ShadowSnapshot>> by;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    ShadowSnapshot s = *snaps[k];
    s.setting_index = k;
    by.push_back({s});
  }
  return ShadowSet(target, t, std::move(by));
}

constexpr std::size_t kFullCheckEnsembleSize = 1000;

class OracleRunner {
 public:
  OracleRunner(const EnsembleKind& kind, const OracleHooks& hooks, double tol, OracleReport& report)
      : kind_(kind), hooks_(hooks), tol_(tol), report_(report) {
    const int n = kind.n_qubits;
    CounterRng rng(mix_keys({0x5EED0AC1Eull, static_cast<std::uint64_t>(n)}));
    rho_.emplace(random_mixed_state(n, rng));
    rho_b_.emplace(random_mixed_state(n, rng));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(dim_of(n));
    ComplexMatrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
    o_gen_.emplace(Observable::full(0.5 * (g + g.adjoint())));
    z_.emplace(Observable::pauli("Z", {0}, n));
    x_.emplace(Observable::pauli("X", {n - 1}, n));
  }

  void run() {
    const ComplexMatrix& rho = rho_->matrix();
    const Enumerated plain = enumerate_outcomes(CircuitSpec::plain_rm(*rho_), kind_);
    const Enumerated hm2 = enumerate_outcomes(CircuitSpec::hybrid_moment(*rho_, 2), kind_);
    const Enumerated hm3 = enumerate_outcomes(CircuitSpec::hybrid_moment(*rho_, 3), kind_);

    auto snaps = [this](const Enumerated& e, const auto& hook) {
      std::vector<std::pair<double, ShadowSnapshot>> out;
      for (const auto& f : flatten(e)) out.emplace_back(f.w, hook(f.branch->record, kind_));
      return out;
    };
    const auto rho_snaps = snaps(plain, hooks_.snapshot_rho);
    const auto pow2_snaps = snaps(hm2, hooks_.snapshot_rho_pow_t);
    const auto pow3_snaps = snaps(hm3, hooks_.snapshot_rho_pow_t);

    // Snapshot expectations.
    check_matrix("snapshot_rho", "t=1", mean_of(rho_snaps), rho);
    check_matrix("snapshot_rho_pow_t", "t=2", mean_of(pow2_snaps), rho * rho);
    check_matrix("snapshot_rho_pow_t", "t=3", mean_of(pow3_snaps), rho * rho * rho);
    {
      const auto spec = CircuitSpec::hybrid_sigma({*rho_, *rho_}, {*z_});
      check_matrix("snapshot_sigma", "rho Z rho", mean_of(snaps(enumerate_outcomes(spec, kind_), hooks_.snapshot_sigma)),
                   rho * z_->embedded() * rho);
      const auto spec_ab = CircuitSpec::hybrid_sigma({*rho_, *rho_b_}, {*z_});
      check_matrix("snapshot_sigma", "rho1 Z rho2",
                   mean_of(snaps(enumerate_outcomes(spec_ab, kind_), hooks_.snapshot_sigma)),
                   rho * z_->embedded() * rho_b_->matrix());
      const auto spec3 = CircuitSpec::hybrid_sigma({*rho_, *rho_b_, *rho_}, {*z_, *x_});
      check_matrix("snapshot_sigma", "t=3 rho1 Z rho2 X rho1",
                   mean_of(snaps(enumerate_outcomes(spec3, kind_), hooks_.snapshot_sigma)),
                   rho * z_->embedded() * rho_b_->matrix() * x_->embedded() * rho);
    }

    // Products over independent settings and the four-register spectral
    // circuits grow quadratically in the ensemble size; large groups get the
    // within-setting checks only.
    const bool full = plain.unitaries.size() <= kFullCheckEnsembleSize;
    const double p3 = exact_moment(*rho_, 3);
    const double p4 = exact_moment(*rho_, 4);
    const EstimatorOptions no_boot{0, 0};

    // Kernel estimators on K = 2 shot pairs of one setting.
    check_scalar("estimate_p3_hr", "moment t=2",
                 expect_pairs(hm2, [&](const Dataset& d) { return estimate_p3_hr(d, kind_, no_boot).value; },
                              CircuitSpec::hybrid_moment(*rho_, 2)),
                 p3);
    check_scalar("estimate_p4_hr", "moment t=2",
                 expect_pairs(hm2, [&](const Dataset& d) { return estimate_p4_hr(d, kind_, no_boot).value; },
                              CircuitSpec::hybrid_moment(*rho_, 2)),
                 p4);
    for (const Observable* op : {&*z_, &*o_gen_}) {
      const std::string label = op == &*z_ ? "O=Z" : "O=random Hermitian";
      const VODecomposition vo = vo_decomposition(*op);
      const auto vo_spec = CircuitSpec::controlled_vo(*rho_, vo.v);
      const Enumerated vo_e = enumerate_outcomes(vo_spec, kind_);
      check_scalar("estimate_o3_hr", label,
                   expect_pairs(vo_e, [&](const Dataset& d) { return estimate_o3_hr(d, kind_, *op, no_boot).value; },
                                vo_spec),
                   exact_obs_moment(*rho_, *op, 3));
      check_scalar("estimate_o4_hr", label, expect_o4_hr(vo_e, hm2, vo_spec, *op), exact_obs_moment(*rho_, *op, 4));
      if (!full) continue;
      const SpectralDecomposition sd = spectral_decomposition(*op);
      const auto sp_spec = CircuitSpec::spectral_o(*rho_, sd.v, sd.lambda);
      const Enumerated sp_e = enumerate_outcomes(sp_spec, kind_);
      check_scalar("estimate_o3_spectral", label,
                   expect_pairs(sp_e,
                                [&](const Dataset& d) { return estimate_o3_spectral(d, kind_, sd.lambda, no_boot).value; },
                                sp_spec),
                   exact_obs_moment(*rho_, *op, 3));
      check_scalar("estimate_o4_spectral", label,
                   expect_pairs(sp_e,
                                [&](const Dataset& d) { return estimate_o4_spectral(d, kind_, sd.lambda, no_boot).value; },
                                sp_spec),
                   exact_obs_moment(*rho_, *op, 4));
    }
    {
      const auto spec = CircuitSpec::hybrid_sigma({*rho_, *rho_}, {*z_});
      const Enumerated e = enumerate_outcomes(spec, kind_);
      check_scalar("estimate_o3_hr", "HybridSigma O=Z",
                   expect_pairs(e, [&](const Dataset& d) { return estimate_o3_hr(d, kind_, *z_, no_boot).value; }, spec),
                   exact_obs_moment(*rho_, *z_, 3));
    }

    if (!full) return;

    // Patched shadow estimators over independent settings.
    const Observable& og = *o_gen_;
    check_scalar("estimate_p3_hs", "two datasets", expect_sets({pow2_snaps, rho_snaps}, [&](const auto& s) {
                   return estimate_p3_hs(set_of(SnapshotTarget::RhoPowT, 2, {s[0]}), set_of(SnapshotTarget::Rho, 1, {s[1]}),
                                         PairingMode::TwoDatasets, no_boot)
                       .value;
                 }),
                 p3);
    check_scalar("estimate_o3_hs", "O=random Hermitian", expect_sets({pow2_snaps, rho_snaps}, [&](const auto& s) {
                   return estimate_o3_hs(set_of(SnapshotTarget::RhoPowT, 2, {s[0]}),
                                         set_of(SnapshotTarget::Rho, 1, {s[1]}), og, no_boot)
                       .value;
                 }),
                 exact_obs_moment(*rho_, og, 3));
    check_scalar("estimate_p4_hs", "pairs", expect_sets({pow2_snaps, pow2_snaps}, [&](const auto& s) {
                   return estimate_p4_hs(set_of(SnapshotTarget::RhoPowT, 2, {s[0], s[1]}), no_boot).value;
                 }),
                 p4);
    check_scalar("estimate_o4_hs", "O=random Hermitian", expect_sets({pow2_snaps, pow2_snaps}, [&](const auto& s) {
                   return estimate_o4_hs(set_of(SnapshotTarget::RhoPowT, 2, {s[0], s[1]}), og, no_boot).value;
                 }),
                 exact_obs_moment(*rho_, og, 4));
    check_scalar("estimate_ot_hs", "t=2", expect_sets({pow2_snaps}, [&](const auto& s) {
                   return estimate_ot_hs(set_of(SnapshotTarget::RhoPowT, 2, {s[0]}), og, no_boot).value;
                 }),
                 exact_obs_moment(*rho_, og, 2));
    check_scalar("estimate_ot_hs", "t=3", expect_sets({pow3_snaps}, [&](const auto& s) {
                   return estimate_ot_hs(set_of(SnapshotTarget::RhoPowT, 3, {s[0]}), og, no_boot).value;
                 }),
                 exact_obs_moment(*rho_, og, 3));
    {
      const std::array<Observable, 2> boundary{*z_, *x_};
      const ComplexMatrix expect = rho * rho * z_->embedded() * rho * x_->embedded();
      check_scalar("estimate_fm_patched", "rho^2 Z rho X", expect_sets({pow2_snaps, rho_snaps}, [&](const auto& s) {
                     const std::array<ShadowSet, 2> sets{set_of(SnapshotTarget::RhoPowT, 2, {s[0]}),
                                                         set_of(SnapshotTarget::Rho, 1, {s[1]})};
                     return estimate_fm_patched(sets, boundary, no_boot).value;
                   }),
                   expect.trace());
    }

    // Single-copy estimators over m independent settings.
    check_scalar("estimate_pm_os", "m=2", expect_sets({rho_snaps, rho_snaps}, [&](const auto& s) {
                   return estimate_pm_os(set_of(SnapshotTarget::Rho, 1, {s[0], s[1]}), 2, no_boot).value;
                 }),
                 exact_moment(*rho_, 2));
    check_scalar("estimate_om_os", "m=2", expect_sets({rho_snaps, rho_snaps}, [&](const auto& s) {
                   return estimate_om_os(set_of(SnapshotTarget::Rho, 1, {s[0], s[1]}), og, 2, no_boot).value;
                 }),
                 exact_obs_moment(*rho_, og, 2));
    if (kind_.n_qubits == 1) {
      check_scalar("estimate_pm_os", "m=3", expect_sets({rho_snaps, rho_snaps, rho_snaps}, [&](const auto& s) {
                     return estimate_pm_os(set_of(SnapshotTarget::Rho, 1, {s[0], s[1], s[2]}), 3, no_boot).value;
                   }),
                   p3);
      check_scalar("estimate_om_os", "m=3", expect_sets({rho_snaps, rho_snaps, rho_snaps}, [&](const auto& s) {
                     return estimate_om_os(set_of(SnapshotTarget::Rho, 1, {s[0], s[1], s[2]}), og, 3, no_boot).value;
                   }),
                   exact_obs_moment(*rho_, og, 3));
    }

    // Swap test: the control mean reproduces Re tr(ρ^t).
    {
      const auto spec = CircuitSpec::swap_test({*rho_, *rho_, *rho_});
      const Enumerated e = enumerate_outcomes(spec, kind_);
      Complex acc{0.0, 0.0};
      for (const auto& f : flatten(e))
        acc += f.w * swap_test_statistic(one_setting(spec, kind_, e.unitaries[f.branch->setting], {f.branch->shot}),
                                         no_boot)
                         .value;
      check_scalar("swap_test_statistic", "t=3", acc, p3);
    }
  }

 private:
  ComplexMatrix mean_of(const std::vector<std::pair<double, ShadowSnapshot>>& snaps) const {
    const auto d = static_cast<Eigen::Index>(dim_of(kind_.n_qubits));
    ComplexMatrix acc = ComplexMatrix::Zero(d, d);
    for (const auto& [w, s] : snaps) acc += w * s.materialize();
    return acc;
  }

  // E over one setting and two independent shots of estimator(dataset{U; o, o'}).
  template <typename Fn>
  Complex expect_pairs(const Enumerated& e, Fn&& fn, const CircuitSpec& spec) const {
    Complex acc{0.0, 0.0};
    for (std::size_t u = 0; u < e.unitaries.size(); ++u)
      for (const auto& a : e.branches[u])
        for (const auto& b : e.branches[u])
          acc += e.weights[u] * a.p * b.p * fn(one_setting(spec, kind_, e.unitaries[u], {a.shot, b.shot}));
    return acc;
  }

  Complex expect_o4_hr(const Enumerated& vo, const Enumerated& moment, const CircuitSpec& vo_spec,
                       const Observable& op) const {
    const EstimatorOptions no_boot{0, 0};
    const auto moment_spec = CircuitSpec::hybrid_moment(*rho_, 2);
    Complex acc{0.0, 0.0};
    for (std::size_t u = 0; u < vo.unitaries.size(); ++u)
      for (const auto& a : vo.branches[u])
        for (const auto& b : moment.branches[u])
          acc += vo.weights[u] * a.p * b.p *
                 estimate_o4_hr(one_setting(vo_spec, kind_, vo.unitaries[u], {a.shot}),
                                one_setting(moment_spec, kind_, moment.unitaries[u], {b.shot}), kind_, op, no_boot)
                     .value;
    return acc;
  }

  void check_matrix(const std::string& name, const std::string& detail, const ComplexMatrix& got,
                    const ComplexMatrix& want) {
    push(name, detail, max_dev(got, want));
  }
  void check_scalar(const std::string& name, const std::string& detail, Complex got, Complex want) {
    push(name, detail, std::abs(got - want));
  }
  void push(const std::string& name, const std::string& detail, double dev) {
    report_.checks.push_back({name, kind_, detail, dev, dev < tol_});
  }

  EnsembleKind kind_;
  const OracleHooks& hooks_;
  double tol_;
  OracleReport& report_;
  std::optional<DensityMatrix> rho_, rho_b_;
  std::optional<Observable> o_gen_, z_, x_;
};

}  // namespace

OracleReport run_oracle_suite(int max_n, const OracleHooks& hooks, bool include_global_n2, double tolerance) {
  if (max_n < 1 || max_n > 2) throw std::invalid_argument("run_oracle_suite: max_n must be 1 or 2");
  std::vector<EnsembleKind> kinds{{EnsembleTag::LocalClifford, 1}, {EnsembleTag::GlobalClifford, 1}};
  if (max_n >= 2) {
    kinds.push_back({EnsembleTag::LocalClifford, 2});
    if (include_global_n2) kinds.push_back({EnsembleTag::GlobalClifford, 2});
  }
  OracleReport report;
  for (const auto& kind : kinds) OracleRunner(kind, hooks, tolerance, report).run();
  return report;
}

}  // namespace hyshadow
