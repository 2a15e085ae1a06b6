#pragma once

// Feasibility predicates over point subsets and three Boolean-influence
// estimators: exhaustive enumeration, seeded Monte-Carlo toggling, and
// sampling of the simulated quantum program. Influence of point i is the
// probability that flipping its selection bit flips the feasibility verdict
// of a uniformly random subset.

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrf/errors.hpp"
#include "qrf/oracle.hpp"
#include "qrf/qsim.hpp"
#include "qrf/rng.hpp"
#include "qrf/simplex.hpp"

namespace qrf::influence {

using SubsetMask = std::vector<std::uint8_t>;  // bit i selects point i

// 1 iff the selected values spread wider than two_epsilon. Empty and
// singleton selections are feasible, and so is a spread of exactly
// two_epsilon.
inline int feasibility_1d(const std::vector<double>& values, const SubsetMask& mask,
                          double two_epsilon) {
  if (values.size() != mask.size()) throw std::invalid_argument("mask length must match value count");
  if (!(two_epsilon >= 0.0)) throw std::invalid_argument("two_epsilon must be non-negative");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    if (!any) {
      lo = hi = values[i];
      any = true;
    } else {
      lo = std::min(lo, values[i]);
      hi = std::max(hi, values[i]);
    }
  }
  return (any && hi - lo > two_epsilon) ? 1 : 0;
}

struct LinearizedProblem {
  std::vector<std::vector<double>> a;  // N rows of dimension d
  std::vector<double> b;               // N scalars
  int dimension = 0;
};

inline void validate_problem(const LinearizedProblem& problem) {
  if (problem.a.empty() || problem.a.size() != problem.b.size())
    throw std::invalid_argument("problem needs matching non-empty rows");
  if (problem.dimension < 1) throw std::invalid_argument("problem dimension must be positive");
  for (const auto& row : problem.a)
    if (int(row.size()) != problem.dimension)
      throw std::invalid_argument("all rows must share the problem dimension");
}

// 1 iff no x satisfies |a_i^T x - b_i| <= epsilon over the selected rows.
// Decided by minimizing the Chebyshev bound t with a free x split into a
// difference of non-negative parts. Zero rows reduce to |b_i| <= epsilon and
// are settled before the solver.
inline int feasibility_linear(const LinearizedProblem& problem, const SubsetMask& mask,
                              double epsilon) {
  validate_problem(problem);
  if (mask.size() != problem.a.size()) throw std::invalid_argument("mask length must match row count");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");

  const int d = problem.dimension;
  std::vector<int> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    bool zero = true;
    for (double coef : problem.a[i]) zero &= coef == 0.0;
    if (zero) {
      if (std::abs(problem.b[i]) > epsilon) return 1;
    } else {
      rows.push_back(static_cast<int>(i));
    }
  }
  if (rows.empty()) return 0;

  // Variables: x+ (d), x- (d), t. Maximize -t.
  const int vars = 2 * d + 1;
  std::vector<std::vector<double>> lhs;
  std::vector<double> rhs;
  lhs.reserve(2 * rows.size());
  for (int i : rows) {
    std::vector<double> upper(vars, 0.0), lower(vars, 0.0);
    for (int j = 0; j < d; ++j) {
      upper[j] = problem.a[i][j];
      upper[d + j] = -problem.a[i][j];
      lower[j] = -problem.a[i][j];
      lower[d + j] = problem.a[i][j];
    }
    upper[2 * d] = lower[2 * d] = -1.0;
    lhs.push_back(std::move(upper));
    rhs.push_back(problem.b[i]);
    lhs.push_back(std::move(lower));
    rhs.push_back(-problem.b[i]);
  }
  std::vector<double> objective(vars, 0.0);
  objective[2 * d] = -1.0;

  const SimplexResult res = simplex_maximize(lhs, rhs, objective);
  // A large enough t satisfies every constraint, so the program is always
  // feasible and bounded.
  if (!std::isfinite(res.value))
    throw solver_error("Chebyshev program unsolved on " + std::to_string(rows.size()) + " rows");
  return -res.value <= epsilon + 1e-9 ? 0 : 1;
}

enum class InfluenceMethod { Exact, Sampled, Quantum };

inline const char* method_name(InfluenceMethod m) {
  switch (m) {
    case InfluenceMethod::Exact:
      return "exact";
    case InfluenceMethod::Sampled:
      return "sampled";
    default:
      return "quantum";
  }
}

struct InfluenceEstimate {
  std::vector<double> alphas;
  std::uint64_t iterations = 0;  // masks evaluated; 0 for closed-form marginals
  InfluenceMethod method = InfluenceMethod::Exact;
};

inline constexpr int kExhaustiveCap = 20;

namespace detail {

// One ensemble member: evaluates f at z and each single-bit toggle, adding
// verdict flips into alpha. f is called 1 + N times.
template <class F>
void accumulate_toggles(F&& oracle, SubsetMask& z, std::vector<double>& alpha) {
  const int f0 = oracle(z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] ^= 1u;
    if (oracle(z) != f0) alpha[i] += 1.0;
    z[i] ^= 1u;
  }
}

inline constexpr std::uint64_t kMaskStream = 0x6d61736b73ull;

}  // namespace detail

// Exact influences by enumeration of all 2^N subsets.
template <class F>
InfluenceEstimate influence_exact(F&& oracle, int n) {
  if (n < 1) throw std::invalid_argument("point count must be positive");
  if (n > kExhaustiveCap)
    throw resource_error("exhaustive influence capped at " + std::to_string(kExhaustiveCap) +
                         " points, got " + std::to_string(n));
  InfluenceEstimate est;
  est.method = InfluenceMethod::Exact;
  est.iterations = std::uint64_t(1) << n;
  est.alphas.assign(n, 0.0);
  SubsetMask z(n, 0);
  for (std::uint64_t m = 0; m < est.iterations; ++m) {
    for (int i = 0; i < n; ++i) z[i] = (m >> i) & 1u;
    detail::accumulate_toggles(oracle, z, est.alphas);
  }
  for (double& a : est.alphas) a /= double(est.iterations);
  return est;
}

// Influences over an explicit mask ensemble; the exhaustive enumeration fed
// through here reproduces influence_exact bit for bit.
template <class F>
InfluenceEstimate influence_over_masks(F&& oracle, int n, const std::vector<SubsetMask>& masks) {
  if (n < 1) throw std::invalid_argument("point count must be positive");
  if (masks.empty()) throw std::invalid_argument("mask ensemble must be non-empty");
  InfluenceEstimate est;
  est.method = InfluenceMethod::Sampled;
  est.iterations = masks.size();
  est.alphas.assign(n, 0.0);
  SubsetMask z;
  for (const SubsetMask& mask : masks) {
    if (int(mask.size()) != n) throw std::invalid_argument("mask length must match point count");
    z = mask;
    detail::accumulate_toggles(oracle, z, est.alphas);
  }
  for (double& a : est.alphas) a /= double(masks.size());
  return est;
}

// Monte-Carlo influences from M uniformly drawn subsets. Each iteration uses
// its own counter-derived substream, so results are independent of any
// evaluation order. Costs M(N+1) oracle calls.
template <class F>
InfluenceEstimate influence_sampled(F&& oracle, int n, int m, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("point count must be positive");
  if (m < 1) throw std::invalid_argument("iteration count must be positive");
  InfluenceEstimate est;
  est.method = InfluenceMethod::Sampled;
  est.iterations = std::uint64_t(m);
  est.alphas.assign(n, 0.0);
  SubsetMask z(n, 0);
  for (int j = 0; j < m; ++j) {
    SplitMix rng(derive_key(seed, {detail::kMaskStream, std::uint64_t(j)}));
    std::uint64_t word = 0;
    for (int i = 0; i < n; ++i) {
      if (i % 64 == 0) word = rng.next();
      z[i] = (word >> (i % 64)) & 1u;
    }
    detail::accumulate_toggles(oracle, z, est.alphas);
  }
  for (double& a : est.alphas) a /= double(m);
  return est;
}

namespace detail {

inline std::vector<double> quantum_marginals(const oracle::PointFitInstance& inst) {
  const oracle::OracleCircuit bv = oracle::build_bv_circuit(inst);
  qsim::QuantumState st = qsim::init_state(bv.layout.total, 0);
  qsim::apply_circuit(st, bv.circuit);
  const std::vector<double> dist = qsim::measurement_distribution(st, bv.layout.z);
  std::vector<double> marg(bv.layout.n, 0.0);
  for (std::size_t idx = 0; idx < dist.size(); ++idx)
    for (int i = 0; i < bv.layout.n; ++i)
      if ((idx >> i) & 1ull) marg[i] += dist[idx];
  return marg;
}

inline std::vector<double> apply_permutation(const std::vector<double>& sorted_alphas,
                                             const std::vector<int>& permutation) {
  std::vector<double> out(sorted_alphas.size(), 0.0);
  for (std::size_t k = 0; k < sorted_alphas.size(); ++k) out[permutation[k]] = sorted_alphas[k];
  return out;
}

}  // namespace detail

// Simulates the quantum program once and draws M measurement shots from the
// final state; per-bit shot means estimate the influences. The estimate is
// mapped back through the preprocessing permutation.
inline InfluenceEstimate influence_quantum(const oracle::PreparedPointFit& prepared, int m,
                                           std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("iteration count must be positive");
  const oracle::OracleCircuit bv = oracle::build_bv_circuit(prepared.instance);
  qsim::QuantumState st = qsim::init_state(bv.layout.total, 0);
  qsim::apply_circuit(st, bv.circuit);
  const auto shots = qsim::sample_measurement(st, bv.layout.z, m, seed);
  std::vector<double> sorted_alphas(bv.layout.n, 0.0);
  for (const auto& shot : shots)
    for (int i = 0; i < bv.layout.n; ++i)
      if (shot.bits[i] == '1') sorted_alphas[i] += 1.0;
  for (double& a : sorted_alphas) a /= double(m);
  InfluenceEstimate est;
  est.method = InfluenceMethod::Quantum;
  est.iterations = std::uint64_t(m);
  est.alphas = detail::apply_permutation(sorted_alphas, prepared.permutation);
  return est;
}

inline InfluenceEstimate influence_quantum(const oracle::PointFitInstance& inst, int m,
                                           std::uint64_t seed) {
  oracle::PreparedPointFit prepared;
  prepared.instance = inst;
  prepared.permutation.resize(inst.values.size());
  for (std::size_t i = 0; i < inst.values.size(); ++i) prepared.permutation[i] = int(i);
  return influence_quantum(prepared, m, seed);
}

// Closed-form variant: reads the exact per-bit marginals off the final state
// instead of sampling.
inline InfluenceEstimate influence_quantum_exact(const oracle::PreparedPointFit& prepared) {
  InfluenceEstimate est;
  est.method = InfluenceMethod::Quantum;
  est.iterations = 0;
  est.alphas = detail::apply_permutation(detail::quantum_marginals(prepared.instance),
                                         prepared.permutation);
  return est;
}

inline InfluenceEstimate influence_quantum_exact(const oracle::PointFitInstance& inst) {
  oracle::PreparedPointFit prepared;
  prepared.instance = inst;
  prepared.permutation.resize(inst.values.size());
  for (std::size_t i = 0; i < inst.values.size(); ++i) prepared.permutation[i] = int(i);
  return influence_quantum_exact(prepared);
}

// Two-sided Hoeffding lower bound on Pr(|estimate - truth| <= delta) after M
// samples. Can be negative for tiny M delta^2; reported as-is.
inline double hoeffding_bound(int m, double delta) {
  if (m < 1) throw std::invalid_argument("iteration count must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("deviation must be positive");
  return 1.0 - 2.0 * std::exp(-2.0 * double(m) * delta * delta);
}

// CSV block of (index, influence, method, M) rows for plotting.
inline void write_influence_csv(std::ostream& os, const InfluenceEstimate& est) {
  os << "index,influence,method,M\n";
  const auto flags = os.flags();
  const auto precision = os.precision();
  os.precision(12);
  os.unsetf(std::ios::floatfield);
  for (std::size_t i = 0; i < est.alphas.size(); ++i)
    os << i << ',' << est.alphas[i] << ',' << method_name(est.method) << ',' << est.iterations << '\n';
  os.flags(flags);
  os.precision(precision);
}

}  // namespace qrf::influence
