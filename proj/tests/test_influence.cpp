#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "qrf/influence.hpp"
#include "qrf/oracle.hpp"
#include "qrf/rng.hpp"

using namespace qrf;
using influence::SubsetMask;
using Catch::Matchers::WithinAbs;

namespace {

auto spread_oracle(const std::vector<double>& values, double two_epsilon) {
  return [&values, two_epsilon](const SubsetMask& z) {
    return influence::feasibility_1d(values, z, two_epsilon);
  };
}

influence::LinearizedProblem one_dim_problem(const std::vector<double>& values) {
  influence::LinearizedProblem p;
  p.dimension = 1;
  for (double v : values) {
    p.a.push_back({1.0});
    p.b.push_back(v);
  }
  return p;
}

SubsetMask mask_from_index(std::uint32_t bits, int n) {
  SubsetMask z(n, 0);
  for (int i = 0; i < n; ++i) z[i] = (bits >> i) & 1u;
  return z;
}

struct RefRow {
  std::vector<std::uint32_t> values;
  int c;
  std::uint32_t eps;
  std::vector<double> alphas;
};

const std::vector<RefRow>& reference_rows() {
  static const std::vector<RefRow> rows = {
      {{1, 0}, 1, 0, {0.5, 0.5}},
      {{1, 0}, 1, 1, {0.0, 0.0}},
      {{2, 0}, 2, 1, {0.5, 0.5}},
      {{2, 0}, 3, 1, {0.5, 0.5}},
      {{2, 0}, 3, 2, {0.0, 0.0}},
      {{5, 2, 0}, 3, 3, {0.5, 0.0, 0.5}},
      {{5, 3, 1, 0}, 3, 2, {0.5, 0.25, 0.25, 0.5}},
  };
  return rows;
}

oracle::PointFitInstance make_inst(std::vector<std::uint32_t> values, int c, std::uint32_t eps) {
  oracle::PointFitInstance out;
  out.values = std::move(values);
  out.bit_precision = c;
  out.two_epsilon = eps;
  return out;
}

}  // namespace

TEST_CASE("one-dimensional feasibility follows the spread rule") {
  const std::vector<double> values = {7, 5, 3, 2};
  CHECK(influence::feasibility_1d(values, {1, 1, 0, 0}, 2.0) == 0);
  CHECK(influence::feasibility_1d(values, {0, 0, 0, 0}, 2.0) == 0);
  CHECK(influence::feasibility_1d(values, {1, 0, 1, 1}, 2.0) == 1);
  CHECK(influence::feasibility_1d(values, {0, 0, 1, 0}, 0.0) == 0);
  CHECK(influence::feasibility_1d(values, {0, 1, 1, 0}, 2.0) == 0);  // boundary spread is feasible
  CHECK_THROWS_AS(influence::feasibility_1d(values, {1, 1}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(influence::feasibility_1d(values, {1, 1, 0, 0}, -1.0), std::invalid_argument);
}

TEST_CASE("linear feasibility solves the Chebyshev program") {
  SECTION("two parallel constraints out of reach") {
    influence::LinearizedProblem p = one_dim_problem({0.0, 10.0});
    CHECK(influence::feasibility_linear(p, {1, 1}, 1.0) == 1);
    CHECK(influence::feasibility_linear(p, {1, 1}, 5.0) == 0);
    CHECK(influence::feasibility_linear(p, {1, 0}, 0.0) == 0);
    CHECK(influence::feasibility_linear(p, {0, 0}, 0.0) == 0);
  }
  SECTION("zero rows reduce to their constants") {
    influence::LinearizedProblem p;
    p.dimension = 2;
    p.a = {{0.0, 0.0}, {1.0, 2.0}};
    p.b = {0.5, 3.0};
    CHECK(influence::feasibility_linear(p, {1, 1}, 0.4) == 1);
    CHECK(influence::feasibility_linear(p, {1, 1}, 0.6) == 0);
    CHECK(influence::feasibility_linear(p, {0, 1}, 0.0) == 0);
  }
  SECTION("agrees with the one-dimensional rule on random instances") {
    SplitMix rng(0x11d00d);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + int(rng.below(8));
      std::vector<double> values(n);
      for (double& v : values) v = rng.uniform() * 10.0;
      const double eps = rng.uniform() * 3.0;
      const influence::LinearizedProblem p = one_dim_problem(values);
      for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        const SubsetMask z = mask_from_index(bits, n);
        CHECK(influence::feasibility_linear(p, z, eps) ==
              influence::feasibility_1d(values, z, 2.0 * eps));
      }
    }
  }
  SECTION("infeasibility is monotone under growing selections") {
    SplitMix rng(0xfeed);
    for (int trial = 0; trial < 30; ++trial) {
      influence::LinearizedProblem p;
      p.dimension = 2;
      const int n = 8;
      for (int i = 0; i < n; ++i) {
        p.a.push_back({rng.normal(), rng.normal()});
        p.b.push_back(rng.normal() * 5.0);
      }
      for (int pair = 0; pair < 20; ++pair) {
        const std::uint32_t z1 = std::uint32_t(rng.below(1u << n));
        const std::uint32_t z2 = std::uint32_t(rng.below(1u << n));
        const int f1 = influence::feasibility_linear(p, mask_from_index(z1, n), 0.5);
        const int f12 = influence::feasibility_linear(p, mask_from_index(z1 | z2, n), 0.5);
        CHECK(f1 <= f12);
      }
    }
  }
  SECTION("malformed problems are rejected") {
    influence::LinearizedProblem p;
    CHECK_THROWS_AS(influence::feasibility_linear(p, {}, 1.0), std::invalid_argument);
    p.dimension = 2;
    p.a = {{1.0}};
    p.b = {0.0};
    CHECK_THROWS_AS(influence::feasibility_linear(p, {1}, 1.0), std::invalid_argument);
  }
}

TEST_CASE("exact influence enumerates every subset") {
  SECTION("four-point reference data") {
    const std::vector<double> values = {2, 3, 5, 7};
    const auto est = influence::influence_exact(spread_oracle(values, 2.0), 4);
    REQUIRE(est.alphas.size() == 4);
    CHECK_THAT(est.alphas[0], WithinAbs(0.50, 1e-12));
    CHECK_THAT(est.alphas[1], WithinAbs(0.25, 1e-12));
    CHECK_THAT(est.alphas[2], WithinAbs(0.25, 1e-12));
    CHECK_THAT(est.alphas[3], WithinAbs(0.50, 1e-12));
    CHECK(est.method == influence::InfluenceMethod::Exact);
    CHECK(est.iterations == 16);
  }
  SECTION("threshold at the span kills all influence") {
    const std::vector<double> pair = {0, 1};
    const auto est = influence::influence_exact(spread_oracle(pair, 1.0), 2);
    CHECK_THAT(est.alphas[0], WithinAbs(0.0, 1e-12));
    CHECK_THAT(est.alphas[1], WithinAbs(0.0, 1e-12));
    const std::vector<double> wide = {1, 4, 9};
    const auto zeros = influence::influence_exact(spread_oracle(wide, 8.0), 3);
    for (double a : zeros.alphas) CHECK_THAT(a, WithinAbs(0.0, 1e-12));
  }
  SECTION("values are multiples of the pair weight") {
    SplitMix rng(7);
    std::vector<double> values(6);
    for (double& v : values) v = rng.uniform() * 20.0;
    const auto est = influence::influence_exact(spread_oracle(values, 3.0), 6);
    for (double a : est.alphas) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      const double scaled = a * 32.0;  // 2^{N-1}
      CHECK_THAT(scaled, WithinAbs(std::round(scaled), 1e-9));
    }
  }
  SECTION("enumeration cap") {
    auto constant = [](const SubsetMask&) { return 0; };
    CHECK_THROWS_AS(influence::influence_exact(constant, 21), resource_error);
    CHECK_THROWS_AS(influence::influence_exact(constant, 0), std::invalid_argument);
  }
}

TEST_CASE("sampled influence converges and caches oracle calls") {
  SECTION("three-point convergence at fixed seed") {
    const std::vector<double> values = {2, 4, 7};
    const auto est = influence::influence_sampled(spread_oracle(values, 3.0), 3, 10000, 42);
    REQUIRE(est.alphas.size() == 3);
    CHECK_THAT(est.alphas[0], WithinAbs(0.50, 0.02));
    CHECK_THAT(est.alphas[1], WithinAbs(0.00, 0.02));
    CHECK_THAT(est.alphas[2], WithinAbs(0.50, 0.02));
    CHECK(est.method == influence::InfluenceMethod::Sampled);
    CHECK(est.iterations == 10000);
  }
  SECTION("constant oracle yields zeros") {
    auto constant = [](const SubsetMask&) { return 1; };
    const auto est = influence::influence_sampled(constant, 5, 64, 3);
    for (double a : est.alphas) CHECK(a == 0.0);
  }
  SECTION("oracle call count is M(N+1)") {
    int calls = 0;
    auto counting = [&calls](const SubsetMask&) {
      ++calls;
      return 0;
    };
    influence::influence_sampled(counting, 5, 7, 0);
    CHECK(calls == 7 * 6);
  }
  SECTION("exhaustive ensemble reproduces the exact method") {
    const std::vector<double> values = {2, 3, 5, 7};
    std::vector<SubsetMask> all;
    for (std::uint32_t bits = 0; bits < 16; ++bits) all.push_back(mask_from_index(bits, 4));
    const auto ensemble = influence::influence_over_masks(spread_oracle(values, 2.0), 4, all);
    const auto exact = influence::influence_exact(spread_oracle(values, 2.0), 4);
    REQUIRE(ensemble.alphas.size() == exact.alphas.size());
    for (std::size_t i = 0; i < exact.alphas.size(); ++i) CHECK(ensemble.alphas[i] == exact.alphas[i]);
  }
  SECTION("estimates stay accurate across seeds") {
    const std::vector<double> values = {2, 3, 5, 7};
    const std::vector<double> truth = {0.50, 0.25, 0.25, 0.50};
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto est = influence::influence_sampled(spread_oracle(values, 2.0), 4, 1000, seed);
      for (std::size_t i = 0; i < truth.size(); ++i)
        worst = std::max(worst, std::abs(est.alphas[i] - truth[i]));
    }
    CHECK(worst < 0.06);
  }
}

TEST_CASE("quantum estimates match their classical counterparts") {
  SECTION("four integer points, sampled") {
    const auto prep = oracle::preprocess({7, 5, 3, 2}, 3, 2.0);
    const auto est = influence::influence_quantum(prep, 1000, 11);
    REQUIRE(est.alphas.size() == 4);
    CHECK_THAT(est.alphas[0], WithinAbs(0.50, 0.05));
    CHECK_THAT(est.alphas[1], WithinAbs(0.25, 0.05));
    CHECK_THAT(est.alphas[2], WithinAbs(0.25, 0.05));
    CHECK_THAT(est.alphas[3], WithinAbs(0.50, 0.05));
    CHECK(est.method == influence::InfluenceMethod::Quantum);
  }
  SECTION("two points at unit spread") {
    const auto prep = oracle::preprocess({0, 1}, 1, 0.0);
    const auto est = influence::influence_quantum(prep, 1000, 5);
    CHECK_THAT(est.alphas[0], WithinAbs(0.50, 0.05));
    CHECK_THAT(est.alphas[1], WithinAbs(0.50, 0.05));
  }
  SECTION("exact marginals equal exhaustive enumeration") {
    for (const auto& row : reference_rows()) {
      const auto inst = make_inst(row.values, row.c, row.eps);
      const auto quantum = influence::influence_quantum_exact(inst);
      std::vector<double> as_doubles(inst.values.begin(), inst.values.end());
      const auto exact =
          influence::influence_exact(spread_oracle(as_doubles, double(inst.two_epsilon)),
                                     int(inst.values.size()));
      REQUIRE(quantum.alphas.size() == exact.alphas.size());
      for (std::size_t i = 0; i < exact.alphas.size(); ++i) {
        CHECK_THAT(quantum.alphas[i], WithinAbs(exact.alphas[i], 1e-9));
        CHECK_THAT(quantum.alphas[i], WithinAbs(row.alphas[i], 1e-9));
      }
    }
  }
  SECTION("permutation maps estimates back to caller order") {
    const auto prep = oracle::preprocess({0, 1, 5}, 3, 1.0);
    const auto quantum = influence::influence_quantum_exact(prep);
    const std::vector<double> values = {0, 1, 5};
    const auto exact = influence::influence_exact(spread_oracle(values, 1.0), 3);
    REQUIRE(quantum.alphas.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(quantum.alphas[i], WithinAbs(exact.alphas[i], 1e-9));
    CHECK_THAT(quantum.alphas[2], WithinAbs(0.75, 1e-9));  // asymmetric, so the mapping is visible
  }
  SECTION("oversized instances are refused") {
    oracle::PointFitInstance big;
    big.bit_precision = 3;
    big.values.assign(8, 0);
    CHECK_THROWS_AS(influence::influence_quantum_exact(big), resource_error);
  }
}

TEST_CASE("confidence bound follows the two-sided formula") {
  CHECK_THAT(influence::hoeffding_bound(1000, 0.05), WithinAbs(1.0 - 2.0 * std::exp(-5.0), 1e-12));
  CHECK(influence::hoeffding_bound(1000, 0.05) > 0.98);
  CHECK(influence::hoeffding_bound(2000, 0.05) > influence::hoeffding_bound(1000, 0.05));
  CHECK_THAT(influence::hoeffding_bound(1, 1e-9), WithinAbs(-1.0, 1e-6));
  CHECK_THROWS_AS(influence::hoeffding_bound(0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(influence::hoeffding_bound(10, 0.0), std::invalid_argument);
}

TEST_CASE("outliers dominate inliers in exact influence") {
  const std::vector<double> values = {10.0, 10.2, 10.4, 17.0, 3.0};
  const auto est = influence::influence_exact(spread_oracle(values, 0.5), 5);
  const double inlier_max = std::max({est.alphas[0], est.alphas[1], est.alphas[2]});
  const double outlier_min = std::min(est.alphas[3], est.alphas[4]);
  CHECK(outlier_min > inlier_max);
}

TEST_CASE("influence CSV lists one row per point") {
  influence::InfluenceEstimate est;
  est.alphas = {0.5, 0.25};
  est.iterations = 16;
  est.method = influence::InfluenceMethod::Exact;
  std::ostringstream os;
  influence::write_influence_csv(os, est);
  CHECK(os.str() == "index,influence,method,M\n0,0.5,exact,16\n1,0.25,exact,16\n");
}
