// End-to-end acceptance checks. Each case measures one documented behavior
// at its stated tolerance and prints a single PASS/FAIL verdict line.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qrf/geometry.hpp"
#include "qrf/influence.hpp"
#include "qrf/oracle.hpp"
#include "qrf/pipeline.hpp"
#include "qrf/qsim.hpp"
#include "qrf/rng.hpp"

using namespace qrf;

namespace {

void verdict(bool ok, const std::string& line) {
  std::cout << (ok ? "PASS " : "FAIL ") << line << std::endl;
  REQUIRE(ok);
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct ReferenceInstance {
  std::vector<double> values;
  int bits;
  double two_epsilon;
  std::vector<double> alphas;
  int base_qubits;  // 3N + 2C + 1
};

// The seven desk-scale reference instances with their true influences. The
// middle influence of {2,4,7} at 2eps=3 is 0: the triple's spread equals the
// extreme pair's spread, so toggling the middle point inside {2,7} never
// flips the predicate, and 0.25 would need 2 <= 2eps < 3.
const std::vector<ReferenceInstance>& reference_instances() {
  static const std::vector<ReferenceInstance> rows = {
      {{0, 1}, 1, 0, {0.5, 0.5}, 9},
      {{0, 1}, 1, 1, {0.0, 0.0}, 9},
      {{0, 2}, 2, 1, {0.5, 0.5}, 11},
      {{0, 2}, 3, 1, {0.5, 0.5}, 13},
      {{0, 2}, 3, 2, {0.0, 0.0}, 13},
      {{2, 4, 7}, 3, 3, {0.5, 0.0, 0.5}, 16},
      {{7, 5, 3, 2}, 3, 2, {0.5, 0.25, 0.25, 0.5}, 19},
  };
  return rows;
}

std::vector<double> enumerated_influence(const oracle::PointFitInstance& inst) {
  const int n = static_cast<int>(inst.values.size());
  std::vector<double> alpha(n, 0.0);
  for (std::uint32_t z = 0; z < (1u << n); ++z) {
    const int f = oracle::instance_predicate(inst, z);
    for (int i = 0; i < n; ++i)
      if (f != oracle::instance_predicate(inst, z ^ (1u << i))) alpha[i] += 1.0;
  }
  for (double& a : alpha) a /= double(1u << n);
  return alpha;
}

std::uint64_t with_field(std::uint64_t basis, const std::vector<int>& reg, std::uint64_t value) {
  for (std::size_t i = 0; i < reg.size(); ++i)
    if ((value >> i) & 1ull) basis |= 1ull << reg[i];
  return basis;
}

struct Dominant {
  std::uint64_t basis = 0;
  double prob = 0.0;
};

Dominant dominant_basis(const qsim::QuantumState& st) {
  Dominant best;
  for (std::size_t i = 0; i < st.amps.size(); ++i) {
    const double p = std::norm(st.amps[i]);
    if (p > best.prob) best = {i, p};
  }
  return best;
}

qsim::QuantumState run_on_basis(const qsim::Circuit& c, std::uint64_t basis) {
  qsim::QuantumState st = qsim::init_state(c.num_qubits, basis);
  qsim::apply_circuit(st, c);
  return st;
}

influence::SubsetMask mask_from_index(std::uint32_t bits, int n) {
  influence::SubsetMask z(std::size_t(n), 0);
  for (int i = 0; i < n; ++i) z[std::size_t(i)] = std::uint8_t((bits >> i) & 1u);
  return z;
}

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(QRF_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  REQUIRE(status == 0);
  return out;
}

}  // namespace

TEST_CASE("reference instances reproduce their exact influences within one second") {
  const auto start = std::chrono::steady_clock::now();
  bool all_equal = true;
  for (const auto& row : reference_instances()) {
    const auto est = influence::influence_exact(
        [&](const influence::SubsetMask& z) {
          return influence::feasibility_1d(row.values, z, row.two_epsilon);
        },
        int(row.values.size()));
    REQUIRE(est.alphas.size() == row.alphas.size());
    for (std::size_t i = 0; i < est.alphas.size(); ++i)
      all_equal = all_equal && est.alphas[i] == row.alphas[i];
  }
  const double elapsed = seconds_since(start);
  std::ostringstream line;
  line << "exact influences of all 7 reference instances match rationally, " << elapsed << " s";
  verdict(all_equal && elapsed < 1.0, line.str());
}

TEST_CASE("oracle circuits reproduce the spread predicate and restore every ancilla") {
  const auto start = std::chrono::steady_clock::now();
  bool all_ok = true;
  int checked = 0;
  for (const auto& row : reference_instances()) {
    const auto prep = oracle::preprocess(row.values, row.bits, row.two_epsilon);
    const auto uf = oracle::build_uf(prep.instance);
    const auto d = oracle::detail::build_block_d(prep.instance, uf.layout);
    const int n = uf.layout.n;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      const int f = oracle::instance_predicate(prep.instance, mask);

      // Block D writes f onto its output wire (absent wire means f == 0).
      const auto after_d = dominant_basis(run_on_basis(d.circuit, with_field(0, uf.layout.z, mask)));
      all_ok = all_ok && std::abs(after_d.prob - 1.0) < 1e-9;
      const int d_bit = d.f_output ? int((after_d.basis >> *d.f_output) & 1ull) : 0;
      all_ok = all_ok && d_bit == f;

      // Full oracle: z preserved, y xored with f, every ancilla back to zero.
      for (int y = 0; y < 2; ++y) {
        std::uint64_t basis = with_field(0, uf.layout.z, mask);
        if (y) basis |= 1ull << uf.layout.y;
        const auto dom = dominant_basis(run_on_basis(uf.circuit, basis));
        std::uint64_t expect = with_field(0, uf.layout.z, mask);
        if (y ^ f) expect |= 1ull << uf.layout.y;
        all_ok = all_ok && std::abs(dom.prob - 1.0) < 1e-9 && dom.basis == expect;
        ++checked;
      }
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream line;
  line << "truth tables and ancilla restoration verified on " << checked
       << " basis inputs within 1e-9, " << elapsed << " s";
  verdict(all_ok && elapsed < 30.0, line.str());
}

TEST_CASE("measured circuit marginals equal enumerated influences to nine digits") {
  bool all_ok = true;
  double worst = 0.0;
  for (const auto& row : reference_instances()) {
    const auto prep = oracle::preprocess(row.values, row.bits, row.two_epsilon);
    const auto bv = oracle::build_bv_circuit(prep.instance);
    const qsim::QuantumState st = run_on_basis(bv.circuit, 0);
    const std::vector<double> dist = qsim::measurement_distribution(st, bv.layout.z);
    std::vector<double> marg(std::size_t(bv.layout.n), 0.0);
    for (std::size_t idx = 0; idx < dist.size(); ++idx)
      for (int i = 0; i < bv.layout.n; ++i)
        if ((idx >> i) & 1ull) marg[std::size_t(i)] += dist[idx];
    const std::vector<double> expect = enumerated_influence(prep.instance);
    for (std::size_t i = 0; i < marg.size(); ++i) {
      worst = std::max(worst, std::abs(marg[i] - expect[i]));
      all_ok = all_ok && std::abs(marg[i] - expect[i]) < 1e-9;
    }
  }
  std::ostringstream line;
  line << "exact measurement marginals match enumeration on all instances, worst gap " << worst;
  verdict(all_ok, line.str());
}

TEST_CASE("sampled estimates tighten with the shot budget at the documented rate") {
  const std::vector<double> data{7, 5, 3, 2};
  const std::vector<double> truth{0.5, 0.25, 0.25, 0.5};
  const auto prep = oracle::preprocess(data, 3, 2.0);
  const auto bv = oracle::build_bv_circuit(prep.instance);
  qsim::QuantumState st = qsim::init_state(bv.layout.total, 0);
  qsim::apply_circuit(st, bv.circuit);

  const std::array<int, 3> budgets{50, 200, 1000};
  std::array<double, 3> mean_err{};
  int within_at_1000 = 0;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto shots = qsim::sample_measurement(st, bv.layout.z, budgets[b], seed);
      std::vector<double> sorted_alpha(4, 0.0);
      for (const auto& shot : shots)
        for (int i = 0; i < 4; ++i)
          if (shot.bits[std::size_t(i)] == '1') sorted_alpha[std::size_t(i)] += 1.0;
      double max_err = 0.0;
      for (int i = 0; i < 4; ++i) {
        const double alpha = sorted_alpha[std::size_t(i)] / double(budgets[b]);
        max_err = std::max(max_err, std::abs(alpha - truth[std::size_t(prep.permutation[i])]));
      }
      mean_err[b] += max_err;
      if (b == 2 && max_err < 0.05) ++within_at_1000;
    }
    mean_err[b] /= 100.0;
  }
  const bool monotone = mean_err[2] < mean_err[1] && mean_err[1] < mean_err[0];
  std::ostringstream line;
  line << "mean worst-bit error " << mean_err[0] << " -> " << mean_err[1] << " -> " << mean_err[2]
       << " over 50/200/1000 shots; " << within_at_1000 << "/100 seeds within 0.05 at 1000";
  verdict(monotone && within_at_1000 >= 99, line.str());
}

TEST_CASE("register accounting matches the layout arithmetic") {
  bool all_ok = true;
  std::ostringstream sizes;
  for (const auto& row : reference_instances()) {
    const auto prep = oracle::preprocess(row.values, row.bits, row.two_epsilon);
    const auto lay = oracle::make_layout(prep.instance);
    const int n = int(row.values.size());
    const int base = 3 * n + 2 * row.bits + 1;
    all_ok = all_ok && base == row.base_qubits;
    all_ok = all_ok && lay.total == base + (lay.b0 >= 0 ? 1 : 0);
    sizes << (sizes.tellp() > 0 ? "," : "") << lay.total;
  }
  const auto widest = oracle::make_layout(oracle::preprocess({7, 5, 3, 2}, 3, 2.0).instance);
  all_ok = all_ok && widest.total == 20 && widest.b0 >= 0;
  std::ostringstream line;
  line << "layout totals " << sizes.str() << " follow 3N+2C+1 plus borrow; widest instance uses 20";
  verdict(all_ok, line.str());
}

TEST_CASE("linear feasibility agrees with the one-dimensional rule everywhere") {
  SplitMix rng(0x11d00d);
  int mismatches = 0;
  long long compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + int(rng.below(8));
    std::vector<double> values(static_cast<std::size_t>(n));
    for (double& v : values) v = rng.uniform() * 10.0;
    const double eps = rng.uniform() * 3.0;
    influence::LinearizedProblem p;
    p.dimension = 1;
    for (double v : values) {
      p.a.push_back({1.0});
      p.b.push_back(v);
    }
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      const influence::SubsetMask z = mask_from_index(bits, n);
      mismatches +=
          influence::feasibility_linear(p, z, eps) != influence::feasibility_1d(values, z, 2.0 * eps);
      ++compared;
    }
  }
  std::ostringstream line;
  line << mismatches << " mismatches across " << compared << " mask evaluations on 200 instances";
  verdict(mismatches == 0, line.str());
}

TEST_CASE("synthetic benchmark separates outliers and holds the baseline recall") {
  const auto start = std::chrono::steady_clock::now();
  pipeline::CircuitCache cache;
  pipeline::AccumulationOptions options;
  options.circuit_cache = &cache;

  std::vector<double> aucs;
  double recall = 0.0, baseline_recall = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto scene = geometry::synthesize_scene(100, 0.3, 0.5, 640, 480, seed);
    pipeline::AccumulationConfig config;
    config.epsilon = 0.6;
    config.m = 200;
    config.t = 200;
    config.h = 50;
    config.engine = pipeline::Engine::Quantum1D;
    config.bits = 3;
    config.seed = seed;
    const auto report = pipeline::run_experiment(pipeline::input_from_scene(scene), config, options);
    REQUIRE(report.auc.has_value());
    REQUIRE(report.accurate.has_value());
    REQUIRE(report.baseline_accurate.has_value());
    aucs.push_back(*report.auc);
    recall += *report.accurate ? 1.0 : 0.0;
    baseline_recall += *report.baseline_accurate ? 1.0 : 0.0;
  }
  recall /= 20.0;
  baseline_recall /= 20.0;
  std::sort(aucs.begin(), aucs.end());
  const double median_auc = 0.5 * (aucs[9] + aucs[10]);
  const double elapsed = seconds_since(start);

  std::ostringstream line;
  line << "median AUC " << median_auc << " (> 0.85), recall " << recall << " vs baseline "
       << baseline_recall << " (- 0.05), " << elapsed << " s";
  verdict(median_auc > 0.85 && recall >= baseline_recall - 0.05 && elapsed < 600.0, line.str());
}

TEST_CASE("repeated command line runs emit byte-identical output") {
  const std::vector<std::string> invocations = {
      "influence1d --values 2,3,5,7 --two-eps 2 --method sampled -M 500 --seed 3 --json",
      "bv-sim --values 7,5,3,2 --bits 3 --two-eps 2 --shots 400 --seed 9 --json",
      "fit-f --synthetic n=60,outliers=0.3,noise=0.5 -T 40 -M 100 --seed 7",
      "bench --scenes 2 --points 40 -T 30 -M 100 --seed 5 --json",
  };
  bool all_identical = true;
  for (const auto& args : invocations) {
    const std::string first = run_cli(args);
    const std::string second = run_cli(args);
    REQUIRE(!first.empty());
    all_identical = all_identical && first == second;
  }
  std::ostringstream line;
  line << invocations.size() << " seeded invocations each reproduced their bytes exactly";
  verdict(all_identical, line.str());
}
