#pragma once

// Influence accumulation for fundamental-matrix fitting: sample minimal
// 8-point hypotheses, score every correspondence by its Boolean influence on
// the per-hypothesis residual feasibility test, average log-influences across
// hypotheses, then sweep an influence threshold grid and keep the candidate
// model with the largest consensus. A plain RANSAC baseline and a seeded
// experiment driver sit alongside.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "qrf/errors.hpp"
#include "qrf/geometry.hpp"
#include "qrf/influence.hpp"
#include "qrf/oracle.hpp"
#include "qrf/qsim.hpp"
#include "qrf/rng.hpp"

namespace qrf::pipeline {

enum class Engine { Classical1D, Quantum1D };

inline const char* engine_name(Engine e) {
  return e == Engine::Classical1D ? "classical-1d" : "quantum-1d";
}

inline Engine parse_engine(const std::string& name) {
  if (name == "classical-1d") return Engine::Classical1D;
  if (name == "quantum-1d") return Engine::Quantum1D;
  throw std::invalid_argument("unknown engine '" + name + "'");
}

struct AccumulationConfig {
  double epsilon = 0.6;  // inlier threshold on linearized residuals
  int m = 1000;          // influence iterations per hypothesis
  int t = 1000;          // hypothesis count
  int h = 50;            // threshold-grid size
  Engine engine = Engine::Classical1D;
  int bits = 3;  // quantization precision, quantum engine only
  std::uint64_t seed = 0;
};

inline void validate_config(const AccumulationConfig& config) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (config.m < 1 || config.t < 1 || config.h < 1)
    throw std::invalid_argument("M, T and H must be at least 1");
  if (config.bits < 1 || config.bits > 31)
    throw std::invalid_argument("quantization bits must be in [1, 31]");
}

// Deterministic work counters; they stand in for wall-clock timings inside
// reports so identical seeds give identical bytes.
struct WorkCounters {
  std::uint64_t hypotheses = 0;
  std::uint64_t resamples = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t circuit_runs = 0;
  std::uint64_t shots = 0;
};

struct AccumulatedInfluence {
  std::vector<double> influences;  // min-max normalized to [0, 1]
  WorkCounters counters;
};

// Measurement distributions keyed by quantized instance; entries are exact,
// so sharing a cache across runs changes circuit_runs but never an estimate.
struct CircuitCache {
  std::map<std::tuple<std::vector<std::uint32_t>, int, std::uint32_t>, std::vector<double>>
      distributions;
};

// Test instrumentation: inject the minimal subsets instead of sampling them
// and/or replace Monte-Carlo influence with exhaustive enumeration.
struct AccumulationOptions {
  std::vector<std::vector<int>> fixed_subsets;
  bool exact_influence = false;
  CircuitCache* circuit_cache = nullptr;
};

namespace detail {

inline constexpr std::uint64_t kSubsetStream = 0x73756273ull;
inline constexpr std::uint64_t kDrawStream = 0x64726177ull;
inline constexpr std::uint64_t kBatchStream = 0x62617463ull;
inline constexpr std::uint64_t kShotStream = 0x73686f74ull;

inline std::vector<int> sample_subset(int n, int k, SplitMix& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) std::swap(idx[i], idx[i + int(rng.below(std::uint64_t(n - i)))]);
  idx.resize(k);
  return idx;
}

inline Eigen::Matrix3d matrix_from_model(const std::vector<double>& x) {
  Eigen::Matrix3d f;
  f << 1.0, x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7];
  return f;
}

// Fixes the leading entry of the fitted matrix to one and reads off the
// remaining eight as the linear model. Fails when that entry vanishes.
inline bool dehomogenize(const geometry::FundamentalMatrix& f, std::vector<double>* x) {
  const double lead = f.m(0, 0);
  if (std::abs(lead) < 1e-9 * f.m.norm()) return false;
  x->assign({f.m(0, 1) / lead, f.m(0, 2) / lead, f.m(1, 0) / lead, f.m(1, 1) / lead,
             f.m(1, 2) / lead, f.m(2, 0) / lead, f.m(2, 1) / lead, f.m(2, 2) / lead});
  return true;
}

inline bool fit_hypothesis(const std::vector<geometry::Correspondence>& corrs,
                           const std::vector<int>& subset, std::vector<double>* x) {
  std::vector<geometry::Correspondence> sample;
  sample.reserve(subset.size());
  for (int i : subset) sample.push_back(corrs[i]);
  try {
    return dehomogenize(geometry::eight_point(sample), x);
  } catch (const degeneracy_error&) {
    return false;
  }
}

inline std::vector<double> model_residuals(const influence::LinearizedProblem& problem,
                                           const std::vector<double>& x) {
  std::vector<double> r(problem.a.size());
  for (std::size_t i = 0; i < problem.a.size(); ++i) {
    double dot = 0.0;
    for (int j = 0; j < problem.dimension; ++j) dot += problem.a[i][j] * x[j];
    r[i] = std::abs(dot - problem.b[i]);
  }
  return r;
}

inline std::vector<std::size_t> descending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

// Per-hypothesis classical influences. Estimation runs in sorted-residual
// space with mask bits keyed by (seed, hypothesis, draw, rank), so each
// logical point owns its random stream regardless of input slot.
inline std::vector<double> classical_hypothesis(const std::vector<double>& residuals,
                                                const AccumulationConfig& config, std::uint64_t t,
                                                bool exact, WorkCounters& counters) {
  const int n = static_cast<int>(residuals.size());
  const auto order = descending_order(residuals);
  std::vector<double> sorted_values(n);
  for (int k = 0; k < n; ++k) sorted_values[k] = residuals[order[k]];
  const double two_epsilon = 2.0 * config.epsilon;
  auto oracle = [&](const influence::SubsetMask& z) {
    ++counters.oracle_calls;
    return influence::feasibility_1d(sorted_values, z, two_epsilon);
  };

  influence::InfluenceEstimate est;
  if (exact) {
    est = influence::influence_exact(oracle, n);
  } else {
    std::vector<influence::SubsetMask> masks(config.m, influence::SubsetMask(n, 0));
    for (int j = 0; j < config.m; ++j)
      for (int rank = 0; rank < n; ++rank) {
        SplitMix bit_rng(derive_key(config.seed,
                                    {kDrawStream, t, std::uint64_t(j), std::uint64_t(rank)}));
        masks[j][rank] = std::uint8_t(bit_rng.next() & 1u);
      }
    est = influence::influence_over_masks(oracle, n, masks);
  }

  std::vector<double> alpha(n, 0.0);
  for (int k = 0; k < n; ++k) alpha[order[k]] = est.alphas[k];
  return alpha;
}

// Experimental engine: quantizes seeded batches of at most four residuals,
// simulates the measurement distribution once per distinct quantized
// instance, and draws all shots from it.
inline std::vector<double> quantum_hypothesis(const std::vector<double>& residuals,
                                              const AccumulationConfig& config, std::uint64_t t,
                                              bool exact, CircuitCache& cache,
                                              WorkCounters& counters) {
  const int n = static_cast<int>(residuals.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  SplitMix batch_rng(derive_key(config.seed, {kBatchStream, t}));
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[batch_rng.below(i)]);

  std::vector<double> alpha(n, 0.0);
  int batch_index = 0;
  for (int start = 0; start < n; start += 4, ++batch_index) {
    const int len = std::min(4, n - start);
    std::vector<double> raw(len);
    for (int p = 0; p < len; ++p) raw[p] = residuals[idx[start + p]];
    const oracle::PreparedPointFit prep =
        oracle::preprocess(raw, config.bits, 2.0 * config.epsilon);

    const auto key = std::make_tuple(prep.instance.values, prep.instance.bit_precision,
                                     prep.instance.two_epsilon);
    auto found = cache.distributions.find(key);
    if (found == cache.distributions.end()) {
      const oracle::OracleCircuit bv = oracle::build_bv_circuit(prep.instance);
      qsim::QuantumState st = qsim::init_state(bv.layout.total, 0);
      qsim::apply_circuit(st, bv.circuit);
      found = cache.distributions
                  .emplace(key, qsim::measurement_distribution(st, bv.layout.z))
                  .first;
      ++counters.circuit_runs;
    }
    const std::vector<double>& dist = found->second;

    std::vector<double> sorted_alpha(len, 0.0);
    if (exact) {
      for (std::size_t v = 0; v < dist.size(); ++v)
        for (int k = 0; k < len; ++k)
          if ((v >> k) & 1ull) sorted_alpha[k] += dist[v];
    } else {
      SplitMix shot_rng(derive_key(config.seed, {kShotStream, t, std::uint64_t(batch_index)}));
      for (int shot = 0; shot < config.m; ++shot) {
        double u = shot_rng.uniform();
        std::size_t v = 0;
        for (; v + 1 < dist.size(); ++v) {
          if (u < dist[v]) break;
          u -= dist[v];
        }
        for (int k = 0; k < len; ++k)
          if ((v >> k) & 1ull) sorted_alpha[k] += 1.0;
        ++counters.shots;
      }
      for (double& a : sorted_alpha) a /= double(config.m);
    }

    for (int k = 0; k < len; ++k) alpha[idx[start + prep.permutation[k]]] = sorted_alpha[k];
  }
  return alpha;
}

}  // namespace detail

inline AccumulatedInfluence accumulate_influence(const std::vector<geometry::Correspondence>& corrs,
                                                 const AccumulationConfig& config,
                                                 const AccumulationOptions& options) {
  validate_config(config);
  const int n = static_cast<int>(corrs.size());
  if (n < 8) throw std::invalid_argument("influence accumulation needs at least 8 correspondences");
  for (const auto& subset : options.fixed_subsets) {
    if (subset.size() != 8) throw std::invalid_argument("injected subsets must have 8 indices");
    for (int i : subset)
      if (i < 0 || i >= n) throw std::invalid_argument("injected subset index out of range");
  }

  const geometry::IsotropicFrame frame = geometry::isotropic_normalize(corrs);
  const influence::LinearizedProblem problem = geometry::linearize(frame.normalized);

  const bool injected = !options.fixed_subsets.empty();
  const int total = injected ? int(options.fixed_subsets.size()) : config.t;
  const std::uint64_t resample_budget = 100ull * std::uint64_t(total);
  const double floor = 1.0 / (2.0 * double(config.m));

  AccumulatedInfluence out;
  std::vector<double> acc(n, 0.0);
  CircuitCache local_cache;
  CircuitCache& cache = options.circuit_cache ? *options.circuit_cache : local_cache;
  int ran = 0;

  for (int t = 0; t < total; ++t) {
    std::vector<double> x;
    bool have = false;
    if (injected) {
      have = detail::fit_hypothesis(frame.normalized, options.fixed_subsets[t], &x);
      if (!have) throw degeneracy_error("injected minimal subset is degenerate");
    } else {
      for (int attempt = 0; attempt < 100 && !have; ++attempt) {
        SplitMix rng(derive_key(config.seed,
                                {detail::kSubsetStream, std::uint64_t(t), std::uint64_t(attempt)}));
        const std::vector<int> subset = detail::sample_subset(n, 8, rng);
        have = detail::fit_hypothesis(frame.normalized, subset, &x);
        if (!have && ++out.counters.resamples > resample_budget)
          throw degeneracy_error("hypothesis sampling exceeded the degeneracy budget");
      }
      if (!have) continue;  // slot abandoned, accounted among resamples
    }
    ++out.counters.hypotheses;
    ++ran;

    const std::vector<double> residuals = detail::model_residuals(problem, x);
    const std::vector<double> alpha =
        config.engine == Engine::Classical1D
            ? detail::classical_hypothesis(residuals, config, std::uint64_t(t),
                                           options.exact_influence, out.counters)
            : detail::quantum_hypothesis(residuals, config, std::uint64_t(t),
                                         options.exact_influence, cache, out.counters);
    for (int i = 0; i < n; ++i) acc[i] += std::log(alpha[i] + floor);
  }
  if (ran == 0) throw degeneracy_error("no usable hypotheses were found");

  double lo = acc[0] / ran, hi = acc[0] / ran;
  out.influences.resize(n);
  for (int i = 0; i < n; ++i) {
    out.influences[i] = acc[i] / ran;
    lo = std::min(lo, out.influences[i]);
    hi = std::max(hi, out.influences[i]);
  }
  if (hi > lo) {
    for (double& v : out.influences) v = (v - lo) / (hi - lo);
  } else {
    for (double& v : out.influences) v = 0.0;
  }
  return out;
}

inline AccumulatedInfluence accumulate_influence(const std::vector<geometry::Correspondence>& corrs,
                                                 const AccumulationConfig& config) {
  return accumulate_influence(corrs, config, AccumulationOptions{});
}

struct ThresholdDiagnostic {
  double gamma = 0.0;
  int consensus = 0;
  double rms = 0.0;
  bool skipped = false;
};

struct FitResult {
  std::vector<double> influences;
  std::vector<double> x;  // dehomogenized model in the problem's frame
  geometry::FundamentalMatrix f;
  int consensus = 0;
  double selected_gamma = 0.0;
  std::vector<ThresholdDiagnostic> thresholds;
  WorkCounters counters;
};

// Sweeps gamma_h = h/H for h = 1..H, least-squares fits the points whose
// influence is at most gamma_h, and keeps the candidate with the largest
// consensus; ties prefer the smaller consensus RMS. The final grid point
// always admits every point, so the plain least-squares fit is a candidate.
inline FitResult model_select(const influence::LinearizedProblem& problem,
                              const std::vector<double>& influences, double epsilon, int h) {
  influence::validate_problem(problem);
  if (influences.size() != problem.a.size())
    throw std::invalid_argument("influences must align with the problem rows");
  for (double a : influences)
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("influences must be normalized to [0, 1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (h < 1) throw std::invalid_argument("grid size must be at least 1");

  const int n = static_cast<int>(problem.a.size());
  const int d = problem.dimension;
  FitResult result;
  result.influences = influences;
  double best_rms = 0.0;
  bool found = false;

  for (int step = 1; step <= h; ++step) {
    ThresholdDiagnostic diag;
    diag.gamma = double(step) / double(h);
    std::vector<int> selected;
    for (int i = 0; i < n; ++i)
      if (influences[i] <= diag.gamma) selected.push_back(i);
    if (int(selected.size()) < d) {
      diag.skipped = true;
      result.thresholds.push_back(diag);
      continue;
    }

    Eigen::MatrixXd a(selected.size(), d);
    Eigen::VectorXd b(selected.size());
    for (std::size_t row = 0; row < selected.size(); ++row) {
      for (int j = 0; j < d; ++j) a(row, j) = problem.a[selected[row]][j];
      b(row) = problem.b[selected[row]];
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    std::vector<double> x(sol.data(), sol.data() + d);

    const std::vector<double> residuals = detail::model_residuals(problem, x);
    int consensus = 0;
    double sq = 0.0;
    for (double r : residuals)
      if (r <= epsilon) {
        ++consensus;
        sq += r * r;
      }
    diag.consensus = consensus;
    diag.rms = consensus > 0 ? std::sqrt(sq / consensus) : 0.0;
    result.thresholds.push_back(diag);

    if (!found || consensus > result.consensus ||
        (consensus == result.consensus && diag.rms < best_rms)) {
      found = true;
      result.consensus = consensus;
      result.selected_gamma = diag.gamma;
      result.x = std::move(x);
      best_rms = diag.rms;
    }
  }
  if (!found) throw solver_error("every influence threshold left fewer points than parameters");
  if (d == 8) result.f = geometry::make_fundamental(detail::matrix_from_model(result.x));
  return result;
}

// Standard RANSAC over the same conditioned linearization and the same
// subset-sampling streams, refitting the best consensus set by least squares.
// The returned matrix is denormalized to pixel coordinates.
inline FitResult ransac_baseline(const std::vector<geometry::Correspondence>& corrs, double epsilon,
                                 int t, std::uint64_t seed) {
  if (corrs.size() < 8) throw std::invalid_argument("RANSAC needs at least 8 correspondences");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (t < 1) throw std::invalid_argument("iteration count must be positive");

  const geometry::IsotropicFrame frame = geometry::isotropic_normalize(corrs);
  const influence::LinearizedProblem problem = geometry::linearize(frame.normalized);
  const int n = static_cast<int>(corrs.size());
  const std::uint64_t resample_budget = 100ull * std::uint64_t(t);

  FitResult result;
  double best_rms = 0.0;
  bool found = false;
  for (int iter = 0; iter < t; ++iter) {
    std::vector<double> x;
    bool have = false;
    for (int attempt = 0; attempt < 100 && !have; ++attempt) {
      SplitMix rng(derive_key(seed,
                              {detail::kSubsetStream, std::uint64_t(iter), std::uint64_t(attempt)}));
      const std::vector<int> subset = detail::sample_subset(n, 8, rng);
      have = detail::fit_hypothesis(frame.normalized, subset, &x);
      if (!have && ++result.counters.resamples > resample_budget)
        throw degeneracy_error("hypothesis sampling exceeded the degeneracy budget");
    }
    if (!have) continue;
    ++result.counters.hypotheses;

    const std::vector<double> residuals = detail::model_residuals(problem, x);
    int consensus = 0;
    double sq = 0.0;
    for (double r : residuals)
      if (r <= epsilon) {
        ++consensus;
        sq += r * r;
      }
    const double rms = consensus > 0 ? std::sqrt(sq / consensus) : 0.0;
    if (!found || consensus > result.consensus ||
        (consensus == result.consensus && rms < best_rms)) {
      found = true;
      result.consensus = consensus;
      result.x = x;
      best_rms = rms;
    }
  }
  if (!found) throw degeneracy_error("no usable hypotheses were found");

  // Least-squares refit on the best consensus set when it determines a model.
  std::vector<double> residuals = detail::model_residuals(problem, result.x);
  std::vector<int> inliers;
  for (int i = 0; i < n; ++i)
    if (residuals[i] <= epsilon) inliers.push_back(i);
  if (int(inliers.size()) >= problem.dimension) {
    Eigen::MatrixXd a(inliers.size(), problem.dimension);
    Eigen::VectorXd b(inliers.size());
    for (std::size_t row = 0; row < inliers.size(); ++row) {
      for (int j = 0; j < problem.dimension; ++j) a(row, j) = problem.a[inliers[row]][j];
      b(row) = problem.b[inliers[row]];
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    result.x.assign(sol.data(), sol.data() + problem.dimension);
    residuals = detail::model_residuals(problem, result.x);
    result.consensus = 0;
    for (double r : residuals) result.consensus += r <= epsilon;
  }
  result.f = geometry::denormalize(detail::matrix_from_model(result.x), frame, false);
  return result;
}

struct ExperimentInput {
  std::vector<geometry::Correspondence> correspondences;
  std::optional<std::vector<int>> labels;  // 1 = inlier
  std::optional<geometry::FundamentalMatrix> f_gt;
  int width = 640, height = 480;
};

inline ExperimentInput input_from_scene(const geometry::Scene& scene) {
  ExperimentInput input;
  input.correspondences = scene.correspondences;
  input.labels = scene.truth.labels;
  input.f_gt = scene.truth.f;
  input.width = scene.truth.width;
  input.height = scene.truth.height;
  return input;
}

struct ExperimentReport {
  AccumulationConfig config;
  std::vector<double> influences;
  FitResult fit;                    // model_select output, conditioned frame
  geometry::FundamentalMatrix f_pixel;  // selected model in pixel coordinates
  FitResult baseline;               // RANSAC, pixel-frame matrix
  std::optional<double> auc;
  std::optional<double> nsgd_value;
  std::optional<bool> accurate;
  std::optional<bool> baseline_accurate;
  WorkCounters counters;
};

inline ExperimentReport run_experiment(const ExperimentInput& input,
                                       const AccumulationConfig& config,
                                       const AccumulationOptions& options) {
  validate_config(config);
  if (input.labels && input.labels->size() != input.correspondences.size())
    throw std::invalid_argument("labels must align with correspondences");

  ExperimentReport report;
  report.config = config;

  const AccumulatedInfluence acc = accumulate_influence(input.correspondences, config, options);
  report.influences = acc.influences;
  report.counters = acc.counters;

  const geometry::IsotropicFrame frame = geometry::isotropic_normalize(input.correspondences);
  const influence::LinearizedProblem problem = geometry::linearize(frame.normalized);
  report.fit = model_select(problem, acc.influences, config.epsilon, config.h);
  report.f_pixel = geometry::denormalize(detail::matrix_from_model(report.fit.x), frame, false);

  report.baseline = ransac_baseline(input.correspondences, config.epsilon, config.t, config.seed);
  report.counters.hypotheses += report.baseline.counters.hypotheses;
  report.counters.resamples += report.baseline.counters.resamples;

  if (input.labels) {
    std::vector<int> outlier_flags(input.labels->size());
    for (std::size_t i = 0; i < outlier_flags.size(); ++i)
      outlier_flags[i] = (*input.labels)[i] ? 0 : 1;
    try {
      report.auc = geometry::roc_auc(acc.influences, outlier_flags);
    } catch (const undefined_metric_error&) {
      // single-class labels leave the metric absent
    }
  }
  if (input.f_gt) {
    report.nsgd_value = geometry::nsgd(report.f_pixel, *input.f_gt, input.width, input.height,
                                       geometry::kDefaultVirtualCount, config.seed);
    report.accurate = *report.nsgd_value < geometry::kAccurateNsgd;
    const double baseline_nsgd =
        geometry::nsgd(report.baseline.f, *input.f_gt, input.width, input.height,
                       geometry::kDefaultVirtualCount, config.seed);
    report.baseline_accurate = baseline_nsgd < geometry::kAccurateNsgd;
  }
  return report;
}

inline ExperimentReport run_experiment(const ExperimentInput& input,
                                       const AccumulationConfig& config) {
  return run_experiment(input, config, AccumulationOptions{});
}

// Fixed-layout report serialization: stable key order, floats at 12
// significant digits, so equal seeds produce identical bytes.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::string(buf);
}

namespace detail {

inline void write_number_array(std::ostream& os, const std::vector<double>& values) {
  os << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << format_number(values[i]);
  }
  os << ']';
}

}  // namespace detail

inline void write_report_json(std::ostream& os, const ExperimentReport& report) {
  os << "{\n";
  os << "  \"config\": {\"epsilon\": " << format_number(report.config.epsilon)
     << ", \"M\": " << report.config.m << ", \"T\": " << report.config.t
     << ", \"H\": " << report.config.h << ", \"engine\": \"" << engine_name(report.config.engine)
     << "\", \"bits\": " << report.config.bits << ", \"seed\": " << report.config.seed << "},\n";
  os << "  \"influences\": ";
  detail::write_number_array(os, report.influences);
  os << ",\n";
  os << "  \"model\": {\"x\": ";
  detail::write_number_array(os, report.fit.x);
  os << ", \"F\": [";
  for (int r = 0; r < 3; ++r) {
    if (r) os << ", ";
    detail::write_number_array(
        os, {report.f_pixel.m(r, 0), report.f_pixel.m(r, 1), report.f_pixel.m(r, 2)});
  }
  os << "]},\n";
  os << "  \"consensus\": " << report.fit.consensus << ",\n";
  if (report.auc) os << "  \"auc\": " << format_number(*report.auc) << ",\n";
  if (report.nsgd_value) os << "  \"nsgd\": " << format_number(*report.nsgd_value) << ",\n";
  if (report.accurate) os << "  \"accurate\": " << (*report.accurate ? "true" : "false") << ",\n";
  os << "  \"timings\": {\"hypotheses\": " << report.counters.hypotheses
     << ", \"resamples\": " << report.counters.resamples
     << ", \"oracle_calls\": " << report.counters.oracle_calls
     << ", \"circuit_runs\": " << report.counters.circuit_runs
     << ", \"shots\": " << report.counters.shots << "}\n";
  os << "}\n";
}

// Per-point CSV: influence plus the optional true-model residual and label
// columns when ground truth is available.
inline void write_point_csv(std::ostream& os, const std::vector<double>& influences,
                            const std::optional<std::vector<double>>& true_residuals,
                            const std::optional<std::vector<int>>& labels) {
  if (true_residuals && true_residuals->size() != influences.size())
    throw std::invalid_argument("residual column must align with influences");
  if (labels && labels->size() != influences.size())
    throw std::invalid_argument("label column must align with influences");
  os << "index,influence";
  if (true_residuals) os << ",true_residual";
  if (labels) os << ",label";
  os << '\n';
  for (std::size_t i = 0; i < influences.size(); ++i) {
    os << i << ',' << format_number(influences[i]);
    if (true_residuals) os << ',' << format_number((*true_residuals)[i]);
    if (labels) os << ',' << (*labels)[i];
    os << '\n';
  }
}

// True-model residuals for the influence-vs-residual diagnostic, computed in
// the conditioned frame where they are commensurate with epsilon; absent when
// the leading entry of the conditioned true matrix is too small to
// dehomogenize.
inline std::optional<std::vector<double>> true_model_residuals(
    const std::vector<geometry::Correspondence>& corrs, const geometry::FundamentalMatrix& f_gt) {
  const geometry::IsotropicFrame frame = geometry::isotropic_normalize(corrs);
  const Eigen::Matrix3d conditioned = frame.t2.transpose().inverse() * f_gt.m * frame.t1.inverse();
  if (std::abs(conditioned(0, 0)) < 1e-6 * conditioned.norm()) return std::nullopt;
  std::vector<double> x;
  if (!detail::dehomogenize(geometry::make_fundamental(conditioned), &x)) return std::nullopt;
  return detail::model_residuals(geometry::linearize(frame.normalized), x);
}

}  // namespace qrf::pipeline
