// Command-line front end: 1-D influence tables, Bernstein-Vazirani oracle
// simulation, fundamental-matrix fitting reports, and batch benchmarks.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qrf/errors.hpp"
#include "qrf/geometry.hpp"
#include "qrf/influence.hpp"
#include "qrf/oracle.hpp"
#include "qrf/pipeline.hpp"

namespace {

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += qrf::pipeline::format_number(values[i]);
  }
  return out;
}

std::string json_number_array(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += qrf::pipeline::format_number(values[i]);
  }
  return out + "]";
}

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

struct SyntheticSpec {
  int n = 100;
  double outliers = 0.3;
  double noise = 0.5;
  int width = 640;
  int height = 480;
};

bool parse_synthetic(const std::string& text, SyntheticSpec* spec, std::string* err) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      *err = "expected key=value, got '" + item + "'";
      return false;
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      if (key == "n")
        spec->n = std::stoi(value, &used);
      else if (key == "outliers")
        spec->outliers = std::stod(value, &used);
      else if (key == "noise")
        spec->noise = std::stod(value, &used);
      else if (key == "width")
        spec->width = std::stoi(value, &used);
      else if (key == "height")
        spec->height = std::stoi(value, &used);
      else {
        *err = "unknown key '" + key + "'";
        return false;
      }
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      *err = "malformed value for '" + key + "': '" + value + "'";
      return false;
    }
  }
  return true;
}

int run_influence1d(const std::vector<double>& values, double two_eps, const std::string& method,
                    int m, int bits, std::uint64_t seed, bool json, const std::string& csv_out) {
  const int n = static_cast<int>(values.size());
  auto oracle = [&](const qrf::influence::SubsetMask& z) {
    return qrf::influence::feasibility_1d(values, z, two_eps);
  };
  qrf::influence::InfluenceEstimate est;
  if (method == "exact")
    est = qrf::influence::influence_exact(oracle, n);
  else if (method == "sampled")
    est = qrf::influence::influence_sampled(oracle, n, m, seed);
  else
    est = qrf::influence::influence_quantum(qrf::oracle::preprocess(values, bits, two_eps), m,
                                            seed);

  if (json) {
    std::cout << "{\n  \"values\": " << json_number_array(values)
              << ",\n  \"two_epsilon\": " << qrf::pipeline::format_number(two_eps)
              << ",\n  \"method\": \"" << method << "\",\n  \"iterations\": " << est.iterations
              << ",\n  \"influences\": " << json_number_array(est.alphas) << "\n}\n";
  } else {
    std::cout << join_numbers(est.alphas) << '\n';
  }
  if (!csv_out.empty()) {
    auto out = open_csv(csv_out, "influence.csv");
    qrf::influence::write_influence_csv(out, est);
  }
  return 0;
}

int run_bv_sim(const std::vector<double>& values, const std::string& instance_path, int bits,
               double two_eps, int shots, const std::string& export_path, std::uint64_t seed,
               bool json, const std::string& csv_out) {
  qrf::oracle::PreparedPointFit prep;
  std::vector<double> raw = values;
  if (!instance_path.empty()) {
    std::ifstream in(instance_path);
    if (!in) throw std::runtime_error("cannot open instance file " + instance_path);
    const qrf::oracle::InstanceFileData data = qrf::oracle::read_instance_file(in);
    raw = data.values;
    prep = qrf::oracle::preprocess(data.values, data.bit_precision, data.two_epsilon);
  } else {
    prep = qrf::oracle::preprocess(values, bits, two_eps);
  }

  const qrf::oracle::OracleCircuit bv = qrf::oracle::build_bv_circuit(prep.instance);
  const int base = 3 * bv.layout.n + 2 * bv.layout.c + 1;
  if (!export_path.empty()) {
    std::ofstream out(export_path);
    if (!out) throw std::runtime_error("cannot open " + export_path + " for writing");
    out << qrf::oracle::export_circuit_text(bv);
  }

  const auto est = qrf::influence::influence_quantum(prep, shots, seed);
  if (json) {
    std::string quantized = "[";
    for (std::size_t k = 0; k < prep.instance.values.size(); ++k) {
      if (k) quantized += ", ";
      quantized += std::to_string(prep.instance.values[k]);
    }
    quantized += "]";
    std::cout << "{\n  \"values\": " << json_number_array(raw) << ",\n  \"quantized\": "
              << quantized << ",\n  \"bits\": " << prep.instance.bit_precision
              << ",\n  \"two_epsilon\": " << prep.instance.two_epsilon
              << ",\n  \"qubits\": " << bv.layout.total << ",\n  \"base_qubits\": " << base
              << ",\n  \"gates\": " << bv.circuit.ops.size() << ",\n  \"shots\": " << shots
              << ",\n  \"influences\": " << json_number_array(est.alphas) << "\n}\n";
  } else {
    std::cout << "# qubits " << bv.layout.total << " (base " << base << ", extra "
              << bv.layout.total - base << ") gates " << bv.circuit.ops.size() << " shots "
              << shots << '\n';
    std::cout << join_numbers(est.alphas) << '\n';
  }
  if (!csv_out.empty()) {
    auto out = open_csv(csv_out, "influence.csv");
    qrf::influence::write_influence_csv(out, est);
  }
  return 0;
}

int run_fit_f(const std::string& corrs_path, const std::string& synthetic_text,
              const std::string& gt_path, int width, int height,
              qrf::pipeline::AccumulationConfig config, bool synthetic_set,
              const std::string& csv_out) {
  qrf::pipeline::ExperimentInput input;
  if (synthetic_set) {
    SyntheticSpec spec;
    std::string err;
    if (!parse_synthetic(synthetic_text, &spec, &err)) {
      std::cerr << "error: --synthetic: " << err << '\n';
      return 1;
    }
    input = qrf::pipeline::input_from_scene(qrf::geometry::synthesize_scene(
        spec.n, spec.outliers, spec.noise, spec.width, spec.height, config.seed));
  } else {
    std::ifstream in(corrs_path);
    if (!in) throw std::runtime_error("cannot open correspondence file " + corrs_path);
    input.correspondences = qrf::geometry::read_correspondences(in);
    input.width = width;
    input.height = height;
    bool all_labeled = true;
    for (const auto& c : input.correspondences) all_labeled = all_labeled && c.label.has_value();
    if (all_labeled && !input.correspondences.empty()) {
      std::vector<int> labels;
      for (const auto& c : input.correspondences) labels.push_back(*c.label);
      input.labels = std::move(labels);
    }
    if (!gt_path.empty()) {
      std::ifstream gt(gt_path);
      if (!gt) throw std::runtime_error("cannot open matrix file " + gt_path);
      input.f_gt = qrf::geometry::read_matrix_file(gt);
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const qrf::pipeline::ExperimentReport report = qrf::pipeline::run_experiment(input, config);
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  std::cerr << "# wall_ms " << elapsed.count() << '\n';

  qrf::pipeline::write_report_json(std::cout, report);
  if (!csv_out.empty()) {
    std::optional<std::vector<double>> residuals;
    if (input.f_gt)
      residuals = qrf::pipeline::true_model_residuals(input.correspondences, *input.f_gt);
    auto out = open_csv(csv_out, "points.csv");
    qrf::pipeline::write_point_csv(out, report.influences, residuals, input.labels);
  }
  return 0;
}

int run_bench(int scenes, const SyntheticSpec& spec, qrf::pipeline::AccumulationConfig config,
              bool json, const std::string& csv_out) {
  struct Row {
    std::uint64_t seed;
    double auc, nsgd;
    bool accurate, baseline_accurate;
  };
  const auto start = std::chrono::steady_clock::now();
  std::vector<Row> rows;
  const std::uint64_t base_seed = config.seed;
  qrf::pipeline::CircuitCache cache;
  qrf::pipeline::AccumulationOptions options;
  options.circuit_cache = &cache;
  for (int s = 0; s < scenes; ++s) {
    config.seed = base_seed + std::uint64_t(s);
    const auto scene = qrf::geometry::synthesize_scene(spec.n, spec.outliers, spec.noise,
                                                       spec.width, spec.height, config.seed);
    const auto report =
        qrf::pipeline::run_experiment(qrf::pipeline::input_from_scene(scene), config, options);
    Row row;
    row.seed = config.seed;
    row.auc = report.auc.value_or(0.0);
    row.nsgd = report.nsgd_value.value_or(1.0);
    row.accurate = report.accurate.value_or(false);
    row.baseline_accurate = report.baseline_accurate.value_or(false);
    rows.push_back(row);
  }
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  std::cerr << "# wall_ms " << elapsed.count() << '\n';

  std::vector<double> aucs;
  double recall = 0.0, baseline_recall = 0.0;
  for (const Row& row : rows) {
    aucs.push_back(row.auc);
    recall += row.accurate;
    baseline_recall += row.baseline_accurate;
  }
  std::sort(aucs.begin(), aucs.end());
  const std::size_t mid = aucs.size() / 2;
  const double median_auc =
      aucs.size() % 2 ? aucs[mid] : 0.5 * (aucs[mid - 1] + aucs[mid]);
  recall /= double(rows.size());
  baseline_recall /= double(rows.size());

  using qrf::pipeline::format_number;
  if (json) {
    std::cout << "{\n  \"scenes\": " << scenes << ",\n  \"per_scene\": [";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) std::cout << ", ";
      std::cout << "{\"seed\": " << rows[i].seed << ", \"auc\": " << format_number(rows[i].auc)
                << ", \"nsgd\": " << format_number(rows[i].nsgd)
                << ", \"accurate\": " << (rows[i].accurate ? "true" : "false")
                << ", \"baseline_accurate\": " << (rows[i].baseline_accurate ? "true" : "false")
                << "}";
    }
    std::cout << "],\n  \"median_auc\": " << format_number(median_auc)
              << ",\n  \"recall\": " << format_number(recall)
              << ",\n  \"baseline_recall\": " << format_number(baseline_recall) << "\n}\n";
  } else {
    std::cout << "seed auc nsgd accurate baseline_accurate\n";
    for (const Row& row : rows)
      std::cout << row.seed << ' ' << format_number(row.auc) << ' ' << format_number(row.nsgd)
                << ' ' << row.accurate << ' ' << row.baseline_accurate << '\n';
    std::cout << "median_auc " << format_number(median_auc) << " recall "
              << format_number(recall) << " baseline_recall " << format_number(baseline_recall)
              << '\n';
  }
  if (!csv_out.empty()) {
    auto out = open_csv(csv_out, "bench.csv");
    out << "seed,auc,nsgd,accurate,baseline_accurate\n";
    for (const Row& row : rows)
      out << row.seed << ',' << format_number(row.auc) << ',' << format_number(row.nsgd) << ','
          << row.accurate << ',' << row.baseline_accurate << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boolean-influence outlyingness measures and robust fundamental-matrix fitting"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool json = false;
  std::string csv_out;
  app.add_option("--seed", seed, "seed for all random streams")->capture_default_str();
  app.add_flag("--json", json, "structured JSON output");
  app.add_option("--csv-out", csv_out, "directory for CSV series");

  auto* influence1d =
      app.add_subcommand("influence1d", "influences of 1-D values under the spread test");
  influence1d->fallthrough();
  std::vector<double> values;
  double two_eps = 0.0;
  std::string method = "exact";
  int iterations = 1000;
  int bits = 3;
  influence1d->add_option("--values", values, "comma-separated values")
      ->delimiter(',')
      ->required();
  influence1d->add_option("--two-eps", two_eps, "feasibility window 2*epsilon")->required();
  influence1d->add_option("--method", method, "estimation method")
      ->check(CLI::IsMember({"exact", "sampled", "quantum"}))
      ->capture_default_str();
  influence1d->add_option("-M,--iterations", iterations, "sampling iterations")
      ->capture_default_str();
  influence1d->add_option("--bits", bits, "quantization bits (quantum method)")
      ->capture_default_str();

  auto* bv_sim = app.add_subcommand("bv-sim", "simulate the influence-sampling circuit");
  bv_sim->fallthrough();
  std::vector<double> bv_values;
  std::string instance_path;
  int bv_bits = 3;
  double bv_two_eps = 0.0;
  int shots = 1000;
  std::string export_path;
  auto* bv_values_opt =
      bv_sim->add_option("--values", bv_values, "comma-separated values")->delimiter(',');
  auto* bv_instance_opt =
      bv_sim->add_option("--instance", instance_path, "instance file (C=, two_epsilon=, values)");
  bv_values_opt->excludes(bv_instance_opt);
  auto* bv_eps_opt = bv_sim->add_option("--two-eps", bv_two_eps, "feasibility window 2*epsilon");
  bv_sim->add_option("--bits", bv_bits, "quantization bits")->capture_default_str();
  bv_sim->add_option("--shots", shots, "measurement shots")->capture_default_str();
  bv_sim->add_option("--export-circuit", export_path, "write circuit text to this file");

  auto* fit_f = app.add_subcommand("fit-f", "fit a fundamental matrix and emit a JSON report");
  fit_f->fallthrough();
  std::string corrs_path, synthetic_text, gt_path;
  int width = 640, height = 480;
  qrf::pipeline::AccumulationConfig config;
  std::string engine = "classical-1d";
  auto* corrs_opt =
      fit_f->add_option("--corrs", corrs_path, "correspondence file (u v u' v' [label])");
  auto* synth_opt = fit_f->add_option("--synthetic", synthetic_text,
                                      "synthesize a scene: n=,outliers=,noise=[,width=,height=]");
  corrs_opt->excludes(synth_opt);
  fit_f->add_option("--gt-matrix", gt_path, "ground-truth matrix file (nine reals)");
  fit_f->add_option("--width", width, "image width for file input")->capture_default_str();
  fit_f->add_option("--height", height, "image height for file input")->capture_default_str();
  fit_f->add_option("--epsilon", config.epsilon, "inlier threshold")->capture_default_str();
  fit_f->add_option("-M,--influence-iters", config.m, "influence iterations per hypothesis")
      ->capture_default_str();
  fit_f->add_option("-T,--hypotheses", config.t, "hypothesis count")->capture_default_str();
  fit_f->add_option("-H,--thresholds", config.h, "threshold-grid size")->capture_default_str();
  fit_f->add_option("--engine", engine, "influence engine")
      ->check(CLI::IsMember({"classical-1d", "quantum-1d"}))
      ->capture_default_str();
  fit_f->add_option("--bits", config.bits, "quantization bits (quantum engine)")
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench", "batch synthetic sweep with aggregate metrics");
  bench->fallthrough();
  int scenes = 20;
  SyntheticSpec bench_spec;
  qrf::pipeline::AccumulationConfig bench_config;
  bench_config.t = 200;
  bench_config.m = 200;
  std::string bench_engine = "classical-1d";
  bench->add_option("--scenes", scenes, "number of seeded scenes")->capture_default_str();
  bench->add_option("--points", bench_spec.n, "points per scene")->capture_default_str();
  bench->add_option("--outliers", bench_spec.outliers, "outlier fraction")->capture_default_str();
  bench->add_option("--noise", bench_spec.noise, "inlier noise in pixels")->capture_default_str();
  bench->add_option("--width", bench_spec.width, "image width")->capture_default_str();
  bench->add_option("--height", bench_spec.height, "image height")->capture_default_str();
  bench->add_option("--epsilon", bench_config.epsilon, "inlier threshold")->capture_default_str();
  bench->add_option("-M,--influence-iters", bench_config.m,
                    "influence iterations per hypothesis")
      ->capture_default_str();
  bench->add_option("-T,--hypotheses", bench_config.t, "hypothesis count")->capture_default_str();
  bench->add_option("-H,--thresholds", bench_config.h, "threshold-grid size")
      ->capture_default_str();
  bench->add_option("--engine", bench_engine, "influence engine")
      ->check(CLI::IsMember({"classical-1d", "quantum-1d"}))
      ->capture_default_str();
  bench->add_option("--bits", bench_config.bits, "quantization bits (quantum engine)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (influence1d->parsed())
      return run_influence1d(values, two_eps, method, iterations, bits, seed, json, csv_out);
    if (bv_sim->parsed()) {
      if (bv_values_opt->count() == 0 && bv_instance_opt->count() == 0) {
        std::cerr << "error: bv-sim needs --values or --instance\n";
        return 1;
      }
      if (bv_values_opt->count() > 0 && bv_eps_opt->count() == 0) {
        std::cerr << "error: --values requires --two-eps\n";
        return 1;
      }
      return run_bv_sim(bv_values, instance_path, bv_bits, bv_two_eps, shots, export_path, seed,
                        json, csv_out);
    }
    if (fit_f->parsed()) {
      if (corrs_opt->count() == 0 && synth_opt->count() == 0) {
        std::cerr << "error: fit-f needs --corrs or --synthetic\n";
        return 1;
      }
      config.engine = qrf::pipeline::parse_engine(engine);
      config.seed = seed;
      return run_fit_f(corrs_path, synthetic_text, gt_path, width, height, config,
                       synth_opt->count() > 0, csv_out);
    }
    bench_config.engine = qrf::pipeline::parse_engine(bench_engine);
    bench_config.seed = seed;
    return run_bench(scenes, bench_spec, bench_config, json, csv_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
