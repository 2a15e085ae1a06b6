#pragma once

// Feasibility oracle circuits for 1-D point fitting and the Bernstein-Vazirani
// program around them. Register layout: z holds the subset selection with one
// qubit per sorted point, a1/a2 are one-hot selector outputs, v1/v2 are C-bit
// value registers with bit 0 least significant, y is the oracle output, b0 an
// optional comparator borrow.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qrf/errors.hpp"
#include "qrf/qsim.hpp"

namespace qrf::oracle {

struct PointFitInstance {
  std::vector<std::uint32_t> values;  // sorted decreasingly, last value 0
  int bit_precision = 0;              // C
  std::uint32_t two_epsilon = 0;      // quantized threshold, < 2^C
};

inline void validate_instance(const PointFitInstance& inst) {
  if (inst.values.empty()) throw std::invalid_argument("instance needs at least one value");
  if (inst.bit_precision < 1 || inst.bit_precision > 31)
    throw std::invalid_argument("bit precision must be in [1, 31]");
  const std::uint32_t limit = (std::uint32_t(1) << inst.bit_precision) - 1;
  if (inst.values.back() != 0) throw std::invalid_argument("smallest value must be offset to zero");
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (inst.values[i] > limit) throw std::invalid_argument("value exceeds bit precision");
    if (i + 1 < inst.values.size() && inst.values[i] < inst.values[i + 1])
      throw std::invalid_argument("values must be sorted decreasingly");
  }
  if (inst.two_epsilon > limit) throw std::invalid_argument("two_epsilon exceeds bit precision");
}

// Classical spread predicate the circuits must reproduce: 1 iff the selected
// values span more than two_epsilon. Empty and singleton selections pass.
inline int instance_predicate(const PointFitInstance& inst, std::uint32_t mask) {
  std::uint32_t lo = 0, hi = 0;
  bool any = false;
  for (std::size_t i = 0; i < inst.values.size(); ++i) {
    if (!((mask >> i) & 1u)) continue;
    const std::uint32_t v = inst.values[i];
    if (!any) {
      lo = hi = v;
      any = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return (any && hi - lo > inst.two_epsilon) ? 1 : 0;
}

struct PreparedPointFit {
  PointFitInstance instance;
  std::vector<int> permutation;  // permutation[k] = caller index of sorted value k
  double offset = 0.0;
  double scale = 1.0;
};

namespace detail {

inline std::uint32_t round_half_up(double v) {
  return static_cast<std::uint32_t>(std::floor(v + 0.5));
}

}  // namespace detail

// Sorts decreasingly, offsets the minimum to zero and quantizes to C bits.
// Integer data already within range passes through unscaled; otherwise the
// span is stretched over the full C-bit range. two_epsilon is scaled by the
// same factor and rounded half-up.
inline PreparedPointFit preprocess(const std::vector<double>& raw_values, int bit_precision,
                                   double two_epsilon_raw) {
  if (raw_values.empty()) throw std::invalid_argument("instance needs at least one value");
  if (bit_precision < 1 || bit_precision > 31)
    throw std::invalid_argument("bit precision must be in [1, 31]");
  if (!(two_epsilon_raw >= 0.0))
    throw std::invalid_argument("two_epsilon must be non-negative");
  for (double v : raw_values)
    if (!std::isfinite(v)) throw precision_error("values must be finite");
  if (!std::isfinite(two_epsilon_raw)) throw precision_error("two_epsilon must be finite");

  const int n = static_cast<int>(raw_values.size());
  PreparedPointFit out;
  out.permutation.resize(n);
  for (int i = 0; i < n; ++i) out.permutation[i] = i;
  std::stable_sort(out.permutation.begin(), out.permutation.end(),
                   [&](int a, int b) { return raw_values[a] > raw_values[b]; });

  out.offset = raw_values[out.permutation[n - 1]];
  const double span = raw_values[out.permutation[0]] - out.offset;
  const std::uint32_t limit = (std::uint32_t(1) << bit_precision) - 1;

  bool integral = true;
  for (double v : raw_values)
    if (std::abs((v - out.offset) - std::round(v - out.offset)) > 1e-9) integral = false;
  if (integral && span <= double(limit) + 1e-9) {
    out.scale = 1.0;
  } else if (span > 0.0) {
    out.scale = double(limit) / span;
  } else {
    out.scale = 1.0;
  }
  if (!std::isfinite(out.scale)) throw precision_error("value range not representable at requested precision");

  out.instance.bit_precision = bit_precision;
  out.instance.values.resize(n);
  for (int k = 0; k < n; ++k) {
    const double shifted = (raw_values[out.permutation[k]] - out.offset) * out.scale;
    out.instance.values[k] = std::min(limit, detail::round_half_up(shifted));
  }
  out.instance.two_epsilon = std::min(limit, detail::round_half_up(two_epsilon_raw * out.scale));
  validate_instance(out.instance);
  return out;
}

struct QubitLayout {
  int n = 0;  // N points
  int c = 0;  // C value bits
  std::vector<int> z, a1, a2, v1, v2;
  int y = -1;
  int b0 = -1;  // comparator borrow ancilla, -1 when unused
  int total = 0;
};

// Comparator realization chosen per instance. Differences reachable by some
// subset are {0} plus every pairwise b_i - b_j, so the predicate sometimes
// collapses to a constant or to a single bit of the subtractor output.
enum class ComparatorPlan { AlwaysFeasible, BitTest, BorrowSubtract };

struct ComparatorChoice {
  ComparatorPlan plan = ComparatorPlan::AlwaysFeasible;
  int bit = -1;  // v2 bit carrying f under BitTest
};

inline ComparatorChoice plan_comparator(const PointFitInstance& inst) {
  validate_instance(inst);
  std::vector<std::uint32_t> reachable = {0};
  for (std::size_t i = 0; i < inst.values.size(); ++i)
    for (std::size_t j = i + 1; j < inst.values.size(); ++j)
      reachable.push_back(inst.values[i] - inst.values[j]);

  bool any_infeasible = false;
  for (std::uint32_t d : reachable) any_infeasible |= d > inst.two_epsilon;
  if (!any_infeasible) return {ComparatorPlan::AlwaysFeasible, -1};

  for (int k = 0; k < inst.bit_precision; ++k) {
    bool matches = true;
    for (std::uint32_t d : reachable)
      if (((d >> k) & 1u) != std::uint32_t(d > inst.two_epsilon)) {
        matches = false;
        break;
      }
    if (matches) return {ComparatorPlan::BitTest, k};
  }
  return {ComparatorPlan::BorrowSubtract, -1};
}

inline QubitLayout make_layout(const PointFitInstance& inst) {
  validate_instance(inst);
  const int n = static_cast<int>(inst.values.size());
  const int c = inst.bit_precision;
  QubitLayout lay;
  lay.n = n;
  lay.c = c;
  int next = 0;
  auto take = [&](std::vector<int>& reg, int count) {
    for (int i = 0; i < count; ++i) reg.push_back(next++);
  };
  take(lay.z, n);
  take(lay.a1, n);
  take(lay.a2, n);
  take(lay.v1, c);
  take(lay.v2, c);
  lay.y = next++;
  if (plan_comparator(inst).plan == ComparatorPlan::BorrowSubtract) lay.b0 = next++;
  lay.total = next;
  if (lay.total > qsim::kMaxQubits)
    throw resource_error("instance needs " + std::to_string(lay.total) + " qubits, simulator cap is " +
                         std::to_string(qsim::kMaxQubits));
  return lay;
}

namespace detail {

inline void check_layout(const PointFitInstance& inst, const QubitLayout& lay) {
  if (lay.n != int(inst.values.size()) || lay.c != inst.bit_precision)
    throw std::invalid_argument("layout does not match instance dimensions");
  if (int(lay.z.size()) != lay.n || int(lay.a1.size()) != lay.n || int(lay.a2.size()) != lay.n ||
      int(lay.v1.size()) != lay.c || int(lay.v2.size()) != lay.c || lay.y < 0)
    throw std::invalid_argument("layout registers inconsistent");
}

constexpr double kTau = 6.283185307179586476925286766559;

// Fourier-space subtraction of a constant from the register (LSB first):
// value -= k mod 2^m, implemented between an enclosing QFT pair.
inline void append_const_subtract_phases(qsim::Circuit& c, const std::vector<int>& reg, std::uint64_t k) {
  const int m = static_cast<int>(reg.size());
  const std::uint64_t mod = 1ull << m;
  for (int j = 0; j < m; ++j) {
    const double frac = double((k << j) & (mod - 1)) / double(mod);
    if (frac != 0.0) c.append(qsim::phase(-kTau * frac, reg[j]));
  }
}

}  // namespace detail

// Writes a one-hot flag into a1 at the first set bit of z in sorted order.
// Negative controls are realized by X conjugation; the trailing X layer
// restores z.
inline qsim::Circuit build_selector_a(const PointFitInstance& inst, const QubitLayout& lay) {
  detail::check_layout(inst, lay);
  qsim::Circuit c(lay.total);
  c.append(qsim::cx(lay.z[0], lay.a1[0]));
  for (int i = 1; i < lay.n; ++i) {
    c.append(qsim::x(lay.z[i - 1]));
    std::vector<int> controls(lay.z.begin(), lay.z.begin() + i + 1);
    c.append(qsim::mcx(std::move(controls), lay.a1[i]));
  }
  for (int i = 0; i + 1 < lay.n; ++i) c.append(qsim::x(lay.z[i]));
  return c;
}

// Mirror of the A selector: flags the last set bit of z into a2.
inline qsim::Circuit build_selector_b(const PointFitInstance& inst, const QubitLayout& lay) {
  detail::check_layout(inst, lay);
  qsim::Circuit c(lay.total);
  c.append(qsim::cx(lay.z[lay.n - 1], lay.a2[lay.n - 1]));
  for (int i = lay.n - 2; i >= 0; --i) {
    c.append(qsim::x(lay.z[i + 1]));
    std::vector<int> controls(lay.z.begin() + i, lay.z.end());
    c.append(qsim::mcx(std::move(controls), lay.a2[i]));
  }
  for (int i = 1; i < lay.n; ++i) c.append(qsim::x(lay.z[i]));
  return c;
}

enum class ValueRegister { V1, V2 };

// Copies the selected point's value into the v register: CNOTs from the
// one-hot a bit into every v bit where b_i has a 1.
inline qsim::Circuit build_value_encoder(const PointFitInstance& inst, const QubitLayout& lay,
                                         ValueRegister which) {
  detail::check_layout(inst, lay);
  const std::vector<int>& a = which == ValueRegister::V1 ? lay.a1 : lay.a2;
  const std::vector<int>& v = which == ValueRegister::V1 ? lay.v1 : lay.v2;
  qsim::Circuit c(lay.total);
  for (int i = 0; i < lay.n; ++i)
    for (int bit = 0; bit < lay.c; ++bit)
      if ((inst.values[i] >> bit) & 1u) c.append(qsim::cx(a[i], v[bit]));
  return c;
}

// v2 <- v1 - v2. Sorting guarantees v1 >= v2, so the signed result is the
// absolute difference. Uses the complement identity v1 - v2 = ~(v2 - v1 - 1)
// mod 2^C: Fourier-subtract v1 and 1 from v2, then complement.
inline qsim::Circuit build_subtractor_s1(const QubitLayout& lay) {
  if (lay.v1.size() != lay.v2.size() || lay.v1.empty())
    throw std::invalid_argument("layout registers inconsistent");
  const int m = static_cast<int>(lay.v2.size());
  qsim::Circuit c(lay.total);
  qsim::detail::append_qft(c, lay.v2);
  const std::uint64_t mod = 1ull << m;
  for (int l = 0; l < m; ++l)
    for (int j = 0; j + l < m; ++j)
      c.append(qsim::cphase(-detail::kTau * double(1ull << (l + j)) / double(mod), lay.v1[l], lay.v2[j]));
  detail::append_const_subtract_phases(c, lay.v2, 1);
  qsim::Circuit inv_qft = qsim::invert_circuit(qsim::build_qft(lay.v2, lay.total));
  for (const auto& op : inv_qft.ops) c.append(op);
  for (int j = 0; j < m; ++j) c.append(qsim::x(lay.v2[j]));
  return c;
}

// Threshold comparison against the inbuilt value two_epsilon. The generic
// form subtracts two_epsilon + 1 from the extended register (v2, b0) so the
// borrow lands in b0, which after an X reads f = [diff > two_epsilon].
// Instances whose reachable differences make the predicate constant or a
// plain bit test get an empty circuit; see plan_comparator.
inline qsim::Circuit build_comparator_s2(const PointFitInstance& inst, const QubitLayout& lay) {
  detail::check_layout(inst, lay);
  qsim::Circuit c(lay.total);
  const ComparatorChoice choice = plan_comparator(inst);
  if (choice.plan != ComparatorPlan::BorrowSubtract) return c;
  if (lay.b0 < 0) throw std::invalid_argument("layout lacks the comparator borrow qubit");
  std::vector<int> reg = lay.v2;
  reg.push_back(lay.b0);
  qsim::detail::append_qft(c, reg);
  detail::append_const_subtract_phases(c, reg, std::uint64_t(inst.two_epsilon) + 1);
  qsim::Circuit inv_qft = qsim::invert_circuit(qsim::build_qft(reg, lay.total));
  for (const auto& op : inv_qft.ops) c.append(op);
  c.append(qsim::x(lay.b0));
  return c;
}

struct OracleCircuit {
  qsim::Circuit circuit;
  QubitLayout layout;
  PointFitInstance instance;
  std::optional<int> f_output;  // qubit carrying f(z) after block D; absent when f == 0
};

namespace detail {

struct DBlock {
  qsim::Circuit circuit;
  std::optional<int> f_output;
};

inline DBlock build_block_d(const PointFitInstance& inst, const QubitLayout& lay) {
  DBlock d;
  d.circuit = qsim::Circuit(lay.total);
  auto extend = [&](const qsim::Circuit& part) {
    for (const auto& op : part.ops) d.circuit.append(op);
  };
  extend(build_selector_a(inst, lay));
  extend(build_selector_b(inst, lay));
  extend(build_value_encoder(inst, lay, ValueRegister::V1));
  extend(build_value_encoder(inst, lay, ValueRegister::V2));
  extend(build_subtractor_s1(lay));
  extend(build_comparator_s2(inst, lay));
  const ComparatorChoice choice = plan_comparator(inst);
  switch (choice.plan) {
    case ComparatorPlan::AlwaysFeasible:
      d.f_output = std::nullopt;
      break;
    case ComparatorPlan::BitTest:
      d.f_output = lay.v2[choice.bit];
      break;
    case ComparatorPlan::BorrowSubtract:
      d.f_output = lay.b0;
      break;
  }
  return d;
}

}  // namespace detail

// U_f = D, CNOT from the f wire into y, then the exact inverse of D. Basis
// input |z>|0...0>|y> maps to |z>|0...0>|y xor f(z)>; the operator is its own
// inverse.
inline OracleCircuit build_uf(const PointFitInstance& inst) {
  const QubitLayout lay = make_layout(inst);
  const detail::DBlock d = detail::build_block_d(inst, lay);
  OracleCircuit out;
  out.layout = lay;
  out.instance = inst;
  out.f_output = d.f_output;
  out.circuit = qsim::Circuit(lay.total);
  for (const auto& op : d.circuit.ops) out.circuit.append(op);
  if (d.f_output) out.circuit.append(qsim::cx(*d.f_output, lay.y));
  const qsim::Circuit undo = qsim::invert_circuit(d.circuit);
  for (const auto& op : undo.ops) out.circuit.append(op);
  return out;
}

// Bernstein-Vazirani program: y into |1>, Hadamards on z and y, U_f, then
// Hadamards on z. Measuring z gives Pr(z_i = 1) equal to the influence of
// sorted point i.
inline OracleCircuit build_bv_circuit(const PointFitInstance& inst) {
  OracleCircuit uf = build_uf(inst);
  qsim::Circuit c(uf.layout.total);
  c.append(qsim::x(uf.layout.y));
  for (int q : uf.layout.z) c.append(qsim::h(q));
  c.append(qsim::h(uf.layout.y));
  for (const auto& op : uf.circuit.ops) c.append(op);
  for (int q : uf.layout.z) c.append(qsim::h(q));
  uf.circuit = std::move(c);
  return uf;
}

namespace detail {

// Emits a multi-controlled X as CCNOT/CNOT using one borrowed qubit per
// recursion level. The identity MCX(c..., t) = [CCX(c_k, a, t),
// MCX(c_1..c_{k-1}, a)]^2 holds for any borrow state, so dirty qubits are
// fine. Returns the number of gates written.
inline void emit_mcx_decomposed(std::ostream& os, std::vector<int> controls, int target, int total_qubits,
                                int* emitted) {
  const int k = static_cast<int>(controls.size());
  if (k == 1) {
    os << "cx " << controls[0] << ' ' << target << '\n';
    ++*emitted;
    return;
  }
  if (k == 2) {
    os << "ccx " << controls[0] << ' ' << controls[1] << ' ' << target << '\n';
    ++*emitted;
    return;
  }
  int borrow = -1;
  for (int q = 0; q < total_qubits && borrow < 0; ++q) {
    if (q == target) continue;
    bool used = false;
    for (int c : controls) used |= c == q;
    if (!used) borrow = q;
  }
  if (borrow < 0) throw std::invalid_argument("no borrow qubit available for decomposition");
  const int last = controls.back();
  controls.pop_back();
  for (int rep = 0; rep < 2; ++rep) {
    os << "ccx " << last << ' ' << borrow << ' ' << target << '\n';
    ++*emitted;
    emit_mcx_decomposed(os, controls, borrow, total_qubits, emitted);
  }
}

}  // namespace detail

// Line-oriented portable dialect: '#' comments, a "qubits N" declaration,
// then one gate per line as "<mnemonic> [angle] <qubits...>". Multi-controlled
// X gates are decomposed into CCNOT/CNOT with borrowed qubits; the count of
// decomposed gates is reported in the header.
inline std::string export_circuit_text(const OracleCircuit& oracle) {
  const qsim::Circuit& c = oracle.circuit;
  int mcx_count = 0;
  int extra = 0;
  for (const auto& op : c.ops)
    if (op.kind == qsim::GateKind::MultiControlledX && op.controls.size() > 2) {
      ++mcx_count;
      if (c.num_qubits < int(op.controls.size()) + 2)
        extra = std::max(extra, int(op.controls.size()) + 2 - c.num_qubits);
    }
  const int total = c.num_qubits + extra;

  std::ostringstream body;
  body.setf(std::ios::fmtflags(0), std::ios::floatfield);
  body.precision(17);
  int decomposed_gates = 0;
  for (const auto& op : c.ops) {
    switch (op.kind) {
      case qsim::GateKind::Hadamard:
        body << "h " << op.targets[0] << '\n';
        break;
      case qsim::GateKind::PauliX:
        body << "x " << op.targets[0] << '\n';
        break;
      case qsim::GateKind::CNot:
        body << "cx " << op.controls[0] << ' ' << op.targets[0] << '\n';
        break;
      case qsim::GateKind::CCNot:
        body << "ccx " << op.controls[0] << ' ' << op.controls[1] << ' ' << op.targets[0] << '\n';
        break;
      case qsim::GateKind::MultiControlledX:
        if (op.controls.size() <= 2) {
          if (op.controls.size() == 1)
            body << "cx " << op.controls[0] << ' ' << op.targets[0] << '\n';
          else
            body << "ccx " << op.controls[0] << ' ' << op.controls[1] << ' ' << op.targets[0] << '\n';
        } else {
          detail::emit_mcx_decomposed(body, op.controls, op.targets[0], total, &decomposed_gates);
        }
        break;
      case qsim::GateKind::Phase:
        body << "p " << op.angle << ' ' << op.targets[0] << '\n';
        break;
      case qsim::GateKind::ControlledPhase:
        body << "cp " << op.angle << ' ' << op.controls[0] << ' ' << op.targets[0] << '\n';
        break;
    }
  }

  std::ostringstream out;
  out << "# feasibility oracle circuit\n";
  out << "# points " << oracle.layout.n << " value-bits " << oracle.layout.c << '\n';
  out << "# multi-controlled X gates decomposed: " << mcx_count << " (into " << decomposed_gates
      << " gates)\n";
  if (extra > 0) out << "# extra ancillas: " << extra << '\n';
  out << "qubits " << total << '\n';
  out << body.str();
  return out.str();
}

// Reads the export dialect back into a circuit. Accepts every mnemonic the
// exporter writes plus mcx for hand-authored files.
inline qsim::Circuit parse_circuit_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  qsim::Circuit c(0);
  bool have_width = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    const auto fail = [&](const std::string& why) {
      throw std::invalid_argument("circuit text line " + std::to_string(line_no) + ": " + why);
    };
    if (word == "qubits") {
      int n = 0;
      if (!(ls >> n) || n < 1) fail("bad qubit count");
      c = qsim::Circuit(n);
      have_width = true;
      continue;
    }
    if (!have_width) fail("gate before qubits declaration");
    auto read_int = [&]() {
      int v = 0;
      if (!(ls >> v)) fail("missing qubit index");
      return v;
    };
    if (word == "h") {
      c.append(qsim::h(read_int()));
    } else if (word == "x") {
      c.append(qsim::x(read_int()));
    } else if (word == "cx") {
      const int a = read_int();
      c.append(qsim::cx(a, read_int()));
    } else if (word == "ccx") {
      const int a = read_int(), b = read_int();
      c.append(qsim::ccx(a, b, read_int()));
    } else if (word == "mcx") {
      std::vector<int> qs;
      int v = 0;
      while (ls >> v) qs.push_back(v);
      if (qs.size() < 2) fail("mcx needs controls and a target");
      const int target = qs.back();
      qs.pop_back();
      c.append(qsim::mcx(std::move(qs), target));
    } else if (word == "p") {
      double angle = 0.0;
      if (!(ls >> angle)) fail("missing angle");
      c.append(qsim::phase(angle, read_int()));
    } else if (word == "cp") {
      double angle = 0.0;
      if (!(ls >> angle)) fail("missing angle");
      const int a = read_int();
      c.append(qsim::cphase(angle, a, read_int()));
    } else {
      fail("unknown mnemonic '" + word + "'");
    }
  }
  if (!have_width) throw std::invalid_argument("circuit text lacks a qubits declaration");
  return c;
}

struct InstanceFileData {
  std::vector<double> values;
  int bit_precision = 0;
  double two_epsilon = 0.0;
};

// Instance file: optional '#' comments, header keys "C=" and "two_epsilon=",
// then one value per line.
inline InstanceFileData read_instance_file(std::istream& in) {
  InstanceFileData data;
  bool have_c = false, have_eps = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string trimmed;
    std::istringstream ls(line);
    if (!(ls >> trimmed)) continue;
    const auto fail = [&](const std::string& why) {
      throw std::invalid_argument("instance file line " + std::to_string(line_no) + ": " + why);
    };
    if (trimmed.rfind("C=", 0) == 0) {
      data.bit_precision = std::stoi(trimmed.substr(2));
      have_c = true;
    } else if (trimmed.rfind("two_epsilon=", 0) == 0) {
      data.two_epsilon = std::stod(trimmed.substr(12));
      have_eps = true;
    } else {
      try {
        std::size_t used = 0;
        const double v = std::stod(trimmed, &used);
        if (used != trimmed.size()) fail("bad value");
        data.values.push_back(v);
      } catch (const std::logic_error&) {
        fail("bad value");
      }
    }
  }
  if (!have_c) throw std::invalid_argument("instance file lacks the C= header");
  if (!have_eps) throw std::invalid_argument("instance file lacks the two_epsilon= header");
  if (data.values.empty()) throw std::invalid_argument("instance file lists no values");
  return data;
}

inline void write_instance_file(std::ostream& out, const InstanceFileData& data) {
  out << "C=" << data.bit_precision << '\n';
  out << "two_epsilon=" << data.two_epsilon << '\n';
  for (double v : data.values) out << v << '\n';
}

}  // namespace qrf::oracle
