#pragma once

// Dense state-vector simulator. Qubit 0 is the least significant bit of the
// amplitude index throughout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "qrf/errors.hpp"
#include "qrf/rng.hpp"

namespace qrf::qsim {

using cplx = std::complex<double>;

// Hard cap on simulated width; 2^24 amplitudes is 256 MiB.
inline constexpr int kMaxQubits = 24;

struct QuantumState {
  int num_qubits = 0;
  std::vector<cplx> amps;
};

enum class GateKind {
  Hadamard,
  PauliX,
  CNot,
  CCNot,
  MultiControlledX,
  ControlledPhase,
  Phase,
};

// One gate application. Every kind has exactly one target; control arity is
// fixed per kind except MultiControlledX. angle is meaningful only for the
// phase kinds.
struct GateOp {
  GateKind kind = GateKind::Hadamard;
  std::vector<int> controls;
  std::vector<int> targets;
  double angle = 0.0;
};

inline GateOp h(int target) { return {GateKind::Hadamard, {}, {target}, 0.0}; }
inline GateOp x(int target) { return {GateKind::PauliX, {}, {target}, 0.0}; }
inline GateOp cx(int control, int target) { return {GateKind::CNot, {control}, {target}, 0.0}; }
inline GateOp ccx(int c0, int c1, int target) { return {GateKind::CCNot, {c0, c1}, {target}, 0.0}; }
inline GateOp mcx(std::vector<int> controls, int target) {
  return {GateKind::MultiControlledX, std::move(controls), {target}, 0.0};
}
inline GateOp phase(double angle, int target) { return {GateKind::Phase, {}, {target}, angle}; }
inline GateOp cphase(double angle, int control, int target) {
  return {GateKind::ControlledPhase, {control}, {target}, angle};
}

namespace detail {

inline std::size_t expected_controls(GateKind kind) {
  switch (kind) {
    case GateKind::Hadamard:
    case GateKind::PauliX:
    case GateKind::Phase:
      return 0;
    case GateKind::CNot:
    case GateKind::ControlledPhase:
      return 1;
    case GateKind::CCNot:
      return 2;
    case GateKind::MultiControlledX:
      return std::size_t(-1);  // one or more
  }
  return 0;
}

inline void validate_gate(const GateOp& op, int num_qubits) {
  if (op.targets.size() != 1) throw std::invalid_argument("gate requires exactly one target");
  const std::size_t want = expected_controls(op.kind);
  if (want == std::size_t(-1)) {
    if (op.controls.empty()) throw std::invalid_argument("multi-controlled X requires at least one control");
  } else if (op.controls.size() != want) {
    throw std::invalid_argument("gate has wrong control arity");
  }
  const int t = op.targets[0];
  if (t < 0 || t >= num_qubits) throw std::invalid_argument("target qubit out of range");
  for (std::size_t i = 0; i < op.controls.size(); ++i) {
    const int c = op.controls[i];
    if (c < 0 || c >= num_qubits) throw std::invalid_argument("control qubit out of range");
    if (c == t) throw std::invalid_argument("control and target qubits must be disjoint");
    for (std::size_t j = i + 1; j < op.controls.size(); ++j)
      if (op.controls[j] == c) throw std::invalid_argument("duplicate control qubit");
  }
  if (!std::isfinite(op.angle)) throw std::invalid_argument("gate angle must be finite");
}

}  // namespace detail

struct Circuit {
  int num_qubits = 0;
  std::vector<GateOp> ops;

  Circuit() = default;
  explicit Circuit(int n) : num_qubits(n) {}

  void append(GateOp op) {
    detail::validate_gate(op, num_qubits);
    ops.push_back(std::move(op));
  }
};

inline QuantumState init_state(int num_qubits, std::uint64_t basis_index) {
  if (num_qubits < 1) throw std::invalid_argument("state needs at least one qubit");
  if (num_qubits > kMaxQubits)
    throw resource_error("requested " + std::to_string(num_qubits) + " qubits, simulator cap is " +
                         std::to_string(kMaxQubits));
  const std::uint64_t dim = 1ull << num_qubits;
  if (basis_index >= dim) throw std::invalid_argument("basis index out of range for state width");
  QuantumState s;
  s.num_qubits = num_qubits;
  s.amps.assign(dim, cplx(0.0, 0.0));
  s.amps[basis_index] = cplx(1.0, 0.0);
  return s;
}

inline void apply_gate(QuantumState& state, const GateOp& op) {
  detail::validate_gate(op, state.num_qubits);
  const std::uint64_t dim = state.amps.size();
  const std::uint64_t tm = 1ull << op.targets[0];
  std::uint64_t cmask = 0;
  for (int c : op.controls) cmask |= 1ull << c;
  auto& a = state.amps;

  switch (op.kind) {
    case GateKind::Hadamard: {
      constexpr double inv_sqrt2 = 0.70710678118654752440084436210485;
      for (std::uint64_t base = 0; base < dim; base += tm << 1)
        for (std::uint64_t i = base; i < base + tm; ++i) {
          const cplx a0 = a[i], a1 = a[i | tm];
          a[i] = (a0 + a1) * inv_sqrt2;
          a[i | tm] = (a0 - a1) * inv_sqrt2;
        }
      break;
    }
    case GateKind::PauliX:
      for (std::uint64_t base = 0; base < dim; base += tm << 1)
        for (std::uint64_t i = base; i < base + tm; ++i) std::swap(a[i], a[i | tm]);
      break;
    case GateKind::CNot:
    case GateKind::CCNot:
    case GateKind::MultiControlledX:
      // Controlled flips permute amplitude pairs; no decomposition is used.
      for (std::uint64_t base = 0; base < dim; base += tm << 1)
        for (std::uint64_t i = base; i < base + tm; ++i)
          if ((i & cmask) == cmask) std::swap(a[i], a[i | tm]);
      break;
    case GateKind::Phase: {
      const cplx w = std::polar(1.0, op.angle);
      for (std::uint64_t base = 0; base < dim; base += tm << 1)
        for (std::uint64_t i = base; i < base + tm; ++i) a[i | tm] *= w;
      break;
    }
    case GateKind::ControlledPhase: {
      const cplx w = std::polar(1.0, op.angle);
      for (std::uint64_t base = 0; base < dim; base += tm << 1)
        for (std::uint64_t i = base; i < base + tm; ++i)
          if ((i & cmask) == cmask) a[i | tm] *= w;
      break;
    }
  }
}

inline void apply_circuit(QuantumState& state, const Circuit& circuit) {
  if (circuit.num_qubits != state.num_qubits)
    throw std::invalid_argument("circuit width does not match state width");
  for (const GateOp& op : circuit.ops) apply_gate(state, op);
}

inline Circuit invert_circuit(const Circuit& circuit) {
  Circuit inv(circuit.num_qubits);
  inv.ops.reserve(circuit.ops.size());
  for (auto it = circuit.ops.rbegin(); it != circuit.ops.rend(); ++it) {
    GateOp op = *it;
    if (op.kind == GateKind::Phase || op.kind == GateKind::ControlledPhase) op.angle = -op.angle;
    inv.ops.push_back(std::move(op));
  }
  return inv;
}

namespace detail {

// Emits the exact DFT on the given register, qubits[0] holding the least
// significant bit: |x> -> 2^{-m/2} sum_y exp(2*pi*i*x*y/2^m) |y>.
inline void append_qft(Circuit& c, const std::vector<int>& qubits) {
  const int m = static_cast<int>(qubits.size());
  constexpr double pi = 3.1415926535897932384626433832795;
  for (int j = m - 1; j >= 0; --j) {
    c.append(h(qubits[j]));
    for (int l = j - 1; l >= 0; --l) c.append(cphase(pi / double(1ull << (j - l)), qubits[l], qubits[j]));
  }
  for (int i = 0; i < m / 2; ++i) {
    const int p = qubits[i], q = qubits[m - 1 - i];
    c.append(cx(p, q));
    c.append(cx(q, p));
    c.append(cx(p, q));
  }
}

}  // namespace detail

// QFT circuit over the listed qubits. num_qubits picks the circuit width;
// 0 means just wide enough to hold the register.
inline Circuit build_qft(const std::vector<int>& qubits, int num_qubits = 0) {
  if (qubits.empty()) throw std::invalid_argument("QFT register must be non-empty");
  int hi = 0;
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    if (qubits[i] < 0) throw std::invalid_argument("QFT register qubit out of range");
    hi = std::max(hi, qubits[i]);
    for (std::size_t j = i + 1; j < qubits.size(); ++j)
      if (qubits[j] == qubits[i]) throw std::invalid_argument("duplicate qubit in QFT register");
  }
  if (num_qubits == 0) num_qubits = hi + 1;
  if (hi >= num_qubits) throw std::invalid_argument("QFT register qubit out of range");
  Circuit c(num_qubits);
  detail::append_qft(c, qubits);
  return c;
}

struct MeasurementSample {
  std::string bits;  // bits[j] is the measured value of qubits[j]
  int shot_index = 0;
};

namespace detail {

inline void validate_register(const QuantumState& state, const std::vector<int>& qubits) {
  if (qubits.empty()) throw std::invalid_argument("measurement register must be non-empty");
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    if (qubits[i] < 0 || qubits[i] >= state.num_qubits)
      throw std::invalid_argument("measured qubit out of range");
    for (std::size_t j = i + 1; j < qubits.size(); ++j)
      if (qubits[j] == qubits[i]) throw std::invalid_argument("duplicate qubit in measurement register");
  }
}

}  // namespace detail

// Marginal distribution over the listed qubits; entry p[v] sums |amp|^2 over
// basis states whose register pattern encodes v with qubits[0] as bit 0.
inline std::vector<double> measurement_distribution(const QuantumState& state, const std::vector<int>& qubits) {
  detail::validate_register(state, qubits);
  const int k = static_cast<int>(qubits.size());
  std::vector<double> p(std::size_t(1) << k, 0.0);
  const std::uint64_t dim = state.amps.size();
  for (std::uint64_t i = 0; i < dim; ++i) {
    const double w = std::norm(state.amps[i]);
    if (w == 0.0) continue;
    std::uint64_t v = 0;
    for (int j = 0; j < k; ++j) v |= ((i >> qubits[j]) & 1ull) << j;
    p[v] += w;
  }
  return p;
}

inline std::vector<MeasurementSample> sample_measurement(const QuantumState& state,
                                                         const std::vector<int>& qubits, int shots,
                                                         std::uint64_t seed) {
  if (shots < 0) throw std::invalid_argument("shot count must be non-negative");
  const std::vector<double> p = measurement_distribution(state, qubits);
  const int k = static_cast<int>(qubits.size());
  std::vector<MeasurementSample> out;
  out.reserve(shots);
  for (int s = 0; s < shots; ++s) {
    SplitMix rng(derive_key(seed, {0x73686f74ull, std::uint64_t(s)}));
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t v = p.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        v = i;
        break;
      }
    }
    std::string bits(k, '0');
    for (int j = 0; j < k; ++j) bits[j] = ((v >> j) & 1) ? '1' : '0';
    out.push_back({std::move(bits), s});
  }
  return out;
}

// Probability that measuring the listed qubits yields the given pattern,
// bits[j] matching qubits[j].
inline double basis_probability(const QuantumState& state, const std::vector<int>& qubits,
                                const std::string& bits) {
  detail::validate_register(state, qubits);
  if (bits.size() != qubits.size()) throw std::invalid_argument("pattern length must match register size");
  std::uint64_t want = 0, mask = 0;
  for (std::size_t j = 0; j < qubits.size(); ++j) {
    mask |= 1ull << qubits[j];
    if (bits[j] == '1')
      want |= 1ull << qubits[j];
    else if (bits[j] != '0')
      throw std::invalid_argument("pattern must contain only '0' and '1'");
  }
  double p = 0.0;
  const std::uint64_t dim = state.amps.size();
  for (std::uint64_t i = 0; i < dim; ++i)
    if ((i & mask) == want) p += std::norm(state.amps[i]);
  return p;
}

// Squared norm of the state; 1 for any physical state.
inline double total_probability(const QuantumState& state) {
  double p = 0.0;
  for (const cplx& a : state.amps) p += std::norm(a);
  return p;
}

}  // namespace qrf::qsim
