#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "hqrl/error.hpp"
#include "hqrl/rng.hpp"

namespace hqrl::qsim {

using cplx = std::complex<double>;

// Dense simulation is exact but exponential; the hybrid models here never
// need more than a handful of qubits.
constexpr int kMaxQubits = 12;

/// Full statevector of an n-qubit register. Qubit 0 is the least significant
/// bit of the basis-state index; amplitudes are a flat array of length 2^n.
struct StateVector {
    int n_qubits = 0;
    std::vector<cplx> amps;

    std::size_t size() const { return amps.size(); }
};

/// |0...0> on n_qubits qubits.
StateVector init_state(int n_qubits);

enum class GateKind { RX, RY, RZ, CZ };

/// One circuit element: a parameterized Pauli rotation on `target`, or a CZ
/// between `control` and `target`.
struct GateOp {
    GateKind kind = GateKind::RX;
    int target = 0;
    int control = -1;   // CZ only
    double angle = 0.0; // rotations only

    static GateOp rx(int q, double theta) { return {GateKind::RX, q, -1, theta}; }
    static GateOp ry(int q, double theta) { return {GateKind::RY, q, -1, theta}; }
    static GateOp rz(int q, double theta) { return {GateKind::RZ, q, -1, theta}; }
    static GateOp cz(int control, int target) { return {GateKind::CZ, target, control, 0.0}; }
};

/// In-place application of a gate via stride-paired amplitude updates.
void apply_gate(StateVector& s, const GateOp& g);

// Bare Pauli applications, used by the adjoint gradient pass.
void apply_pauli_x(StateVector& s, int qubit);
void apply_pauli_y(StateVector& s, int qubit);
void apply_pauli_z(StateVector& s, int qubit);

/// <Z_qubit> = sum_k |amp_k|^2 * (+1 if bit `qubit` of k is 0 else -1).
/// Summation runs over fixed-size blocks accumulated in index order, so the
/// result is bit-identical regardless of thread count.
double expectation_z(const StateVector& s, int qubit);

double squared_norm(const StateVector& s);

/// <a|b> with the same deterministic blocked reduction as expectation_z.
cplx inner_product(const StateVector& a, const StateVector& b);

/// Throws NumericalError if |norm^2 - 1| exceeds tol. Gate application never
/// renormalizes; drift beyond tol indicates an implementation bug.
void check_norm(const StateVector& s, double tol = 1e-8);

struct ShotCounts {
    std::int64_t plus = 0;
    std::int64_t minus = 0;
};

/// Born-rule sampling of a Z measurement on one qubit. Analytic expectations
/// are the default everywhere else; this exists for experimentation.
ShotCounts sample_z(const StateVector& s, int qubit, std::int64_t shots, Rng& rng);

// Plain serial loops, kept as the reference implementation for tests and the
// kernel benchmark. Same contracts as the primary kernels above.
namespace serial {
void apply_gate(StateVector& s, const GateOp& g);
double expectation_z(const StateVector& s, int qubit);
double squared_norm(const StateVector& s);
} // namespace serial

} // namespace hqrl::qsim
