#include "hqrl/qsim.hpp"

#include <cmath>
#include <string>

namespace hqrl::qsim {

namespace {

// Block length for deterministic reductions. Partial sums are always formed
// per block in index order and combined sequentially, so the rounding path
// does not depend on the number of threads.
constexpr std::size_t kRedBlock = 1024;

// Below this state size the parallel paths fall back to plain loops.
constexpr std::size_t kParThreshold = std::size_t(1) << 10;

void check_qubit(const StateVector& s, int q, const char* what) {
    if (q < 0 || q >= s.n_qubits)
        throw ArgumentError(std::string(what) + ": qubit index " + std::to_string(q) +
                            " out of range for " + std::to_string(s.n_qubits) + " qubits");
}

struct Mat2 {
    cplx u00, u01, u10, u11;
};

Mat2 rotation_matrix(GateKind kind, double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    switch (kind) {
    case GateKind::RX:
        return {cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0)};
    case GateKind::RY:
        return {cplx(c, 0), cplx(-s, 0), cplx(s, 0), cplx(c, 0)};
    case GateKind::RZ:
        return {cplx(c, -s), cplx(0, 0), cplx(0, 0), cplx(c, s)};
    default:
        throw ArgumentError("rotation_matrix: not a rotation gate");
    }
}

// Index of the k-th basis state whose `mask` bit is clear.
inline std::size_t pair_base(std::size_t k, std::size_t mask) {
    return ((k & ~(mask - 1)) << 1) | (k & (mask - 1));
}

void apply_mat2(StateVector& s, int target, const Mat2& m) {
    const std::size_t mask = std::size_t(1) << target;
    const std::size_t pairs = s.size() / 2;
    auto body = [&](std::size_t k) {
        const std::size_t i0 = pair_base(k, mask);
        const std::size_t i1 = i0 | mask;
        const cplx a = s.amps[i0];
        const cplx b = s.amps[i1];
        s.amps[i0] = m.u00 * a + m.u01 * b;
        s.amps[i1] = m.u10 * a + m.u11 * b;
    };
    if (pairs >= kParThreshold) {
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(pairs); ++k) body(static_cast<std::size_t>(k));
    } else {
        for (std::size_t k = 0; k < pairs; ++k) body(k);
    }
}

void apply_cz(StateVector& s, int control, int target) {
    const std::size_t cmask = std::size_t(1) << control;
    const std::size_t tmask = std::size_t(1) << target;
    const std::size_t n = s.size();
    if (n >= kParThreshold) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            const auto u = static_cast<std::size_t>(i);
            if ((u & cmask) && (u & tmask)) s.amps[u] = -s.amps[u];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if ((i & cmask) && (i & tmask)) s.amps[i] = -s.amps[i];
    }
}

template <class F>
double blocked_sum(std::size_t n, F&& term) {
    const std::size_t nblocks = (n + kRedBlock - 1) / kRedBlock;
    if (nblocks <= 1) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += term(i);
        return acc;
    }
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nblocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kRedBlock;
        const std::size_t hi = std::min(lo + kRedBlock, n);
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += term(i);
        partial[static_cast<std::size_t>(b)] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace

StateVector init_state(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw ConfigError("init_state: n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                          "], got " + std::to_string(n_qubits));
    StateVector s;
    s.n_qubits = n_qubits;
    s.amps.assign(std::size_t(1) << n_qubits, cplx(0.0, 0.0));
    s.amps[0] = cplx(1.0, 0.0);
    return s;
}

void apply_gate(StateVector& s, const GateOp& g) {
    check_qubit(s, g.target, "apply_gate");
    if (g.kind == GateKind::CZ) {
        check_qubit(s, g.control, "apply_gate");
        if (g.control == g.target) throw ArgumentError("apply_gate: CZ control equals target");
        apply_cz(s, g.control, g.target);
        return;
    }
    apply_mat2(s, g.target, rotation_matrix(g.kind, g.angle));
}

void apply_pauli_x(StateVector& s, int qubit) {
    check_qubit(s, qubit, "apply_pauli_x");
    apply_mat2(s, qubit, {cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(0, 0)});
}

void apply_pauli_y(StateVector& s, int qubit) {
    check_qubit(s, qubit, "apply_pauli_y");
    apply_mat2(s, qubit, {cplx(0, 0), cplx(0, -1), cplx(0, 1), cplx(0, 0)});
}

void apply_pauli_z(StateVector& s, int qubit) {
    check_qubit(s, qubit, "apply_pauli_z");
    const std::size_t mask = std::size_t(1) << qubit;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i & mask) s.amps[i] = -s.amps[i];
}

double expectation_z(const StateVector& s, int qubit) {
    check_qubit(s, qubit, "expectation_z");
    const std::size_t mask = std::size_t(1) << qubit;
    return blocked_sum(s.size(), [&](std::size_t i) {
        const double p = std::norm(s.amps[i]);
        return (i & mask) ? -p : p;
    });
}

double squared_norm(const StateVector& s) {
    return blocked_sum(s.size(), [&](std::size_t i) { return std::norm(s.amps[i]); });
}

cplx inner_product(const StateVector& a, const StateVector& b) {
    if (a.n_qubits != b.n_qubits) throw ArgumentError("inner_product: qubit count mismatch");
    const double re = blocked_sum(a.size(), [&](std::size_t i) {
        return a.amps[i].real() * b.amps[i].real() + a.amps[i].imag() * b.amps[i].imag();
    });
    const double im = blocked_sum(a.size(), [&](std::size_t i) {
        return a.amps[i].real() * b.amps[i].imag() - a.amps[i].imag() * b.amps[i].real();
    });
    return {re, im};
}

void check_norm(const StateVector& s, double tol) {
    const double n2 = squared_norm(s);
    if (std::abs(n2 - 1.0) > tol)
        throw NumericalError("statevector norm drift: |psi|^2 = " + std::to_string(n2));
}

ShotCounts sample_z(const StateVector& s, int qubit, std::int64_t shots, Rng& rng) {
    check_qubit(s, qubit, "sample_z");
    if (shots < 1) throw ArgumentError("sample_z: shots must be >= 1");
    const std::size_t mask = std::size_t(1) << qubit;
    const double p_minus = blocked_sum(s.size(), [&](std::size_t i) {
        return (i & mask) ? std::norm(s.amps[i]) : 0.0;
    });
    std::binomial_distribution<std::int64_t> dist(shots, std::min(1.0, std::max(0.0, p_minus)));
    ShotCounts c;
    c.minus = dist(rng);
    c.plus = shots - c.minus;
    return c;
}

namespace serial {

void apply_gate(StateVector& s, const GateOp& g) {
    check_qubit(s, g.target, "serial::apply_gate");
    if (g.kind == GateKind::CZ) {
        check_qubit(s, g.control, "serial::apply_gate");
        if (g.control == g.target) throw ArgumentError("serial::apply_gate: CZ control equals target");
        const std::size_t cmask = std::size_t(1) << g.control;
        const std::size_t tmask = std::size_t(1) << g.target;
        for (std::size_t i = 0; i < s.size(); ++i)
            if ((i & cmask) && (i & tmask)) s.amps[i] = -s.amps[i];
        return;
    }
    const Mat2 m = rotation_matrix(g.kind, g.angle);
    const std::size_t mask = std::size_t(1) << g.target;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i & mask) continue;
        const cplx a = s.amps[i];
        const cplx b = s.amps[i | mask];
        s.amps[i] = m.u00 * a + m.u01 * b;
        s.amps[i | mask] = m.u10 * a + m.u11 * b;
    }
}

double expectation_z(const StateVector& s, int qubit) {
    check_qubit(s, qubit, "serial::expectation_z");
    const std::size_t mask = std::size_t(1) << qubit;
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double p = std::norm(s.amps[i]);
        acc += (i & mask) ? -p : p;
    }
    return acc;
}

double squared_norm(const StateVector& s) {
    double acc = 0.0;
    for (const cplx& a : s.amps) acc += std::norm(a);
    return acc;
}

} // namespace serial

} // namespace hqrl::qsim
