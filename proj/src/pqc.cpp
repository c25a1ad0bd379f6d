#include "hqrl/pqc.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hqrl::pqc {

using qsim::GateKind;
using qsim::GateOp;
using qsim::StateVector;

namespace {

// One gate of the unrolled circuit, tagged with the flat index of the
// variational parameter or encoding feature it consumes (-1 for CZ).
struct PlannedGate {
    GateOp op;
    int param_index = -1;
    int feature_index = -1;
};

void append_variational_block(const PqcArchitecture& arch, const PqcParameters& p, int block,
                              std::vector<PlannedGate>& plan) {
    for (int q = 0; q < arch.n_qubits; ++q) {
        for (int axis = 0; axis < 3; ++axis) {
            const int idx = arch.param_index(block, q, axis);
            const GateKind kind = axis == 0 ? GateKind::RX : (axis == 1 ? GateKind::RY : GateKind::RZ);
            plan.push_back({GateOp{kind, q, -1, p.theta[static_cast<std::size_t>(idx)]}, idx, -1});
        }
    }
}

// Circular topology 1->2, 2->3, ..., n-1->n, 1->n. One qubit entangles
// nothing; two qubits reduce to a single CZ (CZ twice is the identity).
void append_entangling_block(const PqcArchitecture& arch, std::vector<PlannedGate>& plan) {
    const int n = arch.n_qubits;
    if (n < 2) return;
    for (int q = 0; q + 1 < n; ++q) plan.push_back({GateOp::cz(q, q + 1), -1, -1});
    if (n > 2) plan.push_back({GateOp::cz(0, n - 1), -1, -1});
}

void append_encoding_block(const PqcArchitecture& arch, std::span<const double> x, int block,
                           std::vector<PlannedGate>& plan) {
    for (int q = 0; q < arch.n_qubits; ++q) {
        const int idx = arch.feature_index(block, q);
        plan.push_back({GateOp::rx(q, x[static_cast<std::size_t>(idx)]), -1, idx});
    }
}

std::vector<PlannedGate> build_plan(const PqcArchitecture& arch, const PqcParameters& params,
                                    std::span<const double> x) {
    arch.validate();
    if (static_cast<int>(params.theta.size()) != arch.n_params())
        throw ArgumentError("pqc: expected " + std::to_string(arch.n_params()) +
                            " variational parameters, got " + std::to_string(params.theta.size()));
    if (static_cast<int>(x.size()) != arch.n_encoding())
        throw ArgumentError("pqc: expected " + std::to_string(arch.n_encoding()) +
                            " features, got " + std::to_string(x.size()));

    std::vector<PlannedGate> plan;
    plan.reserve(static_cast<std::size_t>(arch.n_params() + arch.n_encoding() + arch.n_layers * arch.n_qubits));
    for (int layer = 0; layer < arch.n_layers; ++layer) {
        append_variational_block(arch, params, layer, plan);
        append_entangling_block(arch, plan);
        append_encoding_block(arch, x, layer, plan);
    }
    append_variational_block(arch, params, arch.n_layers, plan);
    return plan;
}

std::vector<double> run_plan(const PqcArchitecture& arch, const std::vector<PlannedGate>& plan) {
    StateVector s = qsim::init_state(arch.n_qubits);
    for (const PlannedGate& g : plan) qsim::apply_gate(s, g.op);
    qsim::check_norm(s);
    std::vector<double> out(static_cast<std::size_t>(arch.n_qubits));
    for (int q = 0; q < arch.n_qubits; ++q) out[static_cast<std::size_t>(q)] = qsim::expectation_z(s, q);
    return out;
}

void apply_generator(StateVector& s, const GateOp& op) {
    switch (op.kind) {
    case GateKind::RX: qsim::apply_pauli_x(s, op.target); break;
    case GateKind::RY: qsim::apply_pauli_y(s, op.target); break;
    case GateKind::RZ: qsim::apply_pauli_z(s, op.target); break;
    default: throw StateError("apply_generator: CZ has no generator parameter");
    }
}

GateOp inverted(const GateOp& op) {
    if (op.kind == GateKind::CZ) return op;
    GateOp inv = op;
    inv.angle = -op.angle;
    return inv;
}

} // namespace

void PqcArchitecture::validate() const {
    if (n_qubits < 1 || n_qubits > qsim::kMaxQubits)
        throw ConfigError("PqcArchitecture: n_qubits must be in [1, " +
                          std::to_string(qsim::kMaxQubits) + "]");
    if (n_layers < 1) throw ConfigError("PqcArchitecture: n_layers must be >= 1");
}

PqcParameters init_params(const PqcArchitecture& arch, Rng& rng) {
    arch.validate();
    std::normal_distribution<double> dist(0.0, kInitStddevFactor * std::numbers::pi);
    PqcParameters p;
    p.theta.resize(static_cast<std::size_t>(arch.n_params()));
    for (double& t : p.theta) t = dist(rng);
    return p;
}

std::vector<double> pqc_forward(const PqcArchitecture& arch, const PqcParameters& params,
                                std::span<const double> features) {
    return run_plan(arch, build_plan(arch, params, features));
}

PqcGradient pqc_grad_shift(const PqcArchitecture& arch, const PqcParameters& params,
                           std::span<const double> features) {
    const double half_pi = std::numbers::pi / 2.0;
    PqcGradient g;
    g.d_theta = Tensor<double>({arch.n_qubits, arch.n_params()});
    g.d_x = Tensor<double>({arch.n_qubits, arch.n_encoding()});

    PqcParameters shifted = params;
    for (int i = 0; i < arch.n_params(); ++i) {
        const double orig = shifted.theta[static_cast<std::size_t>(i)];
        shifted.theta[static_cast<std::size_t>(i)] = orig + half_pi;
        const std::vector<double> plus = pqc_forward(arch, shifted, features);
        shifted.theta[static_cast<std::size_t>(i)] = orig - half_pi;
        const std::vector<double> minus = pqc_forward(arch, shifted, features);
        shifted.theta[static_cast<std::size_t>(i)] = orig;
        for (int o = 0; o < arch.n_qubits; ++o)
            g.d_theta.at(o, i) = (plus[static_cast<std::size_t>(o)] - minus[static_cast<std::size_t>(o)]) / 2.0;
    }

    std::vector<double> x(features.begin(), features.end());
    for (int j = 0; j < arch.n_encoding(); ++j) {
        const double orig = x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(j)] = orig + half_pi;
        const std::vector<double> plus = pqc_forward(arch, params, x);
        x[static_cast<std::size_t>(j)] = orig - half_pi;
        const std::vector<double> minus = pqc_forward(arch, params, x);
        x[static_cast<std::size_t>(j)] = orig;
        for (int o = 0; o < arch.n_qubits; ++o)
            g.d_x.at(o, j) = (plus[static_cast<std::size_t>(o)] - minus[static_cast<std::size_t>(o)]) / 2.0;
    }
    return g;
}

PqcGradient pqc_grad_adjoint(const PqcArchitecture& arch, const PqcParameters& params,
                             std::span<const double> features) {
    const std::vector<PlannedGate> plan = build_plan(arch, params, features);

    StateVector final_state = qsim::init_state(arch.n_qubits);
    for (const PlannedGate& g : plan) qsim::apply_gate(final_state, g.op);
    qsim::check_norm(final_state);

    PqcGradient grad;
    grad.d_theta = Tensor<double>({arch.n_qubits, arch.n_params()});
    grad.d_x = Tensor<double>({arch.n_qubits, arch.n_encoding()});

    // For each observable Z_o, sweep the circuit backwards keeping
    //   phi    = state after the current gate,
    //   lambda = (remaining circuit)^dagger Z_o |psi>.
    // d<Z_o>/d(angle of gate with generator P) = Im <lambda| P |phi>.
    StateVector phi, lambda, scratch;
    for (int o = 0; o < arch.n_qubits; ++o) {
        phi = final_state;
        lambda = final_state;
        qsim::apply_pauli_z(lambda, o);
        for (auto it = plan.rbegin(); it != plan.rend(); ++it) {
            if (it->param_index >= 0 || it->feature_index >= 0) {
                scratch = phi;
                apply_generator(scratch, it->op);
                const double d = qsim::inner_product(lambda, scratch).imag();
                if (it->param_index >= 0)
                    grad.d_theta.at(o, it->param_index) = d;
                else
                    grad.d_x.at(o, it->feature_index) = d;
            }
            const GateOp inv = inverted(it->op);
            qsim::apply_gate(phi, inv);
            qsim::apply_gate(lambda, inv);
        }
    }
    return grad;
}

double SinusoidFit::eval(double angle) const { return amplitude * std::sin(angle + phase) + offset; }

SinusoidFit fit_sinusoid(std::span<const std::pair<double, double>> samples) {
    if (samples.size() < 3) throw ArgumentError("fit_sinusoid: need at least 3 samples");

    // a*sin(t + b) + c = u*sin(t) + v*cos(t) + c is linear in (u, v, c);
    // solve the 3x3 normal equations.
    double m[3][3] = {};
    double rhs[3] = {};
    for (const auto& [t, y] : samples) {
        const double basis[3] = {std::sin(t), std::cos(t), 1.0};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += basis[r] * basis[c];
            rhs[r] += basis[r] * y;
        }
    }

    // Gaussian elimination with partial pivoting.
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[pivot]][col])) pivot = r;
        std::swap(perm[col], perm[pivot]);
        const double diag = m[perm[col]][col];
        if (std::abs(diag) < 1e-9)
            throw NumericalError("fit_sinusoid: degenerate sample placement");
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[perm[r]][col] / diag;
            for (int c = col; c < 3; ++c) m[perm[r]][c] -= f * m[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    double sol[3];
    for (int col = 2; col >= 0; --col) {
        double acc = rhs[perm[col]];
        for (int c = col + 1; c < 3; ++c) acc -= m[perm[col]][c] * sol[c];
        sol[col] = acc / m[perm[col]][col];
    }

    SinusoidFit fit;
    fit.amplitude = std::hypot(sol[0], sol[1]);
    fit.phase = std::atan2(sol[1], sol[0]);
    fit.offset = sol[2];
    return fit;
}

} // namespace hqrl::pqc
