#pragma once

#include <span>
#include <vector>

#include "hqrl/qsim.hpp"
#include "hqrl/rng.hpp"
#include "hqrl/tensor.hpp"

namespace hqrl::pqc {

/// Layered data re-uploading circuit: each layer is a variational block
/// (RX, RY, RZ on every qubit, in that order), a circular CZ entangling
/// block, and an encoding block (one RX per qubit consuming the next n
/// features). A final variational block closes the circuit, followed by
/// qubit-wise Z measurements.
struct PqcArchitecture {
    int n_qubits = 0;
    int n_layers = 0;

    int n_params() const { return 3 * n_qubits * (n_layers + 1); }
    int n_encoding() const { return n_qubits * n_layers; }

    // Flattened parameter layout: block-major, then qubit, then axis
    // (RX, RY, RZ). Blocks 0..n_layers inclusive.
    int param_index(int block, int qubit, int axis) const {
        return 3 * (block * n_qubits + qubit) + axis;
    }
    // Features are consumed layer-wise: the first n in encoding block 0, ...
    int feature_index(int block, int qubit) const { return block * n_qubits + qubit; }

    void validate() const;
};

/// Variational angles in the layout documented on PqcArchitecture.
struct PqcParameters {
    std::vector<double> theta;
};

constexpr double kInitStddevFactor = 0.01; // theta_i ~ N(0, (0.01*pi)^2)

PqcParameters init_params(const PqcArchitecture& arch, Rng& rng);

/// Jacobians of the n circuit outputs. Rows index outputs <Z_0>..<Z_{n-1}>;
/// columns index flattened variational parameters (d_theta) or encoding
/// features (d_x).
struct PqcGradient {
    Tensor<double> d_theta; // n_qubits x n_params
    Tensor<double> d_x;     // n_qubits x n_encoding
};

/// Forward evaluation to per-qubit Z expectations (each in [-1, 1]).
std::vector<double> pqc_forward(const PqcArchitecture& arch, const PqcParameters& params,
                                std::span<const double> features);

/// Parameter-shift gradients: (f(a + pi/2) - f(a - pi/2)) / 2 per angle,
/// applied to variational parameters and encoding angles alike. Exact for
/// analytic expectations; the hardware-faithful route.
PqcGradient pqc_grad_shift(const PqcArchitecture& arch, const PqcParameters& params,
                           std::span<const double> features);

/// Exact gradients via a reverse sweep over the simulated circuit; one
/// forward pass plus two backward statevectors per output. Must agree with
/// pqc_grad_shift to 1e-10.
PqcGradient pqc_grad_adjoint(const PqcArchitecture& arch, const PqcParameters& params,
                             std::span<const double> features);

/// One-parameter slice model f(angle) = amplitude*sin(angle + phase) + offset.
struct SinusoidFit {
    double amplitude = 0.0;
    double phase = 0.0;
    double offset = 0.0;

    double eval(double angle) const;
};

/// Least-squares fit of the slice model to >= 3 samples (angle, value).
/// Throws NumericalError on degenerate placement (angles collinear mod pi).
SinusoidFit fit_sinusoid(std::span<const std::pair<double, double>> samples);

} // namespace hqrl::pqc
