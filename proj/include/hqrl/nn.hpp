#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hqrl/error.hpp"
#include "hqrl/rng.hpp"
#include "hqrl/tensor.hpp"

namespace hqrl::nn {

enum class Activation { Linear, ReLU, TanhPi };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// floor((in - kernel) / stride) + 1; throws ConfigError unless positive.
int conv_out_size(int in_size, int kernel, int stride);

struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 0;

    void validate() const;
    friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct DenseSpec {
    int in_dim = 0;
    int out_dim = 0;
    Activation act = Activation::Linear;

    void validate() const;
    long long n_params() const { return static_cast<long long>(in_dim) * out_dim + out_dim; }
    friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

/// Valid (unpadded) convolution with ReLU, weights in [k, k, in, out]
/// layout so the output-channel loop is contiguous. Input and output are
/// HWC tensors.
template <class T>
struct ConvLayer {
    ConvSpec spec;
    Tensor<T> w; // k x k x in x out
    Tensor<T> b; // out

    long long n_params() const { return static_cast<long long>(w.v.size() + b.v.size()); }
};

template <class T>
struct DenseLayer {
    DenseSpec spec;
    Tensor<T> w; // in x out
    Tensor<T> b; // out

    long long n_params() const { return static_cast<long long>(w.v.size() + b.v.size()); }
};

template <class T>
ConvLayer<T> make_conv(const ConvSpec& spec);
template <class T>
DenseLayer<T> make_dense(const DenseSpec& spec);

/// He-style uniform fan-in init for the ReLU conv layers, Glorot-style
/// uniform for dense layers; biases start at zero.
template <class T>
void init_conv(ConvLayer<T>& layer, Rng& rng);
template <class T>
void init_dense(DenseLayer<T>& layer, Rng& rng);

template <class T>
struct ConvCache {
    Tensor<T> input;
    Tensor<T> pre; // pre-activation output
    bool valid = false;
};

template <class T>
struct DenseCache {
    Tensor<T> input;
    Tensor<T> pre;
    bool valid = false;
};

template <class T>
struct ConvGrads {
    Tensor<T> d_w, d_b, d_input;
};

template <class T>
struct DenseGrads {
    Tensor<T> d_w, d_b, d_input;
};

template <class T>
Tensor<T> conv2d_forward(const ConvLayer<T>& layer, const Tensor<T>& input,
                         ConvCache<T>* cache = nullptr);
template <class T>
ConvGrads<T> conv2d_backward(const ConvLayer<T>& layer, const ConvCache<T>& cache,
                             const Tensor<T>& d_out);

template <class T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& input,
                        DenseCache<T>* cache = nullptr);
template <class T>
DenseGrads<T> dense_backward(const DenseLayer<T>& layer, const DenseCache<T>& cache,
                             const Tensor<T>& d_out);

/// pi * tanh(x); strictly inside (-pi, pi) for finite x. tanh saturates to
/// exactly 1.0 in double arithmetic around |x| ~ 19, so the boundary is
/// nudged one ulp inward to keep the open-interval guarantee.
inline double tanh_pi(double x) {
    constexpr double kPi = 3.14159265358979323846;
    const double y = kPi * std::tanh(x);
    if (y >= kPi) return std::nextafter(kPi, 0.0);
    if (y <= -kPi) return std::nextafter(-kPi, 0.0);
    return y;
}
inline double tanh_pi_derivative(double x) {
    const double t = std::tanh(x);
    return 3.14159265358979323846 * (1.0 - t * t);
}

template <class T>
struct AdamState {
    std::vector<T> m, v;
    long long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

/// One bias-corrected Adam update over a flat parameter group.
template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr);

// Plain-loop reference implementations used by tests and the kernel
// benchmark. Each output element is a fixed-order accumulation in both
// paths, so the parallel kernels are bit-identical across thread counts;
// serial-vs-parallel agreement is checked to tight tolerance (the two
// compiled loops may contract multiplies differently).
namespace serial {
template <class T>
Tensor<T> conv2d_forward(const ConvLayer<T>& layer, const Tensor<T>& input,
                         ConvCache<T>* cache = nullptr);
template <class T>
ConvGrads<T> conv2d_backward(const ConvLayer<T>& layer, const ConvCache<T>& cache,
                             const Tensor<T>& d_out);
template <class T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& input,
                        DenseCache<T>* cache = nullptr);
template <class T>
DenseGrads<T> dense_backward(const DenseLayer<T>& layer, const DenseCache<T>& cache,
                             const Tensor<T>& d_out);
} // namespace serial

} // namespace hqrl::nn
