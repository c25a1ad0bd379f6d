#include "hqrl/nn.hpp"

#include <algorithm>
#include <string>

namespace hqrl::nn {

std::string to_string(Activation act) {
    switch (act) {
    case Activation::Linear: return "linear";
    case Activation::ReLU: return "relu";
    case Activation::TanhPi: return "tanh_pi";
    }
    throw StateError("unknown activation");
}

Activation activation_from_string(const std::string& name) {
    if (name == "linear") return Activation::Linear;
    if (name == "relu") return Activation::ReLU;
    if (name == "tanh_pi") return Activation::TanhPi;
    throw ConfigError("unknown activation '" + name + "' (expected linear, relu, or tanh_pi)");
}

int conv_out_size(int in_size, int kernel, int stride) {
    if (in_size < 1 || kernel < 1 || stride < 1)
        throw ConfigError("conv_out_size: sizes and stride must be positive");
    if (kernel > in_size)
        throw ConfigError("conv_out_size: kernel " + std::to_string(kernel) +
                          " exceeds input size " + std::to_string(in_size));
    return (in_size - kernel) / stride + 1;
}

void ConvSpec::validate() const {
    if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1)
        throw ConfigError("ConvSpec: all fields must be positive");
}

void DenseSpec::validate() const {
    if (in_dim < 1 || out_dim < 1) throw ConfigError("DenseSpec: dimensions must be positive");
}

template <class T>
ConvLayer<T> make_conv(const ConvSpec& spec) {
    spec.validate();
    ConvLayer<T> layer;
    layer.spec = spec;
    layer.w = Tensor<T>({spec.kernel, spec.kernel, spec.in_channels, spec.out_channels});
    layer.b = Tensor<T>({spec.out_channels});
    return layer;
}

template <class T>
DenseLayer<T> make_dense(const DenseSpec& spec) {
    spec.validate();
    DenseLayer<T> layer;
    layer.spec = spec;
    layer.w = Tensor<T>({spec.in_dim, spec.out_dim});
    layer.b = Tensor<T>({spec.out_dim});
    return layer;
}

template <class T>
void init_conv(ConvLayer<T>& layer, Rng& rng) {
    const double fan_in = static_cast<double>(layer.spec.kernel) * layer.spec.kernel * layer.spec.in_channels;
    const double limit = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (T& w : layer.w.v) w = static_cast<T>(dist(rng));
    layer.b.fill(T(0));
}

template <class T>
void init_dense(DenseLayer<T>& layer, Rng& rng) {
    const double limit = std::sqrt(6.0 / (static_cast<double>(layer.spec.in_dim) + layer.spec.out_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (T& w : layer.w.v) w = static_cast<T>(dist(rng));
    layer.b.fill(T(0));
}

namespace {

template <class T>
void check_conv_input(const ConvLayer<T>& layer, const Tensor<T>& input) {
    if (input.shape.size() != 3)
        throw ArgumentError("conv2d: input must be rank-3 HWC");
    if (input.shape[2] != layer.spec.in_channels)
        throw ArgumentError("conv2d: input has " + std::to_string(input.shape[2]) +
                            " channels, layer expects " + std::to_string(layer.spec.in_channels));
}

template <class T>
T activate(T pre, Activation act) {
    switch (act) {
    case Activation::Linear: return pre;
    case Activation::ReLU: return pre > T(0) ? pre : T(0);
    case Activation::TanhPi: return static_cast<T>(tanh_pi(static_cast<double>(pre)));
    }
    throw StateError("unknown activation");
}

template <class T>
T activation_slope(T pre, Activation act) {
    switch (act) {
    case Activation::Linear: return T(1);
    case Activation::ReLU: return pre > T(0) ? T(1) : T(0);
    case Activation::TanhPi: return static_cast<T>(tanh_pi_derivative(static_cast<double>(pre)));
    }
    throw StateError("unknown activation");
}

} // namespace

template <class T>
Tensor<T> conv2d_forward(const ConvLayer<T>& layer, const Tensor<T>& input, ConvCache<T>* cache) {
    check_conv_input(layer, input);
    const int H = input.shape[0], W = input.shape[1];
    const int K = layer.spec.kernel, S = layer.spec.stride;
    const int Ci = layer.spec.in_channels, Co = layer.spec.out_channels;
    const int OH = conv_out_size(H, K, S), OW = conv_out_size(W, K, S);

    Tensor<T> pre({OH, OW, Co});
    const T* in = input.v.data();
    const T* wp = layer.w.v.data();
    const T* bp = layer.b.v.data();
    T* out = pre.v.data();

#pragma omp parallel for schedule(static) if (OH >= 8)
    for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
            T* acc = out + (static_cast<std::size_t>(oy) * OW + ox) * Co;
            for (int co = 0; co < Co; ++co) acc[co] = bp[co];
            const int iy0 = oy * S, ix0 = ox * S;
            for (int ky = 0; ky < K; ++ky) {
                const T* in_row = in + (static_cast<std::size_t>(iy0 + ky) * W + ix0) * Ci;
                const T* w_row = wp + static_cast<std::size_t>(ky) * K * Ci * Co;
                for (int kx = 0; kx < K; ++kx) {
                    for (int ci = 0; ci < Ci; ++ci) {
                        const T s = in_row[kx * Ci + ci];
                        const T* w_vec = w_row + (static_cast<std::size_t>(kx) * Ci + ci) * Co;
#pragma omp simd
                        for (int co = 0; co < Co; ++co) acc[co] += s * w_vec[co];
                    }
                }
            }
        }
    }

    Tensor<T> activated = pre;
    for (T& v : activated.v) v = activate(v, Activation::ReLU);
    if (cache) {
        cache->input = input;
        cache->pre = std::move(pre);
        cache->valid = true;
    }
    return activated;
}

template <class T>
ConvGrads<T> conv2d_backward(const ConvLayer<T>& layer, const ConvCache<T>& cache,
                             const Tensor<T>& d_out) {
    if (!cache.valid) throw StateError("conv2d_backward: forward cache missing");
    const Tensor<T>& input = cache.input;
    const int H = input.shape[0], W = input.shape[1];
    const int K = layer.spec.kernel, S = layer.spec.stride;
    const int Ci = layer.spec.in_channels, Co = layer.spec.out_channels;
    const int OH = cache.pre.shape[0], OW = cache.pre.shape[1];
    check_same_shape(d_out, cache.pre, "conv2d_backward");

    Tensor<T> d_pre = d_out;
    for (std::size_t k = 0; k < d_pre.v.size(); ++k)
        d_pre.v[k] *= activation_slope(cache.pre.v[k], Activation::ReLU);

    ConvGrads<T> g;
    g.d_w = Tensor<T>({K, K, Ci, Co});
    g.d_b = Tensor<T>({Co});
    g.d_input = Tensor<T>({H, W, Ci});

    const T* in = input.v.data();
    const T* dp = d_pre.v.data();
    const T* wp = layer.w.v.data();

    for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
            const T* row = dp + (static_cast<std::size_t>(oy) * OW + ox) * Co;
            for (int co = 0; co < Co; ++co) g.d_b.v[co] += row[co];
        }

    // One weight row (ky, kx, ci, :) per iteration; each entry accumulates
    // over output pixels in a fixed order, so the result is thread-count
    // independent.
    T* dw = g.d_w.v.data();
    const int n_rows = K * K * Ci;
#pragma omp parallel for schedule(static) if (n_rows >= 16)
    for (int r = 0; r < n_rows; ++r) {
        const int ky = r / (K * Ci);
        const int kx = (r / Ci) % K;
        const int ci = r % Ci;
        T* dw_vec = dw + static_cast<std::size_t>(r) * Co;
        for (int oy = 0; oy < OH; ++oy) {
            const int iy = oy * S + ky;
            for (int ox = 0; ox < OW; ++ox) {
                const T s = in[(static_cast<std::size_t>(iy) * W + ox * S + kx) * Ci + ci];
                const T* row = dp + (static_cast<std::size_t>(oy) * OW + ox) * Co;
#pragma omp simd
                for (int co = 0; co < Co; ++co) dw_vec[co] += s * row[co];
            }
        }
    }

    // Gather form: each input pixel sums the weights of every output pixel
    // whose receptive field covers it.
    T* din = g.d_input.v.data();
#pragma omp parallel for schedule(static) if (H >= 8)
    for (int y = 0; y < H; ++y) {
        for (int ky = 0; ky < K; ++ky) {
            const int ty = y - ky;
            if (ty < 0 || ty % S != 0) continue;
            const int oy = ty / S;
            if (oy >= OH) continue;
            for (int x = 0; x < W; ++x) {
                for (int kx = 0; kx < K; ++kx) {
                    const int tx = x - kx;
                    if (tx < 0 || tx % S != 0) continue;
                    const int ox = tx / S;
                    if (ox >= OW) continue;
                    const T* row = dp + (static_cast<std::size_t>(oy) * OW + ox) * Co;
                    const T* w_base = wp + (static_cast<std::size_t>(ky) * K + kx) * Ci * Co;
                    T* din_px = din + (static_cast<std::size_t>(y) * W + x) * Ci;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const T* w_vec = w_base + static_cast<std::size_t>(ci) * Co;
                        T acc = T(0);
#pragma omp simd reduction(+ : acc)
                        for (int co = 0; co < Co; ++co) acc += w_vec[co] * row[co];
                        din_px[ci] += acc;
                    }
                }
            }
        }
    }
    return g;
}

template <class T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& input, DenseCache<T>* cache) {
    if (static_cast<int>(input.v.size()) != layer.spec.in_dim)
        throw ArgumentError("dense_forward: input has " + std::to_string(input.v.size()) +
                            " values, layer expects " + std::to_string(layer.spec.in_dim));
    const int In = layer.spec.in_dim, Out = layer.spec.out_dim;
    Tensor<T> pre({Out});
    const T* x = input.v.data();
    const T* wp = layer.w.v.data();
    T* y = pre.v.data();
    for (int o = 0; o < Out; ++o) y[o] = layer.b.v[o];
    for (int i = 0; i < In; ++i) {
        const T xi = x[i];
        const T* w_row = wp + static_cast<std::size_t>(i) * Out;
#pragma omp simd
        for (int o = 0; o < Out; ++o) y[o] += xi * w_row[o];
    }

    Tensor<T> activated = pre;
    for (T& v : activated.v) v = activate(v, layer.spec.act);
    if (cache) {
        cache->input = input;
        cache->pre = std::move(pre);
        cache->valid = true;
    }
    return activated;
}

template <class T>
DenseGrads<T> dense_backward(const DenseLayer<T>& layer, const DenseCache<T>& cache,
                             const Tensor<T>& d_out) {
    if (!cache.valid) throw StateError("dense_backward: forward cache missing");
    check_same_shape(d_out, cache.pre, "dense_backward");
    const int In = layer.spec.in_dim, Out = layer.spec.out_dim;

    Tensor<T> d_pre = d_out;
    for (int o = 0; o < Out; ++o)
        d_pre.v[o] *= activation_slope(cache.pre.v[o], layer.spec.act);

    DenseGrads<T> g;
    g.d_w = Tensor<T>({In, Out});
    g.d_b = d_pre;
    g.d_input = Tensor<T>({In});

    const T* x = cache.input.v.data();
    const T* dp = d_pre.v.data();
    const T* wp = layer.w.v.data();
#pragma omp parallel for schedule(static) if (In >= 256)
    for (int i = 0; i < In; ++i) {
        const T xi = x[i];
        const T* w_row = wp + static_cast<std::size_t>(i) * Out;
        T* dw_row = g.d_w.v.data() + static_cast<std::size_t>(i) * Out;
        T acc = T(0);
#pragma omp simd reduction(+ : acc)
        for (int o = 0; o < Out; ++o) {
            dw_row[o] = xi * dp[o];
            acc += w_row[o] * dp[o];
        }
        g.d_input.v[i] = acc;
    }
    return g;
}

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size())
        throw ArgumentError("adam_step: parameter/gradient/state sizes disagree");
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
#pragma omp parallel for schedule(static) if (params.size() >= 4096)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(params.size()); ++i) {
        const double g = static_cast<double>(grads[i]);
        const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
        const double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
        state.m[i] = static_cast<T>(m);
        state.v[i] = static_cast<T>(v);
        const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
        params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
    }
}

namespace serial {

template <class T>
Tensor<T> conv2d_forward(const ConvLayer<T>& layer, const Tensor<T>& input, ConvCache<T>* cache) {
    check_conv_input(layer, input);
    const int H = input.shape[0], W = input.shape[1];
    const int K = layer.spec.kernel, S = layer.spec.stride;
    const int Ci = layer.spec.in_channels, Co = layer.spec.out_channels;
    const int OH = conv_out_size(H, K, S), OW = conv_out_size(W, K, S);

    Tensor<T> pre({OH, OW, Co});
    for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox)
            for (int co = 0; co < Co; ++co) {
                T acc = layer.b.v[co];
                for (int ky = 0; ky < K; ++ky)
                    for (int kx = 0; kx < K; ++kx)
                        for (int ci = 0; ci < Ci; ++ci)
                            acc += input.at(oy * S + ky, ox * S + kx, ci) *
                                   layer.w.v[((static_cast<std::size_t>(ky) * K + kx) * Ci + ci) * Co + co];
                pre.at(oy, ox, co) = acc;
            }

    Tensor<T> activated = pre;
    for (T& v : activated.v) v = activate(v, Activation::ReLU);
    if (cache) {
        cache->input = input;
        cache->pre = std::move(pre);
        cache->valid = true;
    }
    return activated;
}

template <class T>
ConvGrads<T> conv2d_backward(const ConvLayer<T>& layer, const ConvCache<T>& cache,
                             const Tensor<T>& d_out) {
    if (!cache.valid) throw StateError("conv2d_backward: forward cache missing");
    check_same_shape(d_out, cache.pre, "conv2d_backward");
    const Tensor<T>& input = cache.input;
    const int H = input.shape[0], W = input.shape[1];
    const int K = layer.spec.kernel, S = layer.spec.stride;
    const int Ci = layer.spec.in_channels, Co = layer.spec.out_channels;
    const int OH = cache.pre.shape[0], OW = cache.pre.shape[1];

    Tensor<T> d_pre = d_out;
    for (std::size_t k = 0; k < d_pre.v.size(); ++k)
        d_pre.v[k] *= activation_slope(cache.pre.v[k], Activation::ReLU);

    ConvGrads<T> g;
    g.d_w = Tensor<T>({K, K, Ci, Co});
    g.d_b = Tensor<T>({Co});
    g.d_input = Tensor<T>({H, W, Ci});

    for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox)
            for (int co = 0; co < Co; ++co) {
                const T gv = d_pre.at(oy, ox, co);
                g.d_b.v[co] += gv;
                for (int ky = 0; ky < K; ++ky)
                    for (int kx = 0; kx < K; ++kx)
                        for (int ci = 0; ci < Ci; ++ci) {
                            const std::size_t widx =
                                ((static_cast<std::size_t>(ky) * K + kx) * Ci + ci) * Co + co;
                            g.d_w.v[widx] += input.at(oy * S + ky, ox * S + kx, ci) * gv;
                            g.d_input.at(oy * S + ky, ox * S + kx, ci) += layer.w.v[widx] * gv;
                        }
            }
    return g;
}

template <class T>
Tensor<T> dense_forward(const DenseLayer<T>& layer, const Tensor<T>& input, DenseCache<T>* cache) {
    if (static_cast<int>(input.v.size()) != layer.spec.in_dim)
        throw ArgumentError("dense_forward: input size mismatch");
    const int In = layer.spec.in_dim, Out = layer.spec.out_dim;
    Tensor<T> pre({Out});
    for (int o = 0; o < Out; ++o) {
        T acc = layer.b.v[o];
        for (int i = 0; i < In; ++i) acc += input.v[i] * layer.w.v[static_cast<std::size_t>(i) * Out + o];
        pre.v[o] = acc;
    }
    Tensor<T> activated = pre;
    for (T& v : activated.v) v = activate(v, layer.spec.act);
    if (cache) {
        cache->input = input;
        cache->pre = std::move(pre);
        cache->valid = true;
    }
    return activated;
}

template <class T>
DenseGrads<T> dense_backward(const DenseLayer<T>& layer, const DenseCache<T>& cache,
                             const Tensor<T>& d_out) {
    if (!cache.valid) throw StateError("dense_backward: forward cache missing");
    check_same_shape(d_out, cache.pre, "dense_backward");
    const int In = layer.spec.in_dim, Out = layer.spec.out_dim;

    Tensor<T> d_pre = d_out;
    for (int o = 0; o < Out; ++o)
        d_pre.v[o] *= activation_slope(cache.pre.v[o], layer.spec.act);

    DenseGrads<T> g;
    g.d_w = Tensor<T>({In, Out});
    g.d_b = d_pre;
    g.d_input = Tensor<T>({In});
    for (int i = 0; i < In; ++i) {
        T acc = T(0);
        for (int o = 0; o < Out; ++o) {
            g.d_w.v[static_cast<std::size_t>(i) * Out + o] = cache.input.v[i] * d_pre.v[o];
            acc += layer.w.v[static_cast<std::size_t>(i) * Out + o] * d_pre.v[o];
        }
        g.d_input.v[i] = acc;
    }
    return g;
}

} // namespace serial

#define HQRL_INSTANTIATE(T)                                                                        \
    template ConvLayer<T> make_conv<T>(const ConvSpec&);                                           \
    template DenseLayer<T> make_dense<T>(const DenseSpec&);                                        \
    template void init_conv<T>(ConvLayer<T>&, Rng&);                                               \
    template void init_dense<T>(DenseLayer<T>&, Rng&);                                             \
    template Tensor<T> conv2d_forward<T>(const ConvLayer<T>&, const Tensor<T>&, ConvCache<T>*);    \
    template ConvGrads<T> conv2d_backward<T>(const ConvLayer<T>&, const ConvCache<T>&,             \
                                             const Tensor<T>&);                                    \
    template Tensor<T> dense_forward<T>(const DenseLayer<T>&, const Tensor<T>&, DenseCache<T>*);   \
    template DenseGrads<T> dense_backward<T>(const DenseLayer<T>&, const DenseCache<T>&,           \
                                             const Tensor<T>&);                                    \
    template void adam_step<T>(std::span<T>, std::span<const T>, AdamState<T>&, double);           \
    namespace serial {                                                                             \
    template Tensor<T> conv2d_forward<T>(const ConvLayer<T>&, const Tensor<T>&, ConvCache<T>*);    \
    template ConvGrads<T> conv2d_backward<T>(const ConvLayer<T>&, const ConvCache<T>&,             \
                                             const Tensor<T>&);                                    \
    template Tensor<T> dense_forward<T>(const DenseLayer<T>&, const Tensor<T>&, DenseCache<T>*);   \
    template DenseGrads<T> dense_backward<T>(const DenseLayer<T>&, const DenseCache<T>&,           \
                                             const Tensor<T>&);                                    \
    }

HQRL_INSTANTIATE(float)
HQRL_INSTANTIATE(double)

#undef HQRL_INSTANTIATE

} // namespace hqrl::nn
