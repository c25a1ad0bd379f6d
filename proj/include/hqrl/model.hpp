#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hqrl/nn.hpp"
#include "hqrl/pqc.hpp"

namespace hqrl::model {

enum class ModelType { Hybrid, Classical, ClassicalUnconstrained };

std::string to_string(ModelType type);
ModelType model_type_from_string(const std::string& name);

struct ConvStackSpec {
    int input_h = 84;
    int input_w = 84;
    int input_c = 4;
    std::vector<nn::ConvSpec> layers;

    void validate() const;
    int out_h() const;
    int out_w() const;
    int out_c() const;
    int flat_dim() const; // out_h * out_w * out_c
    friend bool operator==(const ConvStackSpec&, const ConvStackSpec&) = default;
};

/// The three-layer stack: 32@8x8s4, 64@4x4s2, 64@3x3s1 over 84x84x4,
/// flattening to 3136 features.
ConvStackSpec paper_conv_stack();

/// Single 3x3-stride-2 layer over 8x8x1 (flat dim 36); small enough for
/// full finite-difference sweeps.
ConvStackSpec tiny_conv_stack();

struct HybridSpec {
    ConvStackSpec conv = paper_conv_stack();
    int n_qubits = 4;
    int n_layers = 4;
    int n_actions = 3;
    nn::Activation preproc_act = nn::Activation::Linear; // Linear or TanhPi

    int latent_dim() const { return n_qubits * n_layers; }
    pqc::PqcArchitecture arch() const { return {n_qubits, n_layers}; }
    void validate() const;
    friend bool operator==(const HybridSpec&, const HybridSpec&) = default;
};

struct ClassicalSpec {
    ConvStackSpec conv = paper_conv_stack();
    bool bottleneck = true; // false = unconstrained variant
    int latent_dim = 16;    // bottleneck width; must match the hybrid latent in comparison mode
    int hidden_dim = 512;
    int n_actions = 3;

    void validate() const;
    friend bool operator==(const ClassicalSpec&, const ClassicalSpec&) = default;
};

/// One named parameter tensor of a network. Gradients and Adam state are
/// kept in parallel arrays following the same fixed order.
template <class T>
struct ParamView {
    std::string group;
    std::string name;
    std::vector<T>* values;
};

template <class T>
struct ParamConstView {
    std::string group;
    std::string name;
    const std::vector<T>* values;
};

/// Flat per-tensor gradient buffers aligned with params() order.
template <class T>
using GradVec = std::vector<std::vector<T>>;

template <class T>
class HybridQNet {
public:
    HybridQNet(const HybridSpec& spec, Rng& rng); // seeded weight init
    explicit HybridQNet(const HybridSpec& spec);  // zero weights

    const HybridSpec& spec() const { return spec_; }
    int n_actions() const { return spec_.n_actions; }
    long long n_params() const;
    long long group_param_count(const std::string& group) const;

    struct Cache {
        std::vector<nn::ConvCache<T>> conv;
        nn::DenseCache<T> preproc;
        std::vector<double> enc; // latent features entering the PQC
        std::vector<double> z;   // PQC outputs
        nn::DenseCache<T> postproc;
        bool valid = false;
    };

    std::vector<T> q_forward(const Tensor<T>& obs, Cache* cache = nullptr) const;

    /// Accumulates parameter gradients (params() order) for the given
    /// upstream dL/dQ; d_x from the PQC chains into the preproc backward.
    void q_backward(const Cache& cache, std::span<const T> upstream, GradVec<T>& accum) const;

    /// Truncated head: forward from the flattened conv features.
    std::vector<T> head_forward(const Tensor<T>& flat_features) const;
    /// PQC-and-postproc segment over encoding features directly; one-angle
    /// slices of this map are exact sinusoids.
    std::vector<T> latent_head_forward(std::span<const double> enc) const;

    std::vector<ParamView<T>> params();
    std::vector<ParamConstView<T>> params() const;
    GradVec<T> zero_grads() const;

    std::vector<std::string> group_names() const { return {"conv", "preproc", "pqc", "postproc"}; }

private:
    HybridSpec spec_;
    pqc::PqcArchitecture arch_;
    std::vector<nn::ConvLayer<T>> conv_;
    nn::DenseLayer<T> preproc_;
    Tensor<T> theta_;
    nn::DenseLayer<T> postproc_;

    pqc::PqcParameters theta_as_double() const;
};

template <class T>
class ClassicalQNet {
public:
    ClassicalQNet(const ClassicalSpec& spec, Rng& rng);
    explicit ClassicalQNet(const ClassicalSpec& spec);

    const ClassicalSpec& spec() const { return spec_; }
    int n_actions() const { return spec_.n_actions; }
    long long n_params() const;
    long long group_param_count(const std::string& group) const;

    struct Cache {
        std::vector<nn::ConvCache<T>> conv;
        nn::DenseCache<T> bottleneck;
        nn::DenseCache<T> hidden;
        nn::DenseCache<T> out;
        bool valid = false;
    };

    std::vector<T> q_forward(const Tensor<T>& obs, Cache* cache = nullptr) const;
    void q_backward(const Cache& cache, std::span<const T> upstream, GradVec<T>& accum) const;

    std::vector<T> head_forward(const Tensor<T>& flat_features) const;

    std::vector<ParamView<T>> params();
    std::vector<ParamConstView<T>> params() const;
    GradVec<T> zero_grads() const;

    std::vector<std::string> group_names() const;

private:
    ClassicalSpec spec_;
    std::vector<nn::ConvLayer<T>> conv_;
    std::optional<nn::DenseLayer<T>> bottleneck_;
    nn::DenseLayer<T> hidden_;
    nn::DenseLayer<T> out_;
};

/// Target-network maintenance. clone is plain value copy; sync copies every
/// parameter bit-exactly and rejects architecture mismatches.
template <class Net>
Net clone_target(const Net& online) {
    return online;
}

template <class Net>
void sync_target(Net& target, const Net& online);

/// Checkpoint file: one-line magic, JSON header (model type, spec,
/// arithmetic mode, tensor directory), then little-endian float64 payloads
/// in header order. Round trips are bit-exact.
inline constexpr const char* kCheckpointMagic = "hqrl-checkpoint-v1";

template <class T>
void save_checkpoint(const HybridQNet<T>& net, const std::string& path);
template <class T>
void save_checkpoint(const ClassicalQNet<T>& net, const std::string& path);

/// Loads a checkpoint, reconstructing the network from the header. When
/// `expected` is given, any architecture difference is an error.
template <class T>
HybridQNet<T> load_hybrid_checkpoint(const std::string& path, const HybridSpec* expected = nullptr);
template <class T>
ClassicalQNet<T> load_classical_checkpoint(const std::string& path,
                                           const ClassicalSpec* expected = nullptr);

/// Model type recorded in a checkpoint header, for dispatch before loading.
ModelType peek_checkpoint_type(const std::string& path);

} // namespace hqrl::model
