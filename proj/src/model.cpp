#include "hqrl/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as native little-endian doubles");

namespace hqrl::model {

using nlohmann::json;

std::string to_string(ModelType type) {
    switch (type) {
    case ModelType::Hybrid: return "hybrid";
    case ModelType::Classical: return "classical";
    case ModelType::ClassicalUnconstrained: return "classical-unconstrained";
    }
    throw StateError("unknown model type");
}

ModelType model_type_from_string(const std::string& name) {
    if (name == "hybrid") return ModelType::Hybrid;
    if (name == "classical") return ModelType::Classical;
    if (name == "classical-unconstrained") return ModelType::ClassicalUnconstrained;
    throw ConfigError("unknown model type '" + name + "'");
}

void ConvStackSpec::validate() const {
    if (input_h < 1 || input_w < 1 || input_c < 1)
        throw ConfigError("ConvStackSpec: input dimensions must be positive");
    if (layers.empty()) throw ConfigError("ConvStackSpec: at least one layer required");
    int c = input_c;
    int h = input_h, w = input_w;
    for (const nn::ConvSpec& l : layers) {
        l.validate();
        if (l.in_channels != c)
            throw ConfigError("ConvStackSpec: layer expects " + std::to_string(l.in_channels) +
                              " channels, previous stage provides " + std::to_string(c));
        h = nn::conv_out_size(h, l.kernel, l.stride);
        w = nn::conv_out_size(w, l.kernel, l.stride);
        c = l.out_channels;
    }
}

int ConvStackSpec::out_h() const {
    int h = input_h;
    for (const nn::ConvSpec& l : layers) h = nn::conv_out_size(h, l.kernel, l.stride);
    return h;
}

int ConvStackSpec::out_w() const {
    int w = input_w;
    for (const nn::ConvSpec& l : layers) w = nn::conv_out_size(w, l.kernel, l.stride);
    return w;
}

int ConvStackSpec::out_c() const { return layers.back().out_channels; }

int ConvStackSpec::flat_dim() const { return out_h() * out_w() * out_c(); }

ConvStackSpec paper_conv_stack() {
    ConvStackSpec s;
    s.input_h = 84;
    s.input_w = 84;
    s.input_c = 4;
    s.layers = {{4, 32, 8, 4}, {32, 64, 4, 2}, {64, 64, 3, 1}};
    return s;
}

ConvStackSpec tiny_conv_stack() {
    ConvStackSpec s;
    s.input_h = 8;
    s.input_w = 8;
    s.input_c = 1;
    s.layers = {{1, 4, 3, 2}};
    return s;
}

void HybridSpec::validate() const {
    conv.validate();
    arch().validate();
    if (n_actions < 1) throw ConfigError("HybridSpec: n_actions must be positive");
    if (preproc_act != nn::Activation::Linear && preproc_act != nn::Activation::TanhPi)
        throw ConfigError("HybridSpec: preproc activation must be linear or tanh_pi");
}

void ClassicalSpec::validate() const {
    conv.validate();
    if (bottleneck && latent_dim < 1)
        throw ConfigError("ClassicalSpec: bottleneck width must be positive");
    if (hidden_dim < 1) throw ConfigError("ClassicalSpec: hidden_dim must be positive");
    if (n_actions < 1) throw ConfigError("ClassicalSpec: n_actions must be positive");
}

namespace {

template <class T>
std::vector<nn::ConvLayer<T>> build_conv(const ConvStackSpec& spec) {
    std::vector<nn::ConvLayer<T>> layers;
    layers.reserve(spec.layers.size());
    for (const nn::ConvSpec& l : spec.layers) layers.push_back(nn::make_conv<T>(l));
    return layers;
}

template <class T>
Tensor<T> run_conv(const std::vector<nn::ConvLayer<T>>& layers, const Tensor<T>& obs,
                   std::vector<nn::ConvCache<T>>* caches) {
    Tensor<T> h = obs;
    for (std::size_t i = 0; i < layers.size(); ++i)
        h = nn::conv2d_forward(layers[i], h, caches ? &(*caches)[i] : nullptr);
    return h;
}

template <class T>
Tensor<T> flatten(Tensor<T>&& t) {
    Tensor<T> flat({static_cast<int>(t.v.size())});
    flat.v = std::move(t.v);
    return flat;
}

template <class T>
void check_obs_shape(const ConvStackSpec& spec, const Tensor<T>& obs) {
    const std::vector<int> want{spec.input_h, spec.input_w, spec.input_c};
    if (obs.shape != want)
        throw ArgumentError("q_forward: observation shape mismatch (expected " +
                            std::to_string(spec.input_h) + "x" + std::to_string(spec.input_w) +
                            "x" + std::to_string(spec.input_c) + ")");
}

template <class T>
void check_finite(const std::vector<T>& q) {
    for (T v : q)
        if (!std::isfinite(static_cast<double>(v))) throw NumericalError("q_forward: non-finite output");
}

template <class T>
void accumulate(std::vector<T>& into, const std::vector<T>& add) {
    if (into.size() != add.size()) throw ArgumentError("gradient accumulator size mismatch");
    for (std::size_t k = 0; k < into.size(); ++k) into[k] += add[k];
}

json conv_stack_to_json(const ConvStackSpec& s) {
    json layers = json::array();
    for (const nn::ConvSpec& l : s.layers)
        layers.push_back({{"in", l.in_channels}, {"out", l.out_channels}, {"kernel", l.kernel},
                          {"stride", l.stride}});
    return {{"input_h", s.input_h}, {"input_w", s.input_w}, {"input_c", s.input_c},
            {"layers", layers}};
}

ConvStackSpec conv_stack_from_json(const json& j) {
    ConvStackSpec s;
    s.input_h = j.at("input_h").get<int>();
    s.input_w = j.at("input_w").get<int>();
    s.input_c = j.at("input_c").get<int>();
    for (const json& l : j.at("layers"))
        s.layers.push_back({l.at("in").get<int>(), l.at("out").get<int>(),
                            l.at("kernel").get<int>(), l.at("stride").get<int>()});
    return s;
}

json hybrid_spec_to_json(const HybridSpec& s) {
    return {{"conv", conv_stack_to_json(s.conv)},           {"n_qubits", s.n_qubits},
            {"n_layers", s.n_layers},                       {"n_actions", s.n_actions},
            {"preproc_act", nn::to_string(s.preproc_act)}};
}

HybridSpec hybrid_spec_from_json(const json& j) {
    HybridSpec s;
    s.conv = conv_stack_from_json(j.at("conv"));
    s.n_qubits = j.at("n_qubits").get<int>();
    s.n_layers = j.at("n_layers").get<int>();
    s.n_actions = j.at("n_actions").get<int>();
    s.preproc_act = nn::activation_from_string(j.at("preproc_act").get<std::string>());
    return s;
}

json classical_spec_to_json(const ClassicalSpec& s) {
    return {{"conv", conv_stack_to_json(s.conv)}, {"bottleneck", s.bottleneck},
            {"latent_dim", s.latent_dim},         {"hidden_dim", s.hidden_dim},
            {"n_actions", s.n_actions}};
}

ClassicalSpec classical_spec_from_json(const json& j) {
    ClassicalSpec s;
    s.conv = conv_stack_from_json(j.at("conv"));
    s.bottleneck = j.at("bottleneck").get<bool>();
    s.latent_dim = j.at("latent_dim").get<int>();
    s.hidden_dim = j.at("hidden_dim").get<int>();
    s.n_actions = j.at("n_actions").get<int>();
    return s;
}

template <class T>
const char* arithmetic_name() {
    if constexpr (std::is_same_v<T, float>) return "f32";
    else return "f64";
}

} // namespace

template <class T>
HybridQNet<T>::HybridQNet(const HybridSpec& spec) : spec_(spec), arch_(spec.arch()) {
    spec_.validate();
    conv_ = build_conv<T>(spec_.conv);
    preproc_ = nn::make_dense<T>({spec_.conv.flat_dim(), spec_.latent_dim(), spec_.preproc_act});
    theta_ = Tensor<T>({arch_.n_params()});
    postproc_ = nn::make_dense<T>({spec_.n_qubits, spec_.n_actions, nn::Activation::Linear});
}

template <class T>
HybridQNet<T>::HybridQNet(const HybridSpec& spec, Rng& rng) : HybridQNet(spec) {
    for (auto& layer : conv_) nn::init_conv(layer, rng);
    nn::init_dense(preproc_, rng);
    pqc::PqcParameters p = pqc::init_params(arch_, rng);
    for (std::size_t k = 0; k < p.theta.size(); ++k) theta_.v[k] = static_cast<T>(p.theta[k]);
    nn::init_dense(postproc_, rng);
}

template <class T>
pqc::PqcParameters HybridQNet<T>::theta_as_double() const {
    pqc::PqcParameters p;
    p.theta.assign(theta_.v.begin(), theta_.v.end());
    return p;
}

template <class T>
long long HybridQNet<T>::n_params() const {
    long long total = 0;
    for (const auto& view : params()) total += static_cast<long long>(view.values->size());
    return total;
}

template <class T>
long long HybridQNet<T>::group_param_count(const std::string& group) const {
    long long total = 0;
    for (const auto& view : params())
        if (view.group == group) total += static_cast<long long>(view.values->size());
    return total;
}

template <class T>
std::vector<T> HybridQNet<T>::q_forward(const Tensor<T>& obs, Cache* cache) const {
    check_obs_shape(spec_.conv, obs);
    if (cache) {
        cache->conv.assign(conv_.size(), nn::ConvCache<T>{});
        cache->valid = false;
    }
    Tensor<T> flat = flatten(run_conv(conv_, obs, cache ? &cache->conv : nullptr));
    Tensor<T> lat = nn::dense_forward(preproc_, flat, cache ? &cache->preproc : nullptr);

    std::vector<double> enc(lat.v.begin(), lat.v.end());
    std::vector<double> z = pqc::pqc_forward(arch_, theta_as_double(), enc);

    Tensor<T> zt({spec_.n_qubits});
    for (int q = 0; q < spec_.n_qubits; ++q) zt.v[q] = static_cast<T>(z[q]);
    Tensor<T> out = nn::dense_forward(postproc_, zt, cache ? &cache->postproc : nullptr);
    check_finite(out.v);
    if (cache) {
        cache->enc = std::move(enc);
        cache->z = std::move(z);
        cache->valid = true;
    }
    return out.v;
}

template <class T>
std::vector<T> HybridQNet<T>::head_forward(const Tensor<T>& flat_features) const {
    if (static_cast<int>(flat_features.v.size()) != spec_.conv.flat_dim())
        throw ArgumentError("head_forward: expected " + std::to_string(spec_.conv.flat_dim()) +
                            " features");
    Tensor<T> lat = nn::dense_forward(preproc_, flat_features);
    std::vector<double> enc(lat.v.begin(), lat.v.end());
    return latent_head_forward(enc);
}

template <class T>
std::vector<T> HybridQNet<T>::latent_head_forward(std::span<const double> enc) const {
    std::vector<double> z = pqc::pqc_forward(arch_, theta_as_double(), enc);
    Tensor<T> zt({spec_.n_qubits});
    for (int q = 0; q < spec_.n_qubits; ++q) zt.v[q] = static_cast<T>(z[q]);
    Tensor<T> out = nn::dense_forward(postproc_, zt);
    check_finite(out.v);
    return out.v;
}

template <class T>
void HybridQNet<T>::q_backward(const Cache& cache, std::span<const T> upstream,
                               GradVec<T>& accum) const {
    if (!cache.valid) throw StateError("q_backward: forward cache missing");
    if (static_cast<int>(upstream.size()) != spec_.n_actions)
        throw ArgumentError("q_backward: upstream length must equal n_actions");
    if (accum.size() != 2 * conv_.size() + 5)
        throw ArgumentError("q_backward: gradient accumulator layout mismatch");

    Tensor<T> up({spec_.n_actions});
    up.v.assign(upstream.begin(), upstream.end());
    nn::DenseGrads<T> g_post = nn::dense_backward(postproc_, cache.postproc, up);

    pqc::PqcGradient jac = pqc::pqc_grad_adjoint(arch_, theta_as_double(), cache.enc);
    const int P = arch_.n_params(), E = arch_.n_encoding(), n = arch_.n_qubits;
    std::vector<T> d_theta(static_cast<std::size_t>(P));
    for (int k = 0; k < P; ++k) {
        double acc = 0.0;
        for (int o = 0; o < n; ++o)
            acc += static_cast<double>(g_post.d_input.v[o]) * jac.d_theta.at(o, k);
        d_theta[static_cast<std::size_t>(k)] = static_cast<T>(acc);
    }
    Tensor<T> d_lat({E});
    for (int j = 0; j < E; ++j) {
        double acc = 0.0;
        for (int o = 0; o < n; ++o)
            acc += static_cast<double>(g_post.d_input.v[o]) * jac.d_x.at(o, j);
        d_lat.v[static_cast<std::size_t>(j)] = static_cast<T>(acc);
    }

    nn::DenseGrads<T> g_pre = nn::dense_backward(preproc_, cache.preproc, d_lat);

    Tensor<T> d_cur({spec_.conv.out_h(), spec_.conv.out_w(), spec_.conv.out_c()});
    d_cur.v = std::move(g_pre.d_input.v);

    std::vector<nn::ConvGrads<T>> conv_grads(conv_.size());
    for (std::size_t i = conv_.size(); i-- > 0;) {
        conv_grads[i] = nn::conv2d_backward(conv_[i], cache.conv[i], d_cur);
        d_cur = std::move(conv_grads[i].d_input);
    }

    std::size_t idx = 0;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        accumulate(accum[idx++], conv_grads[i].d_w.v);
        accumulate(accum[idx++], conv_grads[i].d_b.v);
    }
    accumulate(accum[idx++], g_pre.d_w.v);
    accumulate(accum[idx++], g_pre.d_b.v);
    accumulate(accum[idx++], d_theta);
    accumulate(accum[idx++], g_post.d_w.v);
    accumulate(accum[idx++], g_post.d_b.v);
}

template <class T>
std::vector<ParamView<T>> HybridQNet<T>::params() {
    std::vector<ParamView<T>> views;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        views.push_back({"conv", "conv" + std::to_string(i) + ".w", &conv_[i].w.v});
        views.push_back({"conv", "conv" + std::to_string(i) + ".b", &conv_[i].b.v});
    }
    views.push_back({"preproc", "preproc.w", &preproc_.w.v});
    views.push_back({"preproc", "preproc.b", &preproc_.b.v});
    views.push_back({"pqc", "pqc.theta", &theta_.v});
    views.push_back({"postproc", "postproc.w", &postproc_.w.v});
    views.push_back({"postproc", "postproc.b", &postproc_.b.v});
    return views;
}

template <class T>
std::vector<ParamConstView<T>> HybridQNet<T>::params() const {
    std::vector<ParamConstView<T>> views;
    auto& self = const_cast<HybridQNet<T>&>(*this);
    for (const ParamView<T>& view : self.params())
        views.push_back({view.group, view.name, view.values});
    return views;
}

template <class T>
GradVec<T> HybridQNet<T>::zero_grads() const {
    GradVec<T> g;
    for (const auto& view : params()) g.emplace_back(view.values->size(), T(0));
    return g;
}

template <class T>
ClassicalQNet<T>::ClassicalQNet(const ClassicalSpec& spec) : spec_(spec) {
    spec_.validate();
    conv_ = build_conv<T>(spec_.conv);
    const int flat = spec_.conv.flat_dim();
    if (spec_.bottleneck) {
        bottleneck_ = nn::make_dense<T>({flat, spec_.latent_dim, nn::Activation::Linear});
        hidden_ = nn::make_dense<T>({spec_.latent_dim, spec_.hidden_dim, nn::Activation::ReLU});
    } else {
        hidden_ = nn::make_dense<T>({flat, spec_.hidden_dim, nn::Activation::ReLU});
    }
    out_ = nn::make_dense<T>({spec_.hidden_dim, spec_.n_actions, nn::Activation::Linear});
}

template <class T>
ClassicalQNet<T>::ClassicalQNet(const ClassicalSpec& spec, Rng& rng) : ClassicalQNet(spec) {
    for (auto& layer : conv_) nn::init_conv(layer, rng);
    if (bottleneck_) nn::init_dense(*bottleneck_, rng);
    nn::init_dense(hidden_, rng);
    nn::init_dense(out_, rng);
}

template <class T>
long long ClassicalQNet<T>::n_params() const {
    long long total = 0;
    for (const auto& view : params()) total += static_cast<long long>(view.values->size());
    return total;
}

template <class T>
long long ClassicalQNet<T>::group_param_count(const std::string& group) const {
    long long total = 0;
    for (const auto& view : params())
        if (view.group == group) total += static_cast<long long>(view.values->size());
    return total;
}

template <class T>
std::vector<std::string> ClassicalQNet<T>::group_names() const {
    if (spec_.bottleneck) return {"conv", "bottleneck", "hidden", "out"};
    return {"conv", "hidden", "out"};
}

template <class T>
std::vector<T> ClassicalQNet<T>::q_forward(const Tensor<T>& obs, Cache* cache) const {
    check_obs_shape(spec_.conv, obs);
    if (cache) {
        cache->conv.assign(conv_.size(), nn::ConvCache<T>{});
        cache->valid = false;
    }
    Tensor<T> h = flatten(run_conv(conv_, obs, cache ? &cache->conv : nullptr));
    if (bottleneck_) h = nn::dense_forward(*bottleneck_, h, cache ? &cache->bottleneck : nullptr);
    h = nn::dense_forward(hidden_, h, cache ? &cache->hidden : nullptr);
    Tensor<T> out = nn::dense_forward(out_, h, cache ? &cache->out : nullptr);
    check_finite(out.v);
    if (cache) cache->valid = true;
    return out.v;
}

template <class T>
std::vector<T> ClassicalQNet<T>::head_forward(const Tensor<T>& flat_features) const {
    if (static_cast<int>(flat_features.v.size()) != spec_.conv.flat_dim())
        throw ArgumentError("head_forward: expected " + std::to_string(spec_.conv.flat_dim()) +
                            " features");
    Tensor<T> h = flat_features;
    if (bottleneck_) h = nn::dense_forward(*bottleneck_, h);
    h = nn::dense_forward(hidden_, h);
    Tensor<T> out = nn::dense_forward(out_, h);
    check_finite(out.v);
    return out.v;
}

template <class T>
void ClassicalQNet<T>::q_backward(const Cache& cache, std::span<const T> upstream,
                                  GradVec<T>& accum) const {
    if (!cache.valid) throw StateError("q_backward: forward cache missing");
    if (static_cast<int>(upstream.size()) != spec_.n_actions)
        throw ArgumentError("q_backward: upstream length must equal n_actions");
    const std::size_t dense_slots = bottleneck_ ? 6 : 4;
    if (accum.size() != 2 * conv_.size() + dense_slots)
        throw ArgumentError("q_backward: gradient accumulator layout mismatch");

    Tensor<T> up({spec_.n_actions});
    up.v.assign(upstream.begin(), upstream.end());
    nn::DenseGrads<T> g_out = nn::dense_backward(out_, cache.out, up);
    nn::DenseGrads<T> g_hidden = nn::dense_backward(hidden_, cache.hidden, g_out.d_input);
    nn::DenseGrads<T> g_bottleneck;
    Tensor<T>* d_flat = &g_hidden.d_input;
    if (bottleneck_) {
        g_bottleneck = nn::dense_backward(*bottleneck_, cache.bottleneck, g_hidden.d_input);
        d_flat = &g_bottleneck.d_input;
    }

    Tensor<T> d_cur({spec_.conv.out_h(), spec_.conv.out_w(), spec_.conv.out_c()});
    d_cur.v = std::move(d_flat->v);

    std::vector<nn::ConvGrads<T>> conv_grads(conv_.size());
    for (std::size_t i = conv_.size(); i-- > 0;) {
        conv_grads[i] = nn::conv2d_backward(conv_[i], cache.conv[i], d_cur);
        d_cur = std::move(conv_grads[i].d_input);
    }

    std::size_t idx = 0;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        accumulate(accum[idx++], conv_grads[i].d_w.v);
        accumulate(accum[idx++], conv_grads[i].d_b.v);
    }
    if (bottleneck_) {
        accumulate(accum[idx++], g_bottleneck.d_w.v);
        accumulate(accum[idx++], g_bottleneck.d_b.v);
    }
    accumulate(accum[idx++], g_hidden.d_w.v);
    accumulate(accum[idx++], g_hidden.d_b.v);
    accumulate(accum[idx++], g_out.d_w.v);
    accumulate(accum[idx++], g_out.d_b.v);
}

template <class T>
std::vector<ParamView<T>> ClassicalQNet<T>::params() {
    std::vector<ParamView<T>> views;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        views.push_back({"conv", "conv" + std::to_string(i) + ".w", &conv_[i].w.v});
        views.push_back({"conv", "conv" + std::to_string(i) + ".b", &conv_[i].b.v});
    }
    if (bottleneck_) {
        views.push_back({"bottleneck", "bottleneck.w", &bottleneck_->w.v});
        views.push_back({"bottleneck", "bottleneck.b", &bottleneck_->b.v});
    }
    views.push_back({"hidden", "hidden.w", &hidden_.w.v});
    views.push_back({"hidden", "hidden.b", &hidden_.b.v});
    views.push_back({"out", "out.w", &out_.w.v});
    views.push_back({"out", "out.b", &out_.b.v});
    return views;
}

template <class T>
std::vector<ParamConstView<T>> ClassicalQNet<T>::params() const {
    std::vector<ParamConstView<T>> views;
    auto& self = const_cast<ClassicalQNet<T>&>(*this);
    for (const ParamView<T>& view : self.params())
        views.push_back({view.group, view.name, view.values});
    return views;
}

template <class T>
GradVec<T> ClassicalQNet<T>::zero_grads() const {
    GradVec<T> g;
    for (const auto& view : params()) g.emplace_back(view.values->size(), T(0));
    return g;
}

template <class Net>
void sync_target(Net& target, const Net& online) {
    auto dst = target.params();
    auto src = online.params();
    if (dst.size() != src.size()) throw ArgumentError("sync_target: architecture mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].name != src[i].name || dst[i].values->size() != src[i].values->size())
            throw ArgumentError("sync_target: architecture mismatch at tensor " + src[i].name);
        *dst[i].values = *src[i].values;
    }
}

namespace {

template <class T, class Net>
void write_checkpoint(const Net& net, const json& spec_json, const std::string& model_name,
                      const json& extra, const std::string& path) {
    json tensors = json::array();
    for (const auto& view : net.params())
        tensors.push_back({{"name", view.name}, {"group", view.group},
                           {"count", view.values->size()}});
    json header = {{"format", kCheckpointMagic},
                   {"model", model_name},
                   {"arithmetic", arithmetic_name<T>()},
                   {"spec", spec_json},
                   {"tensors", tensors}};
    header.update(extra);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << kCheckpointMagic << "\n" << header.dump() << "\n";
    for (const auto& view : net.params()) {
        std::vector<double> buf(view.values->begin(), view.values->end());
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(double)));
    }
    if (!f) throw IoError("write failed for '" + path + "'");
}

json read_checkpoint_header(std::ifstream& f, const std::string& path) {
    std::string magic;
    if (!std::getline(f, magic) || magic != kCheckpointMagic)
        throw IoError("'" + path + "' is not a checkpoint file");
    std::string header_line;
    if (!std::getline(f, header_line)) throw IoError("'" + path + "': truncated header");
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded()) throw IoError("'" + path + "': malformed header");
    return header;
}

template <class T, class Net>
void read_payload(Net& net, const json& header, std::ifstream& f, const std::string& path) {
    const std::string stored = header.at("arithmetic").get<std::string>();
    if (stored != arithmetic_name<T>())
        throw IoError("'" + path + "' stores " + stored + " parameters, requested " +
                      arithmetic_name<T>());
    auto views = net.params();
    const json& tensors = header.at("tensors");
    if (tensors.size() != views.size()) throw IoError("'" + path + "': tensor directory mismatch");
    for (std::size_t i = 0; i < views.size(); ++i) {
        const json& entry = tensors[i];
        if (entry.at("name").get<std::string>() != views[i].name ||
            entry.at("count").get<std::size_t>() != views[i].values->size())
            throw IoError("'" + path + "': tensor directory mismatch at " + views[i].name);
        std::vector<double> buf(views[i].values->size());
        f.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(double)));
        if (!f) throw IoError("'" + path + "': truncated payload");
        for (std::size_t k = 0; k < buf.size(); ++k) (*views[i].values)[k] = static_cast<T>(buf[k]);
    }
}

} // namespace

template <class T>
void save_checkpoint(const HybridQNet<T>& net, const std::string& path) {
    json extra = {{"pqc_params", net.spec().arch().n_params()},
                  {"pqc_encoding", net.spec().arch().n_encoding()}};
    write_checkpoint<T>(net, hybrid_spec_to_json(net.spec()), to_string(ModelType::Hybrid), extra,
                        path);
}

template <class T>
void save_checkpoint(const ClassicalQNet<T>& net, const std::string& path) {
    const ModelType type =
        net.spec().bottleneck ? ModelType::Classical : ModelType::ClassicalUnconstrained;
    write_checkpoint<T>(net, classical_spec_to_json(net.spec()), to_string(type), json::object(),
                        path);
}

template <class T>
HybridQNet<T> load_hybrid_checkpoint(const std::string& path, const HybridSpec* expected) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    json header = read_checkpoint_header(f, path);
    if (header.at("model").get<std::string>() != to_string(ModelType::Hybrid))
        throw IoError("'" + path + "' holds a " + header.at("model").get<std::string>() +
                      " model, not a hybrid one");
    HybridSpec spec = hybrid_spec_from_json(header.at("spec"));
    if (expected && !(spec == *expected))
        throw ConfigError("checkpoint architecture differs from the requested hybrid spec");
    HybridQNet<T> net(spec);
    read_payload<T>(net, header, f, path);
    return net;
}

template <class T>
ClassicalQNet<T> load_classical_checkpoint(const std::string& path, const ClassicalSpec* expected) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    json header = read_checkpoint_header(f, path);
    const std::string model = header.at("model").get<std::string>();
    if (model != to_string(ModelType::Classical) &&
        model != to_string(ModelType::ClassicalUnconstrained))
        throw IoError("'" + path + "' holds a " + model + " model, not a classical one");
    ClassicalSpec spec = classical_spec_from_json(header.at("spec"));
    if (expected && !(spec == *expected))
        throw ConfigError("checkpoint architecture differs from the requested classical spec");
    ClassicalQNet<T> net(spec);
    read_payload<T>(net, header, f, path);
    return net;
}

ModelType peek_checkpoint_type(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    json header = read_checkpoint_header(f, path);
    return model_type_from_string(header.at("model").get<std::string>());
}

#define HQRL_INSTANTIATE_MODEL(T)                                                                  \
    template class HybridQNet<T>;                                                                  \
    template class ClassicalQNet<T>;                                                               \
    template void sync_target<HybridQNet<T>>(HybridQNet<T>&, const HybridQNet<T>&);                \
    template void sync_target<ClassicalQNet<T>>(ClassicalQNet<T>&, const ClassicalQNet<T>&);       \
    template void save_checkpoint<T>(const HybridQNet<T>&, const std::string&);                    \
    template void save_checkpoint<T>(const ClassicalQNet<T>&, const std::string&);                 \
    template HybridQNet<T> load_hybrid_checkpoint<T>(const std::string&, const HybridSpec*);       \
    template ClassicalQNet<T> load_classical_checkpoint<T>(const std::string&,                     \
                                                           const ClassicalSpec*);

HQRL_INSTANTIATE_MODEL(float)
HQRL_INSTANTIATE_MODEL(double)

#undef HQRL_INSTANTIATE_MODEL

} // namespace hqrl::model
