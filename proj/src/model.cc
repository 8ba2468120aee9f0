#include "giglite/model.h"

#include <algorithm>
#include <cmath>

#include "giglite/error.h"
#include "giglite/hash.h"

namespace giglite {

using nlohmann::json;

const char* layer_type_name(LayerType t) { return t == LayerType::kSage ? "sage" : "gat"; }

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
        case Activation::kIdentity: return "identity";
    }
    return "?";
}

namespace {

LayerType parse_layer(const std::string& s) {
    if (s == "sage") return LayerType::kSage;
    if (s == "gat") return LayerType::kGat;
    throw ConfigError("unknown layer type '" + s + "'");
}

Activation parse_activation(const std::string& s) {
    for (auto a : {Activation::kRelu, Activation::kTanh, Activation::kIdentity}) {
        if (s == activation_name(a)) return a;
    }
    throw ConfigError("unknown activation '" + s + "'");
}

uint32_t layer_in(const ModelConfig& c, uint32_t l) { return l == 0 ? c.input_dim : c.hidden_dim; }
uint32_t layer_out(const ModelConfig& c, uint32_t l) { return l + 1 == c.depth ? c.output_dim : c.hidden_dim; }
bool is_last(const ModelConfig& c, uint32_t l) { return l + 1 == c.depth; }

// Per-head width: hidden layers split their width across heads, the output layer
// gives every head the full width and averages.
uint32_t head_width(const ModelConfig& c, uint32_t l) {
    return is_last(c, l) ? c.output_dim : c.hidden_dim / c.heads;
}

std::string pname(uint32_t l, const char* what) { return "layer" + std::to_string(l) + "." + what; }

template <typename T>
T activate(Activation a, T x) {
    switch (a) {
        case Activation::kRelu: return x > T(0) ? x : T(0);
        case Activation::kTanh: return std::tanh(x);
        case Activation::kIdentity: return x;
    }
    return x;
}

template <typename T>
T activate_grad(Activation a, T pre) {
    switch (a) {
        case Activation::kRelu: return pre > T(0) ? T(1) : T(0);
        case Activation::kTanh: {
            const T t = std::tanh(pre);
            return T(1) - t * t;
        }
        case Activation::kIdentity: return T(1);
    }
    return T(1);
}

template <typename T>
Mat<T> apply_activation(Activation a, const Mat<T>& pre) {
    Mat<T> out = pre;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out.data()[i] = activate(a, out.data()[i]);
    }
    return out;
}

// Slot layout for attention: node v owns slots [v + in_offsets[v], v + 1 + in_offsets[v+1]),
// the first being its self-loop.
inline size_t slot_begin(const BatchGraph& b, uint32_t v) { return v + b.in_offsets[v]; }

template <typename T>
Mat<T> sage_layer(const ModelConfig& c, const ParamSet<T>& p, uint32_t l, const BatchGraph& b, const Mat<T>& x,
                  LayerCache<T>& cache) {
    const auto n = static_cast<uint32_t>(b.num_nodes());
    Mat<T> mean = Mat<T>::Zero(n, x.cols());
    for (uint32_t v = 0; v < n; ++v) {
        auto in = b.in_neighbors(v);
        if (in.empty()) continue;
        for (uint32_t u : in) mean.row(v) += x.row(u);
        mean.row(v) /= static_cast<T>(in.size());
    }
    Mat<T> pre = x * p[pname(l, "w_self")] + mean * p[pname(l, "w_neigh")];
    pre.rowwise() += p[pname(l, "bias")].row(0);
    cache.input = x;
    cache.neigh_mean = std::move(mean);
    cache.pre = pre;
    return is_last(c, l) ? pre : apply_activation(c.activation, pre);
}

template <typename T>
Mat<T> gat_layer(const ModelConfig& c, const ParamSet<T>& p, uint32_t l, const BatchGraph& b, const Mat<T>& x,
                 LayerCache<T>& cache) {
    const auto n = static_cast<uint32_t>(b.num_nodes());
    const uint32_t heads = c.heads;
    const uint32_t f = head_width(c, l);
    const bool last = is_last(c, l);
    const Mat<T>& a_src = p[pname(l, "att_src")];
    const Mat<T>& a_dst = p[pname(l, "att_dst")];
    Mat<T> proj = x * p[pname(l, "w")];
    Mat<T> s_src(n, heads), s_dst(n, heads);
    for (uint32_t v = 0; v < n; ++v) {
        for (uint32_t k = 0; k < heads; ++k) {
            s_src(v, k) = proj.row(v).segment(k * f, f).dot(a_src.row(k));
            s_dst(v, k) = proj.row(v).segment(k * f, f).dot(a_dst.row(k));
        }
    }
    const size_t slots = n + b.edges.size();
    cache.logits.assign(slots * heads, T(0));
    cache.alpha.assign(slots * heads, T(0));
    Mat<T> out = Mat<T>::Zero(n, layer_out(c, l));
    const T slope = static_cast<T>(c.leaky_slope);
    for (uint32_t v = 0; v < n; ++v) {
        auto in = b.in_neighbors(v);
        const size_t base = slot_begin(b, v);
        const size_t count = in.size() + 1;
        auto source = [&](size_t j) { return j == 0 ? v : in[j - 1]; };
        for (uint32_t k = 0; k < heads; ++k) {
            T peak = -std::numeric_limits<T>::infinity();
            for (size_t j = 0; j < count; ++j) {
                const T e = s_dst(v, k) + s_src(source(j), k);
                cache.logits[(base + j) * heads + k] = e;
                const T act = e > T(0) ? e : slope * e;
                cache.alpha[(base + j) * heads + k] = act;
                peak = std::max(peak, act);
            }
            T total = 0;
            for (size_t j = 0; j < count; ++j) {
                T& a = cache.alpha[(base + j) * heads + k];
                a = std::exp(a - peak);
                total += a;
            }
            for (size_t j = 0; j < count; ++j) {
                T& a = cache.alpha[(base + j) * heads + k];
                a /= total;
                const auto msg = proj.row(source(j)).segment(k * f, f);
                if (last) {
                    out.row(v) += (a / static_cast<T>(heads)) * msg;
                } else {
                    out.row(v).segment(k * f, f) += a * msg;
                }
            }
        }
    }
    out.rowwise() += p[pname(l, "bias")].row(0);
    cache.input = x;
    cache.projected = std::move(proj);
    cache.pre = out;
    return last ? out : apply_activation(c.activation, out);
}

template <typename T>
Mat<T> sage_layer_backward(const ModelConfig& c, const ParamSet<T>& p, uint32_t l, const BatchGraph& b,
                           const LayerCache<T>& cache, const Mat<T>& d_pre, ParamSet<T>& g) {
    (void)c;
    g[pname(l, "w_self")] += cache.input.transpose() * d_pre;
    g[pname(l, "w_neigh")] += cache.neigh_mean.transpose() * d_pre;
    g[pname(l, "bias")] += d_pre.colwise().sum();
    Mat<T> dx = d_pre * p[pname(l, "w_self")].transpose();
    const Mat<T> d_mean = d_pre * p[pname(l, "w_neigh")].transpose();
    const auto n = static_cast<uint32_t>(b.num_nodes());
    for (uint32_t v = 0; v < n; ++v) {
        auto in = b.in_neighbors(v);
        if (in.empty()) continue;
        const T scale = T(1) / static_cast<T>(in.size());
        for (uint32_t u : in) dx.row(u) += scale * d_mean.row(v);
    }
    return dx;
}

template <typename T>
Mat<T> gat_layer_backward(const ModelConfig& c, const ParamSet<T>& p, uint32_t l, const BatchGraph& b,
                          const LayerCache<T>& cache, const Mat<T>& d_pre, ParamSet<T>& g) {
    const auto n = static_cast<uint32_t>(b.num_nodes());
    const uint32_t heads = c.heads;
    const uint32_t f = head_width(c, l);
    const bool last = is_last(c, l);
    const T slope = static_cast<T>(c.leaky_slope);
    const Mat<T>& proj = cache.projected;
    const Mat<T>& a_src = p[pname(l, "att_src")];
    const Mat<T>& a_dst = p[pname(l, "att_dst")];
    g[pname(l, "bias")] += d_pre.colwise().sum();

    Mat<T> d_proj = Mat<T>::Zero(n, static_cast<Eigen::Index>(heads) * f);
    Mat<T> ds_src = Mat<T>::Zero(n, heads);
    Mat<T> ds_dst = Mat<T>::Zero(n, heads);
    std::vector<T> d_alpha;
    for (uint32_t v = 0; v < n; ++v) {
        auto in = b.in_neighbors(v);
        const size_t base = slot_begin(b, v);
        const size_t count = in.size() + 1;
        auto source = [&](size_t j) { return j == 0 ? v : in[j - 1]; };
        d_alpha.resize(count);
        for (uint32_t k = 0; k < heads; ++k) {
            Eigen::Matrix<T, 1, Eigen::Dynamic> d_out =
                last ? Eigen::Matrix<T, 1, Eigen::Dynamic>(d_pre.row(v) / static_cast<T>(heads))
                     : Eigen::Matrix<T, 1, Eigen::Dynamic>(d_pre.row(v).segment(k * f, f));
            T weighted = 0;
            for (size_t j = 0; j < count; ++j) {
                const uint32_t u = source(j);
                const T a = cache.alpha[(base + j) * heads + k];
                d_alpha[j] = d_out.dot(proj.row(u).segment(k * f, f));
                d_proj.row(u).segment(k * f, f) += a * d_out;
                weighted += a * d_alpha[j];
            }
            for (size_t j = 0; j < count; ++j) {
                const T a = cache.alpha[(base + j) * heads + k];
                const T e = cache.logits[(base + j) * heads + k];
                const T d_e = a * (d_alpha[j] - weighted) * (e > T(0) ? T(1) : slope);
                ds_dst(v, k) += d_e;
                ds_src(source(j), k) += d_e;
            }
        }
    }
    Mat<T>& g_src = g[pname(l, "att_src")];
    Mat<T>& g_dst = g[pname(l, "att_dst")];
    for (uint32_t u = 0; u < n; ++u) {
        for (uint32_t k = 0; k < heads; ++k) {
            const auto row = proj.row(u).segment(k * f, f);
            g_src.row(k) += ds_src(u, k) * row;
            g_dst.row(k) += ds_dst(u, k) * row;
            d_proj.row(u).segment(k * f, f) += ds_src(u, k) * a_src.row(k) + ds_dst(u, k) * a_dst.row(k);
        }
    }
    g[pname(l, "w")] += cache.input.transpose() * d_proj;
    return d_proj * p[pname(l, "w")].transpose();
}

void expect_shape(const std::string& name, Eigen::Index rows, Eigen::Index cols, Eigen::Index want_rows,
                  Eigen::Index want_cols) {
    if (rows != want_rows || cols != want_cols) {
        throw ConfigError("parameter " + name + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                          ", expected " + std::to_string(want_rows) + "x" + std::to_string(want_cols));
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (depth < 1) throw ConfigError("model depth must be >= 1");
    if (input_dim < 1 || output_dim < 1 || (depth > 1 && hidden_dim < 1)) {
        throw ConfigError("model dimensions must be >= 1");
    }
    if (layer == LayerType::kGat) {
        if (heads < 1) throw ConfigError("gat needs at least one head");
        if (depth > 1 && hidden_dim % heads != 0) {
            throw ConfigError("gat hidden_dim must be divisible by heads");
        }
    }
    const double w[] = {weights.margin, weights.retrieval, weights.reconstruction, weights.whitening,
                        weights.classification};
    bool positive = false;
    for (double x : w) {
        if (!(x >= 0.0)) throw ConfigError("loss weights must be >= 0");
        positive = positive || x > 0.0;
    }
    if (!positive) throw ConfigError("at least one loss weight must be positive");
    if (weights.classification > 0.0 && num_classes < 2) {
        throw ConfigError("classification loss needs num_classes >= 2");
    }
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
}

json ModelConfig::to_json() const {
    return {{"layer", layer_type_name(layer)},
            {"depth", depth},
            {"input_dim", input_dim},
            {"hidden_dim", hidden_dim},
            {"output_dim", output_dim},
            {"heads", heads},
            {"activation", activation_name(activation)},
            {"normalize_output", normalize_output},
            {"loss_weights",
             {{"margin", weights.margin},
              {"retrieval", weights.retrieval},
              {"reconstruction", weights.reconstruction},
              {"whitening", weights.whitening},
              {"classification", weights.classification}}},
            {"margin", margin},
            {"temperature", temperature},
            {"whitening_lambda", whitening_lambda},
            {"leaky_slope", leaky_slope},
            {"num_classes", num_classes}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    try {
        c.layer = parse_layer(j.value("layer", std::string("sage")));
        c.depth = j.value("depth", c.depth);
        c.input_dim = j.value("input_dim", c.input_dim);
        c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
        c.output_dim = j.value("output_dim", c.output_dim);
        c.heads = j.value("heads", c.heads);
        c.activation = parse_activation(j.value("activation", std::string("relu")));
        c.normalize_output = j.value("normalize_output", c.normalize_output);
        if (j.contains("loss_weights")) {
            const json& w = j.at("loss_weights");
            c.weights.margin = w.value("margin", 0.0);
            c.weights.retrieval = w.value("retrieval", 0.0);
            c.weights.reconstruction = w.value("reconstruction", 0.0);
            c.weights.whitening = w.value("whitening", 0.0);
            c.weights.classification = w.value("classification", 0.0);
        }
        c.margin = j.value("margin", c.margin);
        c.temperature = j.value("temperature", c.temperature);
        c.whitening_lambda = j.value("whitening_lambda", c.whitening_lambda);
        c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
        c.num_classes = j.value("num_classes", c.num_classes);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model config: ") + e.what());
    }
    return c;
}

template <typename T>
size_t ParamSet<T>::index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ConfigError("missing parameter " + name);
    return static_cast<size_t>(it - names.begin());
}

template <typename T>
void ParamSet<T>::add(std::string name, Mat<T> value) {
    names.push_back(std::move(name));
    tensors.push_back(std::move(value));
}

template <typename T>
ParamSet<T> ParamSet<T>::zeros_like() const {
    ParamSet out;
    for (size_t i = 0; i < size(); ++i) {
        out.add(names[i], Mat<T>::Zero(tensors[i].rows(), tensors[i].cols()));
    }
    return out;
}

template <typename T>
size_t ParamSet<T>::scalar_count() const {
    size_t n = 0;
    for (const auto& t : tensors) n += static_cast<size_t>(t.size());
    return n;
}

ParamSet<float> init_params(const ModelConfig& c, uint64_t seed) {
    c.validate();
    SplitMix64 rng(SeedDerivation::derive(seed, "init", 0, 0));
    auto glorot = [&](Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Mat<float> m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = static_cast<float>((2.0 * rng.uniform() - 1.0) * limit);
        }
        return m;
    };
    ParamSet<float> p;
    for (uint32_t l = 0; l < c.depth; ++l) {
        const uint32_t in = layer_in(c, l), out = layer_out(c, l);
        if (c.layer == LayerType::kSage) {
            p.add(pname(l, "w_self"), glorot(in, out, in, out));
            p.add(pname(l, "w_neigh"), glorot(in, out, in, out));
        } else {
            const uint32_t f = head_width(c, l);
            p.add(pname(l, "w"), glorot(in, c.heads * f, in, c.heads * f));
            p.add(pname(l, "att_src"), glorot(c.heads, f, f, 1));
            p.add(pname(l, "att_dst"), glorot(c.heads, f, f, 1));
        }
        p.add(pname(l, "bias"), Mat<float>::Zero(1, out));
    }
    if (c.weights.reconstruction > 0.0) {
        p.add("decoder.w", glorot(c.output_dim, c.input_dim, c.output_dim, c.input_dim));
        p.add("decoder.bias", Mat<float>::Zero(1, c.input_dim));
    }
    if (c.num_classes > 0) {
        p.add("classifier.w", glorot(c.output_dim, c.num_classes, c.output_dim, c.num_classes));
        p.add("classifier.bias", Mat<float>::Zero(1, c.num_classes));
    }
    return p;
}

template <typename T>
void check_params(const ModelConfig& c, const ParamSet<T>& p) {
    for (uint32_t l = 0; l < c.depth; ++l) {
        const uint32_t in = layer_in(c, l), out = layer_out(c, l);
        auto check = [&](const char* what, Eigen::Index r, Eigen::Index col) {
            const auto& t = p[pname(l, what)];
            expect_shape(pname(l, what), t.rows(), t.cols(), r, col);
        };
        if (c.layer == LayerType::kSage) {
            check("w_self", in, out);
            check("w_neigh", in, out);
        } else {
            const uint32_t f = head_width(c, l);
            check("w", in, static_cast<Eigen::Index>(c.heads) * f);
            check("att_src", c.heads, f);
            check("att_dst", c.heads, f);
        }
        check("bias", 1, out);
    }
}

template <typename T>
Mat<T> batch_features(const BatchGraph& b) {
    Mat<T> x(static_cast<Eigen::Index>(b.num_nodes()), b.feature_dim);
    for (size_t i = 0; i < b.features.size(); ++i) {
        x.data()[i] = static_cast<T>(b.features[i]);
    }
    return x;
}

template <typename T>
Mat<T> forward(const ModelConfig& c, const ParamSet<T>& p, const BatchGraph& b, ForwardCache<T>* cache) {
    check_params(c, p);
    if (b.num_nodes() > 0 && b.feature_dim != c.input_dim) {
        throw ConfigError("batch feature dimension " + std::to_string(b.feature_dim) + " does not match model input " +
                          std::to_string(c.input_dim));
    }
    ForwardCache<T> local;
    ForwardCache<T>& fc = cache ? *cache : local;
    fc.layers.assign(c.depth, {});
    Mat<T> h = batch_features<T>(b);
    for (uint32_t l = 0; l < c.depth; ++l) {
        h = c.layer == LayerType::kSage ? sage_layer(c, p, l, b, h, fc.layers[l]) : gat_layer(c, p, l, b, h, fc.layers[l]);
    }
    fc.raw_output = h;
    if (c.normalize_output) {
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            h.row(i) /= std::max(h.row(i).norm(), T(1e-12));
        }
    }
    return h;
}

template <typename T>
void backward(const ModelConfig& c, const ParamSet<T>& p, const BatchGraph& b, const ForwardCache<T>& fc,
              const Mat<T>& d_output, ParamSet<T>& g, Mat<T>* d_input) {
    Mat<T> d = d_output;
    if (c.normalize_output) {
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            const T norm = std::max(fc.raw_output.row(i).norm(), T(1e-12));
            const auto y = fc.raw_output.row(i) / norm;
            d.row(i) = (d.row(i) - y * y.dot(d.row(i))) / norm;
        }
    }
    for (uint32_t l = c.depth; l-- > 0;) {
        const LayerCache<T>& lc = fc.layers[l];
        Mat<T> d_pre = d;
        if (!is_last(c, l)) {
            for (Eigen::Index i = 0; i < d_pre.size(); ++i) {
                d_pre.data()[i] *= activate_grad(c.activation, lc.pre.data()[i]);
            }
        }
        d = c.layer == LayerType::kSage ? sage_layer_backward(c, p, l, b, lc, d_pre, g)
                                        : gat_layer_backward(c, p, l, b, lc, d_pre, g);
    }
    if (d_input) *d_input = std::move(d);
}

#define GIGLITE_INSTANTIATE(T)                                                                                   \
    template struct ParamSet<T>;                                                                                 \
    template void check_params<T>(const ModelConfig&, const ParamSet<T>&);                                      \
    template Mat<T> batch_features<T>(const BatchGraph&);                                                        \
    template Mat<T> forward<T>(const ModelConfig&, const ParamSet<T>&, const BatchGraph&, ForwardCache<T>*);    \
    template void backward<T>(const ModelConfig&, const ParamSet<T>&, const BatchGraph&, const ForwardCache<T>&, \
                              const Mat<T>&, ParamSet<T>&, Mat<T>*);

GIGLITE_INSTANTIATE(float)
GIGLITE_INSTANTIATE(double)

#undef GIGLITE_INSTANTIATE

}  // namespace giglite
