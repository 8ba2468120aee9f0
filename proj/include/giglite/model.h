#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "giglite/batch.h"

namespace giglite {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class LayerType { kSage, kGat };
enum class Activation { kRelu, kTanh, kIdentity };

const char* layer_type_name(LayerType t);
const char* activation_name(Activation a);

struct LossWeights {
    double margin = 0.0;
    double retrieval = 1.0;
    double reconstruction = 0.1;
    double whitening = 0.1;
    double classification = 0.0;
};

struct ModelConfig {
    LayerType layer = LayerType::kSage;
    uint32_t depth = 2;
    uint32_t input_dim = 0;
    uint32_t hidden_dim = 64;
    uint32_t output_dim = 32;
    uint32_t heads = 2;  // gat only; hidden_dim must be divisible by heads
    Activation activation = Activation::kRelu;
    bool normalize_output = false;
    LossWeights weights;
    double margin = 0.5;
    double temperature = 0.1;
    double whitening_lambda = 0.005;
    double leaky_slope = 0.2;
    uint32_t num_classes = 0;  // > 0 adds a linear classification head

    /// Throws ConfigError.
    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

/// Ordered named tensors. Gradients use the same layout as their parameters.
template <typename T>
struct ParamSet {
    std::vector<std::string> names;
    std::vector<Mat<T>> tensors;

    size_t size() const { return tensors.size(); }
    size_t index(const std::string& name) const;
    Mat<T>& operator[](const std::string& name) { return tensors[index(name)]; }
    const Mat<T>& operator[](const std::string& name) const { return tensors[index(name)]; }
    void add(std::string name, Mat<T> value);
    /// Same names and shapes, zero values.
    ParamSet zeros_like() const;
    size_t scalar_count() const;

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        for (size_t i = 0; i < size(); ++i) {
            out.add(names[i], tensors[i].template cast<U>());
        }
        return out;
    }
};

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
ParamSet<float> init_params(const ModelConfig& config, uint64_t seed);

/// Throws ConfigError when a tensor is missing or mis-shaped.
template <typename T>
void check_params(const ModelConfig& config, const ParamSet<T>& params);

template <typename T>
struct LayerCache {
    Mat<T> input;       // N x in
    Mat<T> neigh_mean;  // sage: N x in
    Mat<T> pre;         // N x out, before activation
    Mat<T> projected;   // gat: N x heads*F
    // gat: per incoming slot (self first, then in-neighbors) attention pre-activation and weight, per head.
    std::vector<T> logits;
    std::vector<T> alpha;
};

template <typename T>
struct ForwardCache {
    std::vector<LayerCache<T>> layers;
    Mat<T> raw_output;  // before row normalization
};

/// Node-level message passing over the whole batch; returns N x output_dim.
template <typename T>
Mat<T> forward(const ModelConfig& config, const ParamSet<T>& params, const BatchGraph& batch,
               ForwardCache<T>* cache = nullptr);

/// Accumulates parameter gradients for d(loss)/d(output) into `grads`.
/// `d_input`, when non-null, receives d(loss)/d(features).
template <typename T>
void backward(const ModelConfig& config, const ParamSet<T>& params, const BatchGraph& batch,
              const ForwardCache<T>& cache, const Mat<T>& d_output, ParamSet<T>& grads, Mat<T>* d_input = nullptr);

template <typename T>
Mat<T> batch_features(const BatchGraph& batch);

}  // namespace giglite
