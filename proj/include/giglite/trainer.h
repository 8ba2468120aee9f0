#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "giglite/artifact.h"
#include "giglite/batch.h"
#include "giglite/metrics.h"
#include "giglite/model.h"

namespace giglite {

struct TrainConfig {
    uint32_t batch_size = 64;
    uint32_t max_epochs = 10;
    uint32_t val_every = 50;  // batches between validations
    uint32_t patience = 4;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    uint64_t seed = 0;
    uint32_t eval_candidates = 512;
    uint32_t max_val_samples = 0;  // 0 keeps every validation sample

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct ObjectiveTerms {
    double total = 0, margin = 0, retrieval = 0, reconstruction = 0, whitening = 0, classification = 0;
};

/// Weighted multi-task loss of one collated batch. Pairs are (anchor, positive) per
/// positive; margin triplets pair each of them with every hard negative of the sample
/// (or, without hard negatives, with the next pair's positive). Retrieval candidates are
/// all pair positives followed by all hard negatives. Reconstruction covers every root,
/// whitening covers anchors. Gradients accumulate into `grads` when non-null.
template <typename T>
ObjectiveTerms batch_objective(const ModelConfig& config, const ParamSet<T>& params, const BatchGraph& batch,
                               ParamSet<T>* grads = nullptr);

class Adam {
  public:
    Adam(const TrainConfig& config, const ParamSet<float>& params);
    void step(ParamSet<float>& params, const ParamSet<float>& grads);

  private:
    TrainConfig config_;
    ParamSet<float> m_, v_;
    uint64_t t_ = 0;
};

/// Root embeddings, one forward pass per subgraph so a row never depends on batch composition.
Mat<float> embed_subgraphs(const ModelConfig& config, const ParamSet<float>& params,
                           std::span<const RootedSubgraph* const> subgraphs);

/// Ranks each (anchor, positive) pair's positive against the positives of its pool.
/// Pairs are shuffled with `seed` and cut into pools of `n_candidates`.
RankingMetrics evaluate_model(const ModelConfig& config, const ParamSet<float>& params,
                              std::span<const TrainingSample> samples, uint32_t n_candidates, uint64_t seed,
                              std::span<const uint32_t> ks = kDefaultHitsK);

/// Fraction of labelled samples whose arg-max class matches; needs classifier parameters.
double classification_accuracy(const ModelConfig& config, const ParamSet<float>& params,
                               std::span<const TrainingSample> samples);

struct TrainResult {
    ModelArtifact artifact;
    std::vector<std::string> log;  // JSON lines
    size_t validations = 0;
    bool early_stopped = false;
};

/// Throws ConfigError on empty datasets and TrainingError on a non-finite loss.
TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> val_set,
                  const ModelConfig& model_config, const TrainConfig& train_config, std::ostream* log_sink = nullptr);

struct GradCheckResult {
    double max_rel_error = 0.0;
    size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// `f(x, grad)` returns the loss and, when grad is non-null, fills the analytic gradient.
/// Relative error per coordinate: |a - n| / max(|a|, |n|, floor).
GradCheckResult gradient_check(const std::function<double(std::span<const double>, std::vector<double>*)>& f,
                               std::vector<double> x, double eps = 1e-5, double floor = 1e-6);

std::vector<double> flatten(const ParamSet<double>& params);
void unflatten(std::span<const double> flat, ParamSet<double>& params);

}  // namespace giglite
