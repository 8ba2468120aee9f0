#include "giglite/trainer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "giglite/error.h"
#include "giglite/hash.h"
#include "giglite/losses.h"

namespace giglite {

using nlohmann::json;

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (val_every < 1) throw ConfigError("val_every must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (eval_candidates < 1) throw ConfigError("eval_candidates must be >= 1");
}

json TrainConfig::to_json() const {
    return {{"batch_size", batch_size},       {"max_epochs", max_epochs},   {"val_every", val_every},
            {"patience", patience},           {"learning_rate", learning_rate}, {"beta1", beta1},
            {"beta2", beta2},                 {"adam_eps", adam_eps},       {"weight_decay", weight_decay},
            {"seed", seed},                   {"eval_candidates", eval_candidates},
            {"max_val_samples", max_val_samples}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    try {
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.val_every = j.value("val_every", c.val_every);
        c.patience = j.value("patience", c.patience);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.seed = j.value("seed", c.seed);
        c.eval_candidates = j.value("eval_candidates", c.eval_candidates);
        c.max_val_samples = j.value("max_val_samples", c.max_val_samples);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    return c;
}

namespace {

template <typename T>
Mat<T> gather(const Mat<T>& m, const std::vector<uint32_t>& rows) {
    Mat<T> out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
    return out;
}

template <typename T>
void scatter(Mat<T>& dst, const std::vector<uint32_t>& rows, const Mat<T>& d, T weight) {
    for (size_t i = 0; i < rows.size(); ++i) dst.row(rows[i]) += weight * d.row(i);
}

std::vector<uint32_t> permutation(size_t n, uint64_t seed) {
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    SplitMix64 rng(seed);
    for (size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    return order;
}

}  // namespace

template <typename T>
ObjectiveTerms batch_objective(const ModelConfig& c, const ParamSet<T>& p, const BatchGraph& b, ParamSet<T>* grads) {
    ForwardCache<T> cache;
    const Mat<T> emb = forward(c, p, b, &cache);
    Mat<T> d_emb = Mat<T>::Zero(emb.rows(), emb.cols());
    const LossWeights& w = c.weights;
    ObjectiveTerms terms;

    std::vector<uint32_t> pair_a, pair_p, negatives, anchors, roots;
    for (const auto& s : b.samples) {
        anchors.push_back(s.anchor);
        roots.push_back(s.anchor);
        for (uint32_t pos : s.positives) {
            pair_a.push_back(s.anchor);
            pair_p.push_back(pos);
            roots.push_back(pos);
        }
        for (uint32_t neg : s.negatives) {
            negatives.push_back(neg);
            roots.push_back(neg);
        }
    }
    Mat<T> da, dp, dn;

    if (w.margin > 0.0 && !pair_a.empty()) {
        std::vector<uint32_t> ta, tp, tn;
        size_t k = 0;
        for (const auto& s : b.samples) {
            for (uint32_t pos : s.positives) {
                if (!s.negatives.empty()) {
                    for (uint32_t neg : s.negatives) {
                        ta.push_back(s.anchor);
                        tp.push_back(pos);
                        tn.push_back(neg);
                    }
                } else if (pair_p.size() > 1) {
                    ta.push_back(s.anchor);
                    tp.push_back(pos);
                    tn.push_back(pair_p[(k + 1) % pair_p.size()]);
                }
                ++k;
            }
        }
        if (!ta.empty()) {
            const T loss = margin_loss<T>(gather(emb, ta), gather(emb, tp), gather(emb, tn), static_cast<T>(c.margin),
                                          &da, &dp, &dn);
            terms.margin = static_cast<double>(loss);
            const T wt = static_cast<T>(w.margin);
            scatter(d_emb, ta, da, wt);
            scatter(d_emb, tp, dp, wt);
            scatter(d_emb, tn, dn, wt);
        }
    }

    if (w.retrieval > 0.0 && !pair_a.empty()) {
        std::vector<uint32_t> cand = pair_p;
        cand.insert(cand.end(), negatives.begin(), negatives.end());
        const T loss =
            retrieval_loss<T>(gather(emb, pair_a), gather(emb, cand), static_cast<T>(c.temperature), &da, &dp);
        terms.retrieval = static_cast<double>(loss);
        scatter(d_emb, pair_a, da, static_cast<T>(w.retrieval));
        scatter(d_emb, cand, dp, static_cast<T>(w.retrieval));
    }

    if (w.reconstruction > 0.0 && !roots.empty()) {
        const Mat<T> x = gather(batch_features<T>(b), roots);
        Mat<T> dw, dbias;
        const T loss = feature_reconstruction_loss<T>(gather(emb, roots), x, p["decoder.w"], p["decoder.bias"], &da,
                                                      &dw, &dbias);
        terms.reconstruction = static_cast<double>(loss);
        const T wt = static_cast<T>(w.reconstruction);
        scatter(d_emb, roots, da, wt);
        if (grads) {
            (*grads)["decoder.w"] += wt * dw;
            (*grads)["decoder.bias"] += wt * dbias;
        }
    }

    if (w.whitening > 0.0 && anchors.size() > 1) {
        const T loss = whitening_decorrelation_loss<T>(gather(emb, anchors), static_cast<T>(c.whitening_lambda), &da);
        terms.whitening = static_cast<double>(loss);
        scatter(d_emb, anchors, da, static_cast<T>(w.whitening));
    }

    if (w.classification > 0.0) {
        std::vector<uint32_t> labelled;
        std::vector<int64_t> labels;
        for (const auto& s : b.samples) {
            if (s.label) {
                labelled.push_back(s.anchor);
                labels.push_back(*s.label);
            }
        }
        if (!labelled.empty()) {
            Mat<T> dw, dbias;
            const T loss = classification_loss<T>(gather(emb, labelled), labels, p["classifier.w"],
                                                  p["classifier.bias"], &da, &dw, &dbias);
            terms.classification = static_cast<double>(loss);
            const T wt = static_cast<T>(w.classification);
            scatter(d_emb, labelled, da, wt);
            if (grads) {
                (*grads)["classifier.w"] += wt * dw;
                (*grads)["classifier.bias"] += wt * dbias;
            }
        }
    }

    terms.total = w.margin * terms.margin + w.retrieval * terms.retrieval + w.reconstruction * terms.reconstruction +
                  w.whitening * terms.whitening + w.classification * terms.classification;
    if (grads) backward(c, p, b, cache, d_emb, *grads);
    return terms;
}

template ObjectiveTerms batch_objective<float>(const ModelConfig&, const ParamSet<float>&, const BatchGraph&,
                                               ParamSet<float>*);
template ObjectiveTerms batch_objective<double>(const ModelConfig&, const ParamSet<double>&, const BatchGraph&,
                                                ParamSet<double>*);

Adam::Adam(const TrainConfig& config, const ParamSet<float>& params)
    : config_(config), m_(params.zeros_like()), v_(params.zeros_like()) {}

void Adam::step(ParamSet<float>& params, const ParamSet<float>& grads) {
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        float* w = params.tensors[i].data();
        const float* g = grads.tensors[i].data();
        float* m = m_.tensors[i].data();
        float* v = v_.tensors[i].data();
        for (Eigen::Index k = 0; k < params.tensors[i].size(); ++k) {
            const double gk = static_cast<double>(g[k]) + config_.weight_decay * static_cast<double>(w[k]);
            m[k] = static_cast<float>(b1 * m[k] + (1.0 - b1) * gk);
            v[k] = static_cast<float>(b2 * v[k] + (1.0 - b2) * gk * gk);
            const double mh = m[k] / c1, vh = v[k] / c2;
            w[k] = static_cast<float>(w[k] - config_.learning_rate * mh / (std::sqrt(vh) + config_.adam_eps));
        }
    }
}

Mat<float> embed_subgraphs(const ModelConfig& c, const ParamSet<float>& p,
                           std::span<const RootedSubgraph* const> subgraphs) {
    Mat<float> out(static_cast<Eigen::Index>(subgraphs.size()), c.output_dim);
    for (size_t i = 0; i < subgraphs.size(); ++i) {
        const BatchGraph b = collate_subgraphs(std::span<const RootedSubgraph>(subgraphs[i], 1));
        out.row(static_cast<Eigen::Index>(i)) = forward(c, p, b).row(b.samples.front().anchor);
    }
    return out;
}

RankingMetrics evaluate_model(const ModelConfig& c, const ParamSet<float>& p, std::span<const TrainingSample> samples,
                              uint32_t n_candidates, uint64_t seed, std::span<const uint32_t> ks) {
    std::vector<const RootedSubgraph*> anchors, positives;
    for (const auto& s : samples) {
        for (const auto& pos : s.positives) {
            anchors.push_back(&s.anchor);
            positives.push_back(&pos);
        }
    }
    if (anchors.empty() || n_candidates == 0) return metrics_from_ranks({}, ks);
    const Mat<float> ea = embed_subgraphs(c, p, anchors);
    const Mat<float> ep = embed_subgraphs(c, p, positives);
    const std::vector<uint32_t> order = permutation(anchors.size(), seed);
    std::vector<uint64_t> ranks;
    double baseline = 0.0;
    for (size_t start = 0; start < order.size(); start += n_candidates) {
        const size_t m = std::min<size_t>(n_candidates, order.size() - start);
        std::vector<NodeRef> ids;
        for (size_t j = 0; j < m; ++j) ids.push_back(positives[order[start + j]]->root);
        std::vector<double> scores(m);
        for (size_t i = 0; i < m; ++i) {
            const auto a = ea.row(order[start + i]);
            for (size_t j = 0; j < m; ++j) {
                scores[j] = static_cast<double>(a.dot(ep.row(order[start + j])));
            }
            ranks.push_back(rank_of(scores, i, ids));
        }
        baseline += static_cast<double>(m) * random_mrr_expected(m);
    }
    RankingMetrics out = metrics_from_ranks(ranks, ks);
    out.random_baseline = baseline / static_cast<double>(order.size());
    return out;
}

double classification_accuracy(const ModelConfig& c, const ParamSet<float>& p,
                               std::span<const TrainingSample> samples) {
    if (samples.empty()) return 0.0;
    std::vector<const RootedSubgraph*> roots;
    for (const auto& s : samples) roots.push_back(&s.anchor);
    const Mat<float> e = embed_subgraphs(c, p, roots);
    Mat<float> logits = e * p["classifier.w"];
    logits.rowwise() += p["classifier.bias"].row(0);
    size_t correct = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        Eigen::Index best = 0;
        logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        if (samples[i].label && *samples[i].label == best) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

namespace {

struct Validation {
    std::string name;
    double score = 0.0;  // higher is better
    json record;
};

Validation run_validation(const ModelConfig& c, const ParamSet<float>& p, std::span<const TrainingSample> val,
                          const TrainConfig& tc) {
    Validation v;
    const SampleKind kind = val.front().kind;
    if (kind == SampleKind::kLinkPrediction) {
        const RankingMetrics m = evaluate_model(c, p, val, tc.eval_candidates, SeedDerivation::derive(tc.seed, "eval", 0, 0));
        v.name = "mrr";
        v.score = m.mrr;
        v.record = {{"mrr", m.mrr}, {"random_mrr", m.random_baseline}, {"pairs", m.count}};
        for (const auto& [k, h] : m.hits) v.record["hits@" + std::to_string(k)] = h;
        return v;
    }
    if (kind == SampleKind::kNodeClassification && c.num_classes > 0) {
        v.score = classification_accuracy(c, p, val);
        v.name = "accuracy";
        v.record = {{"accuracy", v.score}};
        return v;
    }
    double total = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < val.size(); start += tc.batch_size) {
        const size_t n = std::min<size_t>(tc.batch_size, val.size() - start);
        total += batch_objective<float>(c, p, collate(val.subspan(start, n))).total;
        ++batches;
    }
    v.name = "neg_loss";
    v.score = -total / static_cast<double>(batches);
    v.record = {{"loss", -v.score}};
    return v;
}

}  // namespace

TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> val_set,
                  const ModelConfig& mc, const TrainConfig& tc, std::ostream* sink) {
    mc.validate();
    tc.validate();
    if (train_set.empty()) throw ConfigError("training set is empty");
    if (val_set.empty()) throw ConfigError("validation set is empty");

    std::vector<TrainingSample> val_subset;
    std::span<const TrainingSample> val = val_set;
    if (tc.max_val_samples > 0 && val_set.size() > tc.max_val_samples) {
        for (uint32_t i : choose_without_replacement(static_cast<uint32_t>(val_set.size()), tc.max_val_samples,
                                                     SeedDerivation::derive(tc.seed, "val-subset", 0, 0))) {
            val_subset.push_back(val_set[i]);
        }
        val = val_subset;
    }

    TrainResult result;
    auto emit = [&](json record) {
        std::string line = record.dump();
        if (sink) *sink << line << '\n';
        result.log.push_back(std::move(line));
    };

    ParamSet<float> params = init_params(mc, tc.seed);
    ParamSet<float> best = params;
    Adam adam(tc, params);
    TrainingMetadata meta;
    meta.seed = tc.seed;
    double best_score = -std::numeric_limits<double>::infinity();
    uint32_t since_best = 0;
    uint64_t step = 0;
    uint32_t epoch = 0;
    bool stop = false;

    auto validate_now = [&] {
        Validation v = run_validation(mc, params, val, tc);
        ++result.validations;
        meta.best_metric_name = v.name;
        const bool improved = v.score > best_score;
        if (improved) {
            best_score = v.score;
            best = params;
            meta.best_step = step;
            since_best = 0;
        } else {
            ++since_best;
        }
        json record = {{"event", "validate"}, {"epoch", epoch}, {"step", step}, {"improved", improved}};
        record.update(v.record);
        emit(record);
        return since_best >= tc.patience;
    };

    std::vector<const TrainingSample*> batch_samples;
    for (epoch = 0; epoch < tc.max_epochs && !stop; ++epoch) {
        const auto order = permutation(train_set.size(), SeedDerivation::derive(tc.seed, "shuffle", 0, epoch));
        for (size_t start = 0; start < order.size() && !stop; start += tc.batch_size) {
            const size_t n = std::min<size_t>(tc.batch_size, order.size() - start);
            batch_samples.clear();
            for (size_t i = 0; i < n; ++i) batch_samples.push_back(&train_set[order[start + i]]);
            const BatchGraph batch = collate(batch_samples);
            ParamSet<float> grads = params.zeros_like();
            const ObjectiveTerms t = batch_objective<float>(mc, params, batch, &grads);
            if (!std::isfinite(t.total)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << " step " << step << " (margin " << t.margin
                    << ", retrieval " << t.retrieval << ", reconstruction " << t.reconstruction << ", whitening "
                    << t.whitening << ", classification " << t.classification << ")";
                throw TrainingError(msg.str());
            }
            adam.step(params, grads);
            ++step;
            emit({{"event", "train"},
                  {"epoch", epoch},
                  {"step", step},
                  {"loss", t.total},
                  {"margin", t.margin},
                  {"retrieval", t.retrieval},
                  {"reconstruction", t.reconstruction},
                  {"whitening", t.whitening},
                  {"classification", t.classification}});
            if (step % tc.val_every == 0) {
                stop = validate_now();
                result.early_stopped = stop;
            }
        }
    }
    if (result.validations == 0) validate_now();

    meta.epochs = epoch;
    meta.steps = step;
    meta.best_metric = best_score;
    emit({{"event", "done"},
          {"epochs", epoch},
          {"steps", step},
          {"best_step", meta.best_step},
          {"best_" + meta.best_metric_name, best_score}});
    result.artifact = {mc, std::move(best), meta};
    return result;
}

GradCheckResult gradient_check(const std::function<double(std::span<const double>, std::vector<double>*)>& f,
                               std::vector<double> x, double eps, double floor) {
    std::vector<double> analytic;
    f(x, &analytic);
    if (analytic.size() != x.size()) throw ConfigError("gradient_check: gradient size differs from input size");
    GradCheckResult out;
    for (size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = f(x, nullptr);
        x[i] = keep - eps;
        const double down = f(x, nullptr);
        x[i] = keep;
        const double numeric = (up - down) / (2.0 * eps);
        const double rel =
            std::fabs(analytic[i] - numeric) / std::max({std::fabs(analytic[i]), std::fabs(numeric), floor});
        if (i == 0 || rel > out.max_rel_error) {
            out = {rel, i, analytic[i], numeric};
        }
    }
    return out;
}

std::vector<double> flatten(const ParamSet<double>& params) {
    std::vector<double> flat;
    flat.reserve(params.scalar_count());
    for (const auto& t : params.tensors) flat.insert(flat.end(), t.data(), t.data() + t.size());
    return flat;
}

void unflatten(std::span<const double> flat, ParamSet<double>& params) {
    if (flat.size() != params.scalar_count()) throw ConfigError("unflatten: size mismatch");
    size_t pos = 0;
    for (auto& t : params.tensors) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), t.size(), t.data());
        pos += static_cast<size_t>(t.size());
    }
}

}  // namespace giglite
