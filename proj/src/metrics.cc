#include "giglite/metrics.h"

#include "giglite/error.h"
#include "giglite/hash.h"

namespace giglite {

namespace {

template <typename Id>
uint64_t rank_impl(std::span<const double> scores, size_t target, std::span<const Id> ids) {
    if (target >= scores.size() || ids.size() != scores.size()) {
        throw ConfigError("rank_of: target or id list does not match the score list");
    }
    const double st = scores[target];
    uint64_t rank = 1;
    for (size_t j = 0; j < scores.size(); ++j) {
        if (j == target) continue;
        if (scores[j] > st || (scores[j] == st && ids[j] < ids[target])) ++rank;
    }
    return rank;
}

}  // namespace

uint64_t rank_of(std::span<const double> scores, size_t target, std::span<const NodeRef> ids) {
    return rank_impl(scores, target, ids);
}

uint64_t rank_of(std::span<const double> scores, size_t target, std::span<const uint64_t> ids) {
    return rank_impl(scores, target, ids);
}

RankingMetrics metrics_from_ranks(std::span<const uint64_t> ranks, std::span<const uint32_t> ks) {
    RankingMetrics m;
    m.count = ranks.size();
    for (uint32_t k : ks) m.hits[k] = 0.0;
    if (ranks.empty()) return m;
    for (uint64_t r : ranks) {
        m.mrr += 1.0 / static_cast<double>(r);
        for (uint32_t k : ks) {
            if (r <= k) m.hits[k] += 1.0;
        }
    }
    const double n = static_cast<double>(ranks.size());
    m.mrr /= n;
    for (auto& [k, h] : m.hits) h /= n;
    return m;
}

double random_mrr_expected(uint64_t n) {
    if (n == 0) return 0.0;
    double h = 0.0;
    for (uint64_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
    return h / static_cast<double>(n);
}

double random_mrr_monte_carlo(uint32_t n, uint32_t trials, uint64_t seed) {
    if (n == 0 || trials == 0) return 0.0;
    SplitMix64 rng(seed);
    std::vector<double> scores(n);
    std::vector<uint64_t> ids(n);
    for (uint32_t j = 0; j < n; ++j) ids[j] = j;
    double total = 0.0;
    for (uint32_t t = 0; t < trials; ++t) {
        for (auto& s : scores) s = rng.uniform();
        const size_t target = rng.below(n);
        total += 1.0 / static_cast<double>(rank_of(scores, target, ids));
    }
    return total / trials;
}

RankingMetrics evaluate_scores(std::span<const double> scores, size_t n_candidates, std::span<const size_t> targets,
                               std::span<const NodeRef> ids, std::span<const uint32_t> ks) {
    if (scores.size() != targets.size() * n_candidates) {
        throw ConfigError("evaluate_scores: score matrix shape does not match the targets");
    }
    std::vector<uint64_t> ranks;
    ranks.reserve(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) {
        ranks.push_back(rank_of(scores.subspan(i * n_candidates, n_candidates), targets[i], ids));
    }
    RankingMetrics m = metrics_from_ranks(ranks, ks);
    m.random_baseline = random_mrr_expected(n_candidates);
    return m;
}

}  // namespace giglite
