#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "giglite/graph.h"

namespace giglite {

struct RankingMetrics {
    double mrr = 0.0;
    std::map<uint32_t, double> hits;  // K -> fraction with rank <= K
    size_t count = 0;
    /// Expected MRR of uniformly random scores over the same pool sizes.
    double random_baseline = 0.0;
};

inline const std::vector<uint32_t> kDefaultHitsK = {1, 5, 10};

/// 1 + #{j : s_j > s_t} + #{j : s_j == s_t and id_j < id_t}.
uint64_t rank_of(std::span<const double> scores, size_t target, std::span<const NodeRef> ids);

/// Same rule with integer candidate ids.
uint64_t rank_of(std::span<const double> scores, size_t target, std::span<const uint64_t> ids);

RankingMetrics metrics_from_ranks(std::span<const uint64_t> ranks, std::span<const uint32_t> ks = kDefaultHitsK);

/// H_n / n.
double random_mrr_expected(uint64_t n_candidates);

/// Mean MRR of one target among n i.i.d. uniform scores, over `trials` draws.
double random_mrr_monte_carlo(uint32_t n_candidates, uint32_t trials, uint64_t seed);

/// Query i ranks candidate targets[i] within row i of `scores` (row-major, queries x candidates).
RankingMetrics evaluate_scores(std::span<const double> scores, size_t n_candidates, std::span<const size_t> targets,
                               std::span<const NodeRef> ids, std::span<const uint32_t> ks = kDefaultHitsK);

}  // namespace giglite
