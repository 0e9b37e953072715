#pragma once

#include <cstdint>
#include <vector>

#include "atransn/graph_data.hpp"
#include "atransn/scoring.hpp"

namespace atransn {

// How candidates scoring exactly equal to the true entity count toward
// its rank. Optimistic ignores them; pessimistic counts them all; mean
// counts half (giving half-integer ranks).
enum class TiePolicy { Optimistic, Pessimistic, Mean };

TiePolicy tie_policy_from_string(const std::string& name);
std::string to_string(TiePolicy policy);

struct RankingMetrics {
    double mr = 0.0;
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    int64_t n_queries = 0;
};

struct RankPair {
    double head_rank = 0.0;
    double tail_rank = 0.0;
};

// Filtered link-prediction rank of the true head and tail: 1 + number
// of unfiltered candidates scoring strictly better (plus the tie
// policy's share of exact ties). A candidate is filtered when the
// corrupted triplet is itself known true; the true entity is never
// filtered out of its own query. candidate_limit > 0 restricts
// candidates to entity ids below it (merged-graph evaluation); 0 means
// all entities.
RankPair rank_triplet(const Triplet& t, const EmbeddingTable& table, const FilterIndex& filter,
                      Norm norm, TiePolicy policy = TiePolicy::Optimistic,
                      int32_t candidate_limit = 0);

// MR / MRR / Hits over 2 * |test| queries (head and tail per triplet).
// Queries are independent; with parallel=true they fan out across
// threads and aggregate in triplet order, bit-identical to serial.
RankingMetrics evaluate(const std::vector<Triplet>& test, const EmbeddingTable& table,
                        const FilterIndex& filter, Norm norm,
                        TiePolicy policy = TiePolicy::Optimistic, int32_t candidate_limit = 0,
                        bool parallel = false);

// Per-triplet ranks in test order, for the CSV dump.
std::vector<RankPair> rank_all(const std::vector<Triplet>& test, const EmbeddingTable& table,
                               const FilterIndex& filter, Norm norm,
                               TiePolicy policy = TiePolicy::Optimistic,
                               int32_t candidate_limit = 0, bool parallel = false);

RankingMetrics metrics_from_ranks(const std::vector<RankPair>& ranks);

// Validation-time model selection: 100/MR + MRR + Hits@3 + Hits@10.
double selection_score(const RankingMetrics& m);

}  // namespace atransn
