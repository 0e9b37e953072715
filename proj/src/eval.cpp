#include "atransn/eval.hpp"

#include <cmath>

#include "atransn/parallel.hpp"

namespace atransn {
namespace {

double tie_adjusted_rank(int64_t strictly_better, int64_t ties, TiePolicy policy) {
    switch (policy) {
        case TiePolicy::Optimistic: return 1.0 + static_cast<double>(strictly_better);
        case TiePolicy::Pessimistic:
            return 1.0 + static_cast<double>(strictly_better) + static_cast<double>(ties);
        case TiePolicy::Mean:
            return 1.0 + static_cast<double>(strictly_better) + static_cast<double>(ties) / 2.0;
    }
    return 1.0;
}

}  // namespace

TiePolicy tie_policy_from_string(const std::string& name) {
    if (name == "optimistic") return TiePolicy::Optimistic;
    if (name == "pessimistic") return TiePolicy::Pessimistic;
    if (name == "mean") return TiePolicy::Mean;
    throw ConfigError("unknown tie policy '" + name + "'");
}

std::string to_string(TiePolicy policy) {
    switch (policy) {
        case TiePolicy::Optimistic: return "optimistic";
        case TiePolicy::Pessimistic: return "pessimistic";
        case TiePolicy::Mean: return "mean";
    }
    return "?";
}

RankPair rank_triplet(const Triplet& t, const EmbeddingTable& table, const FilterIndex& filter,
                      Norm norm, TiePolicy policy, int32_t candidate_limit) {
    const int32_t n_candidates =
        candidate_limit > 0 ? std::min(candidate_limit, table.entities.rows)
                            : table.entities.rows;
    const auto r = table.relations.row(t.relation);
    RankPair out;

    {
        const double true_score =
            score(table.kind, table.entities.row(t.head), r, table.entities.row(t.tail), norm);
        int64_t better = 0, ties = 0;
        for (int32_t e = 0; e < n_candidates; ++e) {
            if (e == t.head) continue;
            if (filter.head_known(e, t.relation, t.tail)) continue;
            const double s =
                score(table.kind, table.entities.row(e), r, table.entities.row(t.tail), norm);
            if (s < true_score) {
                ++better;
            } else if (s == true_score) {
                ++ties;
            }
        }
        out.head_rank = tie_adjusted_rank(better, ties, policy);
    }
    {
        const double true_score =
            score(table.kind, table.entities.row(t.head), r, table.entities.row(t.tail), norm);
        int64_t better = 0, ties = 0;
        for (int32_t e = 0; e < n_candidates; ++e) {
            if (e == t.tail) continue;
            if (filter.tail_known(t.head, t.relation, e)) continue;
            const double s =
                score(table.kind, table.entities.row(t.head), r, table.entities.row(e), norm);
            if (s < true_score) {
                ++better;
            } else if (s == true_score) {
                ++ties;
            }
        }
        out.tail_rank = tie_adjusted_rank(better, ties, policy);
    }
    return out;
}

std::vector<RankPair> rank_all(const std::vector<Triplet>& test, const EmbeddingTable& table,
                               const FilterIndex& filter, Norm norm, TiePolicy policy,
                               int32_t candidate_limit, bool parallel) {
    std::vector<RankPair> ranks(test.size());
    const auto n = static_cast<int>(test.size());
    const int threads = parallel ? thread_count() : 1;
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads) if (threads > 1)
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<size_t>(i);
        ranks[k] = rank_triplet(test[k], table, filter, norm, policy, candidate_limit);
    }
    return ranks;
}

RankingMetrics metrics_from_ranks(const std::vector<RankPair>& ranks) {
    if (ranks.empty()) throw UsageError("evaluate: empty test set");
    RankingMetrics m;
    m.n_queries = static_cast<int64_t>(ranks.size()) * 2;
    double mr = 0.0, mrr = 0.0, h1 = 0.0, h3 = 0.0, h10 = 0.0;
    for (const RankPair& rp : ranks) {
        for (const double rank : {rp.head_rank, rp.tail_rank}) {
            mr += rank;
            mrr += 1.0 / rank;
            h1 += rank <= 1.0 ? 1.0 : 0.0;
            h3 += rank <= 3.0 ? 1.0 : 0.0;
            h10 += rank <= 10.0 ? 1.0 : 0.0;
        }
    }
    // One rounding per field: divide the sums, never multiply by a
    // precomputed reciprocal, so any direct reimplementation agrees
    // bit for bit.
    const double n = static_cast<double>(m.n_queries);
    m.mr = mr / n;
    m.mrr = mrr / n;
    m.hits1 = h1 / n;
    m.hits3 = h3 / n;
    m.hits10 = h10 / n;
    return m;
}

RankingMetrics evaluate(const std::vector<Triplet>& test, const EmbeddingTable& table,
                        const FilterIndex& filter, Norm norm, TiePolicy policy,
                        int32_t candidate_limit, bool parallel) {
    return metrics_from_ranks(rank_all(test, table, filter, norm, policy, candidate_limit, parallel));
}

double selection_score(const RankingMetrics& m) {
    return 100.0 / m.mr + m.mrr + m.hits3 + m.hits10;
}

}  // namespace atransn
