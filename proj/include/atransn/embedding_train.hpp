#pragma once

#include <cstdint>
#include <vector>

#include "atransn/graph_data.hpp"
#include "atransn/nn.hpp"
#include "atransn/rng.hpp"
#include "atransn/scoring.hpp"

namespace atransn {

// One corrupted triplet: the positive with one slot replaced.
struct NegativeSample {
    int32_t entity = 0;
    bool corrupt_head = false;

    bool operator==(const NegativeSample&) const = default;
};

using NegativeGroup = std::vector<NegativeSample>;

// Entity and relation rows in the bound (gamma + eps) / n, RotatE
// relation phases uniform in [-pi, pi).
EmbeddingTable init_embeddings(ModelKind kind, int32_t n_entities, int32_t n_relations, int n,
                               double gamma, double eps, RngStream& rng);

// "unif" corruption: per negative a fair coin picks head vs tail, the
// replacement is uniform over all entities. No false-negative filtering.
NegativeGroup sample_negatives(const Triplet& positive, int k, int32_t n_entities,
                               RngStream& rng);

struct EmbeddingLossResult {
    double loss = 0.0;
    RowGradAccumulator d_entities{0};
    RowGradAccumulator d_relations{0};
};

// Margin loss over positives and their grouped negatives:
//   mean_i [ softplus(f(pos_i) - gamma) + mean_j softplus(gamma - f(neg_ij)) ]
// Gradients accumulate into shared rows. The kernel computes per-triplet
// contributions independently (OpenMP when parallel) and merges them in
// triplet order, so results are bit-identical for any thread count.
EmbeddingLossResult embedding_loss(const std::vector<Triplet>& positives,
                                   const std::vector<NegativeGroup>& negatives,
                                   const EmbeddingTable& table, double gamma, Norm norm,
                                   bool parallel = false);

// Straight-line single-pass implementation kept as the testing
// reference for the slotted kernel above (values match to fp noise; the
// kernel's merge order is what makes it thread-count invariant).
EmbeddingLossResult embedding_loss_reference(const std::vector<Triplet>& positives,
                                             const std::vector<NegativeGroup>& negatives,
                                             const EmbeddingTable& table, double gamma, Norm norm);

}  // namespace atransn
