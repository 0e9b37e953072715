#include "atransn/embedding_train.hpp"

#include <cmath>
#include <utility>

#include "atransn/mathfn.hpp"
#include "atransn/parallel.hpp"

namespace atransn {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Per-positive contribution: loss plus locally accumulated row grads.
struct Slot {
    double loss = 0.0;
    RowGradAccumulator ents{0};
    RowGradAccumulator rels{0};
    bool non_finite = false;
};

Slot score_one(const Triplet& pos, const NegativeGroup& negs, const EmbeddingTable& table,
               double gamma, Norm norm, double inv_batch) {
    Slot slot;
    slot.ents = RowGradAccumulator(table.dim);
    slot.rels = RowGradAccumulator(table.relations.cols);

    TripletGrad grad;
    const double f_pos = score_grad(table.kind, table.entities.row(pos.head),
                                    table.relations.row(pos.relation),
                                    table.entities.row(pos.tail), grad, norm);
    if (!std::isfinite(f_pos)) {
        slot.non_finite = true;
        return slot;
    }
    slot.loss += softplus(f_pos - gamma);
    const double c_pos = sigmoid(f_pos - gamma) * inv_batch;
    slot.ents.add_scaled(pos.head, c_pos, grad.d_head);
    slot.rels.add_scaled(pos.relation, c_pos, grad.d_relation);
    slot.ents.add_scaled(pos.tail, c_pos, grad.d_tail);

    const double inv_k = negs.empty() ? 0.0 : 1.0 / static_cast<double>(negs.size());
    double neg_sum = 0.0;
    for (const NegativeSample& neg : negs) {
        const int32_t h = neg.corrupt_head ? neg.entity : pos.head;
        const int32_t t = neg.corrupt_head ? pos.tail : neg.entity;
        const double f_neg = score_grad(table.kind, table.entities.row(h),
                                        table.relations.row(pos.relation),
                                        table.entities.row(t), grad, norm);
        if (!std::isfinite(f_neg)) {
            slot.non_finite = true;
            return slot;
        }
        neg_sum += softplus(gamma - f_neg);
        const double c_neg = -sigmoid(gamma - f_neg) * inv_k * inv_batch;
        slot.ents.add_scaled(h, c_neg, grad.d_head);
        slot.rels.add_scaled(pos.relation, c_neg, grad.d_relation);
        slot.ents.add_scaled(t, c_neg, grad.d_tail);
    }
    slot.loss += neg_sum * inv_k;
    return slot;
}

}  // namespace

EmbeddingTable init_embeddings(ModelKind kind, int32_t n_entities, int32_t n_relations, int n,
                               double gamma, double eps, RngStream& rng) {
    EmbeddingTable table(kind, n_entities, n_relations, n);
    const double bound = (gamma + eps) / static_cast<double>(n);
    for (double& v : table.entities.data) v = rng.uniform_range(-bound, bound);
    if (kind == ModelKind::RotatE) {
        for (double& v : table.relations.data) v = rng.uniform_range(-kPi, kPi);
    } else {
        for (double& v : table.relations.data) v = rng.uniform_range(-bound, bound);
    }
    return table;
}

NegativeGroup sample_negatives(const Triplet& positive, int k, int32_t n_entities,
                               RngStream& rng) {
    (void)positive;
    NegativeGroup group;
    group.reserve(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) {
        NegativeSample s;
        s.corrupt_head = rng.coin();
        s.entity = rng.uniform_index(n_entities);
        group.push_back(s);
    }
    return group;
}

EmbeddingLossResult embedding_loss(const std::vector<Triplet>& positives,
                                   const std::vector<NegativeGroup>& negatives,
                                   const EmbeddingTable& table, double gamma, Norm norm,
                                   bool parallel) {
    if (positives.empty()) throw UsageError("embedding_loss: empty batch");
    if (negatives.size() != positives.size()) {
        throw ShapeError("embedding_loss: negatives not grouped per positive");
    }
    const auto n = static_cast<int>(positives.size());
    const double inv_batch = 1.0 / static_cast<double>(n);
    std::vector<Slot> slots(positives.size());

    const int threads = parallel ? thread_count() : 1;
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<size_t>(i);
        slots[k] = score_one(positives[k], negatives[k], table, gamma, norm, inv_batch);
    }

    EmbeddingLossResult out;
    out.d_entities = RowGradAccumulator(table.dim);
    out.d_relations = RowGradAccumulator(table.relations.cols);
    for (int i = 0; i < n; ++i) {
        const Slot& slot = slots[static_cast<size_t>(i)];
        if (slot.non_finite) {
            throw TrainingError("embedding_loss: non-finite score for batch triplet " +
                                std::to_string(i));
        }
        out.loss += slot.loss;
        for (const auto& [row, g] : slot.ents.rows()) out.d_entities.add(row, g);
        for (const auto& [row, g] : slot.rels.rows()) out.d_relations.add(row, g);
    }
    out.loss *= inv_batch;
    return out;
}

EmbeddingLossResult embedding_loss_reference(const std::vector<Triplet>& positives,
                                             const std::vector<NegativeGroup>& negatives,
                                             const EmbeddingTable& table, double gamma,
                                             Norm norm) {
    if (positives.empty()) throw UsageError("embedding_loss: empty batch");
    if (negatives.size() != positives.size()) {
        throw ShapeError("embedding_loss: negatives not grouped per positive");
    }
    EmbeddingLossResult out;
    out.d_entities = RowGradAccumulator(table.dim);
    out.d_relations = RowGradAccumulator(table.relations.cols);
    const double inv_batch = 1.0 / static_cast<double>(positives.size());

    TripletGrad grad;
    for (size_t i = 0; i < positives.size(); ++i) {
        const Triplet& pos = positives[i];
        const double f_pos = score_grad(table.kind, table.entities.row(pos.head),
                                        table.relations.row(pos.relation),
                                        table.entities.row(pos.tail), grad, norm);
        if (!std::isfinite(f_pos)) {
            throw TrainingError("embedding_loss: non-finite score for batch triplet " +
                                std::to_string(i));
        }
        out.loss += inv_batch * softplus(f_pos - gamma);
        const double c_pos = sigmoid(f_pos - gamma) * inv_batch;
        out.d_entities.add_scaled(pos.head, c_pos, grad.d_head);
        out.d_relations.add_scaled(pos.relation, c_pos, grad.d_relation);
        out.d_entities.add_scaled(pos.tail, c_pos, grad.d_tail);

        const NegativeGroup& negs = negatives[i];
        const double inv_k = negs.empty() ? 0.0 : 1.0 / static_cast<double>(negs.size());
        for (const NegativeSample& neg : negs) {
            const int32_t h = neg.corrupt_head ? neg.entity : pos.head;
            const int32_t t = neg.corrupt_head ? pos.tail : neg.entity;
            const double f_neg = score_grad(table.kind, table.entities.row(h),
                                            table.relations.row(pos.relation),
                                            table.entities.row(t), grad, norm);
            if (!std::isfinite(f_neg)) {
                throw TrainingError("embedding_loss: non-finite score for batch triplet " +
                                    std::to_string(i));
            }
            out.loss += inv_batch * inv_k * softplus(gamma - f_neg);
            const double c_neg = -sigmoid(gamma - f_neg) * inv_k * inv_batch;
            out.d_entities.add_scaled(h, c_neg, grad.d_head);
            out.d_relations.add_scaled(pos.relation, c_neg, grad.d_relation);
            out.d_entities.add_scaled(t, c_neg, grad.d_tail);
        }
    }
    return out;
}

}  // namespace atransn
