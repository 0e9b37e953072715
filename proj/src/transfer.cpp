#include "atransn/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "atransn/mathfn.hpp"

namespace atransn {
namespace {

constexpr double kDegenerateNorm = 1e-12;

}  // namespace

TransitionNetwork make_transition_network(int m, int n, RngStream& rng, bool mid_activation,
                                          double slope) {
    const int hidden = std::max(m, n);
    TransitionNetwork w;
    w.net.layers.push_back(make_layer(hidden, m,
                                      mid_activation ? Activation::LeakyRelu : Activation::None,
                                      false, rng, InitScheme::Orthogonal, slope));
    w.net.layers.push_back(
        make_layer(n, hidden, Activation::None, false, rng, InitScheme::Orthogonal, slope));
    return w;
}

Vec project_teacher(const TransitionNetwork& w, std::span<const double> e_teacher) {
    ForwardCache cache;
    forward(w.net, e_teacher, cache);
    return std::move(cache.y);
}

void project_teacher(const TransitionNetwork& w, std::span<const double> e_teacher,
                     ForwardCache& cache) {
    forward(w.net, e_teacher, cache);
}

double cosine_distance(std::span<const double> u, std::span<const double> v, int* degenerate) {
    check_dim(v.size(), u.size(), "cosine_distance");
    const double nu = norm2(u);
    const double nv = norm2(v);
    if (nu < kDegenerateNorm || nv < kDegenerateNorm) {
        if (degenerate != nullptr) ++*degenerate;
        return 1.0;
    }
    return 1.0 - dot(u, v) / (nu * nv);
}

void cosine_distance_grad(std::span<const double> u, std::span<const double> v, Vec& du, Vec& dv) {
    check_dim(v.size(), u.size(), "cosine_distance");
    du.assign(u.size(), 0.0);
    dv.assign(v.size(), 0.0);
    const double nu = norm2(u);
    const double nv = norm2(v);
    if (nu < kDegenerateNorm || nv < kDegenerateNorm) return;
    const double d = dot(u, v);
    const double inv_uv = 1.0 / (nu * nv);
    // d(1 - u.v/(|u||v|))/du = (u.v) u / (|u|^3 |v|) - v / (|u||v|)
    const double cu = d * inv_uv / (nu * nu);
    const double cv = d * inv_uv / (nv * nv);
    for (size_t i = 0; i < u.size(); ++i) {
        du[i] = cu * u[i] - inv_uv * v[i];
        dv[i] = cv * v[i] - inv_uv * u[i];
    }
}

DistanceConstraintResult distance_constraint(const TransitionNetwork& w,
                                             const Matrix& teacher_entities,
                                             const AlignedPairBatch& batch,
                                             const EmbeddingTable& table,
                                             std::span<const double> weights) {
    if (batch.teacher_rows.size() != batch.target_rows.size()) {
        throw ShapeError("aligned pair batch: row lists differ in length");
    }
    check_dim(weights.size(), batch.size(), "pair weights");

    DistanceConstraintResult out;
    out.d_entities = RowGradAccumulator(table.dim);
    out.d_w = make_grads_like(w.net);
    if (batch.size() == 0) return out;

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    ForwardCache cache;
    Vec du, dv, dx;
    for (size_t i = 0; i < batch.size(); ++i) {
        const int32_t teacher_row = batch.teacher_rows[i];
        const int32_t target_row = batch.target_rows[i];
        const double weight = weights[i];
        project_teacher(w, teacher_entities.row(teacher_row), cache);
        const auto target = table.entities.row(target_row);

        out.loss += weight * inv_batch * cosine_distance(cache.y, target, &out.degenerate_pairs);
        if (weight == 0.0) continue;

        cosine_distance_grad(cache.y, target, du, dv);
        const double c = weight * inv_batch;
        out.d_entities.add_scaled(target_row, c, dv);
        scale(du, c);
        backward(w.net, cache, du, out.d_w, dx);
    }
    return out;
}

TripletConstraintResult triplet_constraint(const std::vector<Triplet>& batch,
                                           const AlignmentSet& alignment,
                                           const EmbeddingTable& table,
                                           const TransitionNetwork& w,
                                           const Matrix& teacher_entities, double gamma,
                                           Norm norm, const WeightFn& weight, int cap,
                                           RngStream* rng) {
    TripletConstraintResult out;
    out.d_entities = RowGradAccumulator(table.dim);
    out.d_relations = RowGradAccumulator(table.relations.cols);
    out.d_w = make_grads_like(w.net);

    // (triplet, teacher row, head side) per transferred triplet, in
    // deterministic batch order.
    struct Expansion {
        const Triplet* pos;
        int32_t teacher_row;
        int32_t target_row;  // the replaced entity (weight lookup key)
        bool head_side;
    };
    std::vector<Expansion> expansions;
    std::vector<Expansion> local;
    for (const Triplet& pos : batch) {
        local.clear();
        for (const bool head_side : {true, false}) {
            const int32_t replaced = head_side ? pos.head : pos.tail;
            auto it = alignment.by_target.find(replaced);
            if (it == alignment.by_target.end()) continue;
            for (int32_t teacher_row : it->second) {
                local.push_back(Expansion{&pos, teacher_row, replaced, head_side});
            }
        }
        if (cap > 0 && static_cast<int>(local.size()) > cap) {
            if (rng == nullptr) throw UsageError("triplet_constraint: cap needs an rng");
            // Partial Fisher-Yates: the first `cap` slots become a
            // uniform subsample, order preserved by index sort.
            std::vector<size_t> idx(local.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            for (int i = 0; i < cap; ++i) {
                const size_t j = static_cast<size_t>(i) +
                                 rng->uniform_below(idx.size() - static_cast<size_t>(i));
                std::swap(idx[static_cast<size_t>(i)], idx[j]);
            }
            idx.resize(static_cast<size_t>(cap));
            std::sort(idx.begin(), idx.end());
            std::vector<Expansion> kept;
            kept.reserve(idx.size());
            for (size_t i : idx) kept.push_back(local[i]);
            local = std::move(kept);
        }
        expansions.insert(expansions.end(), local.begin(), local.end());
    }

    out.n_transferred = static_cast<int>(expansions.size());
    if (expansions.empty()) return out;

    const double inv_count = 1.0 / static_cast<double>(expansions.size());
    ForwardCache cache;
    TripletGrad grad;
    Vec d_proj, dx;
    for (const Expansion& e : expansions) {
        const double wgt = weight(e.teacher_row, e.target_row);
        project_teacher(w, teacher_entities.row(e.teacher_row), cache);
        const Triplet& pos = *e.pos;

        std::span<const double> h =
            e.head_side ? std::span<const double>(cache.y) : table.entities.row(pos.head);
        std::span<const double> t =
            e.head_side ? table.entities.row(pos.tail) : std::span<const double>(cache.y);
        const double f =
            score_grad(table.kind, h, table.relations.row(pos.relation), t, grad, norm);
        out.loss += wgt * inv_count * softplus(f - gamma);
        if (wgt == 0.0) continue;

        const double c = wgt * inv_count * sigmoid(f - gamma);
        out.d_relations.add_scaled(pos.relation, c, grad.d_relation);
        if (e.head_side) {
            out.d_entities.add_scaled(pos.tail, c, grad.d_tail);
            d_proj = std::move(grad.d_head);
        } else {
            out.d_entities.add_scaled(pos.head, c, grad.d_head);
            d_proj = std::move(grad.d_tail);
        }
        scale(d_proj, c);
        backward(w.net, cache, d_proj, out.d_w, dx);
    }
    return out;
}

}  // namespace atransn
