#pragma once

#include <span>
#include <string>

#include "atransn/errors.hpp"
#include "atransn/matrix.hpp"

namespace atransn {

enum class ModelKind { TransE, DistMult, ComplEx, RotatE };

// Distance norm for the translational/rotational scores. For RotatE it
// is taken over the complex moduli per coordinate.
enum class Norm { L1, L2 };

ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

// ComplEx and RotatE store a length-2d vector as d real parts followed
// by d imaginary parts. RotatE relations store d phase angles.
inline int relation_dim(ModelKind kind, int entity_dim) {
    if (kind == ModelKind::RotatE) {
        if (entity_dim % 2 != 0) throw ShapeError("RotatE entity dim must be even");
        return entity_dim / 2;
    }
    return entity_dim;
}

struct EmbeddingTable {
    Matrix entities;   // |E| x dim
    Matrix relations;  // |R| x relation_dim(kind, dim)
    ModelKind kind = ModelKind::TransE;
    int dim = 0;

    EmbeddingTable() = default;
    EmbeddingTable(ModelKind k, int n_entities, int n_relations, int n)
        : entities(n_entities, n), relations(n_relations, relation_dim(k, n)), kind(k), dim(n) {}
};

struct TripletGrad {
    Vec d_head;
    Vec d_relation;
    Vec d_tail;
};

// Triplet plausibility, lower is better. The bilinear scores are stored
// negated so one ranking code path covers every kind.
double score(ModelKind kind, std::span<const double> h, std::span<const double> r,
             std::span<const double> t, Norm norm = Norm::L1);

// Score plus analytic partials. Non-differentiable points (L1 kinks,
// zero distances) get subgradient 0.
double score_grad(ModelKind kind, std::span<const double> h, std::span<const double> r,
                  std::span<const double> t, TripletGrad& grad, Norm norm = Norm::L1);

// Model-specific constraints: TransE entity rows rescaled to unit L2
// norm (zero rows left untouched and counted), RotatE relation phases
// wrapped into [-pi, pi), DistMult/ComplEx untouched. Returns the
// number of zero entity rows skipped.
int project_constraints(EmbeddingTable& table);

// Same constraints restricted to the given rows; used after sparse
// optimizer steps so only touched rows pay the projection.
int project_entity_rows(EmbeddingTable& table, std::span<const int32_t> rows);
void project_relation_rows(EmbeddingTable& table, std::span<const int32_t> rows);

}  // namespace atransn
