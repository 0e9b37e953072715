#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "atransn/graph_data.hpp"
#include "atransn/nn.hpp"
#include "atransn/scoring.hpp"

namespace atransn {

// Two linear layers, hidden width max(m, n), mapping frozen teacher
// embeddings (dim m) into the target entity space (dim n). A LeakyReLU
// sits between the layers by default; two stacked pure-linear maps
// would collapse to one.
struct TransitionNetwork {
    DenseNet net;

    int in_dim() const { return net.input_dim(); }
    int out_dim() const { return net.output_dim(); }
};

TransitionNetwork make_transition_network(int m, int n, RngStream& rng,
                                          bool mid_activation = true,
                                          double slope = kLeakySlopeDefault);

Vec project_teacher(const TransitionNetwork& w, std::span<const double> e_teacher);
void project_teacher(const TransitionNetwork& w, std::span<const double> e_teacher,
                     ForwardCache& cache);

// 1 - cos(u, v), in [0, 2]. A vector with norm below 1e-12 yields the
// orthogonal-equivalent value 1 (and bumps *degenerate if given); the
// gradient there is 0.
double cosine_distance(std::span<const double> u, std::span<const double> v,
                       int* degenerate = nullptr);

// d(1 - cos(u, v)) wrt u and v; zero for degenerate inputs.
void cosine_distance_grad(std::span<const double> u, std::span<const double> v, Vec& du, Vec& dv);

// Batch of aligned pairs by row index: teacher_rows into the teacher
// matrix, target_rows into table.entities.
struct AlignedPairBatch {
    std::vector<int32_t> teacher_rows;
    std::vector<int32_t> target_rows;

    size_t size() const { return teacher_rows.size(); }
};

struct DistanceConstraintResult {
    double loss = 0.0;
    RowGradAccumulator d_entities{0};
    NetGrads d_w;
    int degenerate_pairs = 0;
};

// Weighted cosine-distance pull of target rows toward projected
// teacher rows, averaged over the batch:
//   loss = mean_i weight_i * (1 - cos(W(e_teacher_i), e_target_i))
// Gradients reach target entity rows and W only; teacher rows are
// frozen. Weights are constants (no gradient into their producer).
DistanceConstraintResult distance_constraint(const TransitionNetwork& w,
                                             const Matrix& teacher_entities,
                                             const AlignedPairBatch& batch,
                                             const EmbeddingTable& table,
                                             std::span<const double> weights);

// Per-pair consistency weight for the aligned pair (teacher, target),
// in [0, 1]. Constant 1 reproduces the unweighted constraints.
using WeightFn = std::function<double(int32_t teacher_row, int32_t target_row)>;

struct TripletConstraintResult {
    double loss = 0.0;
    int n_transferred = 0;
    RowGradAccumulator d_entities{0};
    RowGradAccumulator d_relations{0};
    NetGrads d_w;
};

// Transferred-triplet margin terms: every batch triplet spawns one
// triplet per aligned teacher entity of its head (projection replaces
// the head) and of its tail. loss = mean over transferred triplets of
//   weight * softplus(f(transferred) - gamma)
// i.e. -log sigmoid(gamma - f). Gradients reach the surviving entity
// row, the relation row, and W. `cap` > 0 subsamples at most cap
// expansions per batch triplet (uniform, drawn from `rng`); cap 0 keeps
// them all. An empty expansion set is a valid zero result.
TripletConstraintResult triplet_constraint(const std::vector<Triplet>& batch,
                                           const AlignmentSet& alignment,
                                           const EmbeddingTable& table,
                                           const TransitionNetwork& w,
                                           const Matrix& teacher_entities, double gamma,
                                           Norm norm, const WeightFn& weight, int cap = 0,
                                           RngStream* rng = nullptr);

}  // namespace atransn
