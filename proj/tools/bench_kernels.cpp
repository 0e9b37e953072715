// Timing comparison between the serial and OpenMP routes of the two hot
// kernels (embedding_loss and rank_all), plus a bit-identity check of
// their outputs. Not a ctest; run by hand when touching the kernels.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "atransn/embedding_train.hpp"
#include "atransn/eval.hpp"
#include "atransn/parallel.hpp"
#include "atransn/synth.hpp"

using namespace atransn;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    SynthConfig cfg;
    cfg.n_entities = 2000;
    cfg.n_relations = 16;
    cfg.n_triplets = 20000;
    if (argc > 1) cfg.n_entities = std::stoi(argv[1]);
    if (argc > 2) cfg.n_triplets = std::stoi(argv[2]);
    const int dim = argc > 3 ? std::stoi(argv[3]) : 100;
    const int reps = 3;

    const SynthWorld world = make_synth_world(cfg);
    RngStream rng(13);
    RngStream init = rng.fork("init");
    EmbeddingTable table = init_embeddings(ModelKind::TransE, world.world.entities.size(),
                                           world.world.relations.size(), dim, 8.0, 2.0, init);

    const std::vector<Triplet>& batch = world.teacher.train;
    RngStream neg_rng = rng.fork("negs");
    std::vector<NegativeGroup> negatives;
    negatives.reserve(batch.size());
    for (const Triplet& t : batch) {
        negatives.push_back(sample_negatives(t, 16, world.world.entities.size(), neg_rng));
    }

    std::printf("threads available: %d\n", thread_count());
    std::printf("embedding_loss: %zu positives x 16 negatives, dim %d\n", batch.size(), dim);

    EmbeddingLossResult reference_res, serial_res, parallel_res;
    const double t_reference = time_best_of(reps, [&] {
        reference_res = embedding_loss_reference(batch, negatives, table, 8.0, Norm::L1);
    });
    const double t_serial = time_best_of(
        reps, [&] { serial_res = embedding_loss(batch, negatives, table, 8.0, Norm::L1, false); });
    const double t_parallel = time_best_of(
        reps, [&] { parallel_res = embedding_loss(batch, negatives, table, 8.0, Norm::L1, true); });
    std::printf("  reference %9.2f ms   (loss delta vs kernel: %.3g)\n", t_reference,
                reference_res.loss - serial_res.loss);
    bool identical = serial_res.loss == parallel_res.loss;
    const auto& sr = serial_res.d_entities.rows();
    const auto& pr = parallel_res.d_entities.rows();
    identical = identical && sr.size() == pr.size();
    for (size_t i = 0; identical && i < sr.size(); ++i) {
        identical = sr[i].first == pr[i].first && sr[i].second == pr[i].second;
    }
    std::printf("  serial   %10.2f ms\n", t_serial);
    std::printf("  parallel %10.2f ms   speedup %.2fx   bit-identical: %s\n", t_parallel,
                t_serial / t_parallel, identical ? "yes" : "NO");

    const std::vector<Triplet> queries(world.teacher.test.begin(),
                                       world.teacher.test.begin() +
                                           std::min<size_t>(200, world.teacher.test.size()));
    const FilterIndex filter = build_filter_index(world.teacher);
    std::printf("rank_all: %zu queries over %d candidates\n", queries.size(),
                world.world.entities.size());

    std::vector<RankPair> serial_ranks, parallel_ranks;
    const double r_serial = time_best_of(reps, [&] {
        serial_ranks = rank_all(queries, table, filter, Norm::L1, TiePolicy::Optimistic, 0, false);
    });
    const double r_parallel = time_best_of(reps, [&] {
        parallel_ranks = rank_all(queries, table, filter, Norm::L1, TiePolicy::Optimistic, 0, true);
    });
    bool ranks_identical = serial_ranks.size() == parallel_ranks.size();
    for (size_t i = 0; ranks_identical && i < serial_ranks.size(); ++i) {
        ranks_identical = serial_ranks[i].head_rank == parallel_ranks[i].head_rank &&
                          serial_ranks[i].tail_rank == parallel_ranks[i].tail_rank;
    }
    std::printf("  serial   %10.2f ms\n", r_serial);
    std::printf("  parallel %10.2f ms   speedup %.2fx   bit-identical: %s\n", r_parallel,
                r_serial / r_parallel, ranks_identical ? "yes" : "NO");
    return identical && ranks_identical ? 0 : 1;
}
