#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atransn/adversarial.hpp"
#include "atransn/embedding_train.hpp"
#include "atransn/eval.hpp"
#include "atransn/graph_data.hpp"
#include "atransn/nn.hpp"
#include "atransn/scoring.hpp"
#include "atransn/transfer.hpp"

namespace atransn {

enum class Mode { Plain, CTransE, ATransN, Joint };

Mode mode_from_string(const std::string& name);
std::string to_string(Mode mode);

struct TrainingConfig {
    ModelKind kind = ModelKind::TransE;
    Mode mode = Mode::Plain;
    Norm norm = Norm::L1;  // L2 is the conventional default for RotatE
    int dim = 200;
    double gamma = 8.0;
    double alpha = 0.5;  // distance-constraint max weight
    double beta = 0.5;   // triplet-constraint max weight
    double lr_e = 1e-3;
    double lr_a = 2e-4;
    int k = 128;    // negatives per positive
    int n_l = 0;    // embedding batch; 0: sized for ~100 steps/epoch
    int n_a = 128;  // aligned-pair batch
    int64_t t_l = 0;  // outer steps; 0: epochs_max * steps-per-epoch
    int t_g = 5;
    int t_d = 5;
    double warmup_fraction = 0.01;
    int anneal_cycles = 4;
    double lambda_g = 1.0;  // generator cosine-anchor weight
    uint64_t seed = 1;
    int epochs_max = 300;
    int eval_every = 0;  // outer steps between validation evals; 0: per epoch
    double init_eps = 2.0;
    int transfer_cap = 0;  // per-positive transferred-triplet cap; 0: off
    bool constant_weights = false;  // force consistency weights to 1
    bool w_mid_activation = true;   // LeakyReLU between W's linear layers
    double leaky_slope = kLeakySlopeDefault;
    TiePolicy tie_policy = TiePolicy::Optimistic;
    bool full_c_distance = false;  // distance constraint over all of C, not N_a samples
    bool parallel = true;

    void validate() const;
};

// Per-outer-step training record. wall_ms is the only
// non-reproducible field; log comparisons drop it.
struct StepLog {
    int64_t step = 0;
    int epoch = 0;
    double loss_e = 0.0;
    double loss_d = 0.0;
    double loss_g = 0.0;
    double alpha_t = 0.0;
    double beta_t = 0.0;
    double lr_t = 0.0;
    double mean_consistency_weight = 0.0;
    double wall_ms = 0.0;
};

struct TeacherInput {
    TeacherEmbeddings embeddings;
    AlignmentSet alignment;  // (teacher row, target entity id) pairs
};

// Joint-mode source: teacher triplets merged into the target graph via
// the alignment id map. Relations stay disjoint.
struct JointSource {
    KnowledgeGraph teacher_graph;
    AlignmentSet alignment;  // (teacher entity id, target entity id)
    std::string label_prefix = "teacher0:";
};

// Frozen teacher plus its trainable adapters. W is deliberately
// referenced by two optimizer states: the discriminator phase and the
// embedding phase each keep their own Adam moments for it.
struct TeacherContext {
    TeacherEmbeddings embeddings;
    AlignmentSet alignment;
    TransitionNetwork w;
    Generator g;
    Discriminator d;
    NetAdam opt_w_emb;
    NetAdam opt_w_adv;
    NetAdam opt_d;
    NetAdam opt_g;
    RngStream rng_pairs{0};
    RngStream rng_noise{0};
    RngStream rng_cap{0};
    bool adversarial = false;  // G and D exist and train
};

struct TrainResult {
    EmbeddingTable table;  // best-validation snapshot
    Vocab entities;        // row labels (merged vocabulary in joint mode)
    Vocab relations;
    RankingMetrics best_valid;
    double best_selection = 0.0;
    int64_t best_step = 0;
    int32_t eval_candidate_limit = 0;  // joint: original target entity count
    std::vector<StepLog> log;
};

// Runs the interleaved discriminator / generator / embedding loop.
// Phases and single steps are public so tests can assert parameter
// isolation between them.
class Trainer {
public:
    Trainer(TrainingConfig cfg, KnowledgeGraph graph, SplitDataset splits,
            std::vector<TeacherInput> teachers = {},
            std::optional<JointSource> joint = std::nullopt);

    TrainResult train();

    // Stepwise control.
    void prepare();
    bool step_once();  // one outer step; false once all steps are done
    void eval_now();

    const TrainingConfig& config() const { return cfg_; }
    const EmbeddingTable& table() const { return table_; }
    const std::vector<TeacherContext>& teacher_contexts() const { return teachers_; }
    std::vector<TeacherContext>& teacher_contexts() { return teachers_; }
    int64_t global_step() const { return step_; }
    int64_t total_steps() const { return total_steps_; }
    const std::vector<StepLog>& log() const { return log_; }
    const Vocab& entity_vocab() const { return graph_.entities; }
    const Vocab& relation_vocab() const { return graph_.relations; }
    int32_t eval_candidate_limit() const { return candidate_limit_; }
    const SplitDataset& splits() const { return splits_; }

    // One inner adversarial step; returns the phase loss.
    double discriminator_phase(TeacherContext& tc, double lr);
    double generator_phase(TeacherContext& tc, double lr);

    // One embedding-module step on the given batch: margin loss plus
    // weighted transfer constraints, then sparse Adam and projection.
    double embedding_step(const std::vector<Triplet>& batch, double alpha_t, double beta_t,
                          double lr, double& mean_weight);

private:
    AlignedPairBatch sample_pairs_(TeacherContext& tc, int count);
    double pair_weight_(const TeacherContext& tc, int32_t teacher_row, int32_t target_row) const;
    void merge_joint_(const JointSource& joint);
    void snapshot_if_best_(const RankingMetrics& metrics);

    TrainingConfig cfg_;
    KnowledgeGraph graph_;
    SplitDataset splits_;
    std::vector<TeacherInput> teacher_inputs_;
    std::vector<TeacherContext> teachers_;
    bool constraints_enabled_ = false;

    EmbeddingTable table_;
    FilterIndex filter_;
    SparseRowAdam opt_entities_;
    SparseRowAdam opt_relations_;
    int64_t emb_step_count_ = 0;

    RngStream rng_init_{0};
    RngStream rng_shuffle_{0};
    RngStream rng_negatives_{0};

    int64_t step_ = 0;
    int64_t total_steps_ = 0;
    int steps_per_epoch_ = 0;
    int batch_size_ = 0;
    int epoch_ = 0;
    std::vector<size_t> epoch_order_;
    int32_t candidate_limit_ = 0;
    bool prepared_ = false;
    int64_t last_eval_step_ = -1;

    EmbeddingTable best_table_;
    RankingMetrics best_valid_;
    double best_selection_ = -1.0;
    int64_t best_step_ = -1;

    std::vector<StepLog> log_;
};

}  // namespace atransn
