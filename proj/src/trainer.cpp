#include "atransn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "atransn/schedule.hpp"

namespace atransn {

Mode mode_from_string(const std::string& name) {
    if (name == "plain") return Mode::Plain;
    if (name == "ctranse") return Mode::CTransE;
    if (name == "atransn") return Mode::ATransN;
    if (name == "joint") return Mode::Joint;
    throw ConfigError("unknown mode '" + name + "'");
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::Plain: return "plain";
        case Mode::CTransE: return "ctranse";
        case Mode::ATransN: return "atransn";
        case Mode::Joint: return "joint";
    }
    return "?";
}

void TrainingConfig::validate() const {
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("alpha and beta must be >= 0");
    if (!(lr_e > 0.0) || !(lr_a > 0.0)) throw ConfigError("learning rates must be > 0");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (n_l < 0 || n_a < 1) throw ConfigError("batch sizes must be >= 1 (n_l 0 = auto)");
    if (t_l < 0 || t_g < 0 || t_d < 0) throw ConfigError("step counts must be >= 0");
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
        throw ConfigError("warmup_fraction outside [0, 1)");
    }
    if (anneal_cycles < 1) throw ConfigError("anneal_cycles must be >= 1");
    if (lambda_g < 0.0) throw ConfigError("lambda_g must be >= 0");
    if (epochs_max < 1) throw ConfigError("epochs_max must be >= 1");
    if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
    if (init_eps < 0.0) throw ConfigError("init_eps must be >= 0");
    if (transfer_cap < 0) throw ConfigError("transfer_cap must be >= 0");
}

Trainer::Trainer(TrainingConfig cfg, KnowledgeGraph graph, SplitDataset splits,
                 std::vector<TeacherInput> teachers, std::optional<JointSource> joint)
    : cfg_(std::move(cfg)),
      graph_(std::move(graph)),
      splits_(std::move(splits)),
      teacher_inputs_(std::move(teachers)) {
    cfg_.validate();
    // Filter from the as-given splits: in joint mode the merged teacher
    // triplets train the model but do not change the ranking protocol,
    // keeping evaluation comparable across modes (and reproducible from
    // the target split files alone).
    filter_ = build_filter_index(splits_);
    if (cfg_.mode == Mode::Joint) {
        if (!joint.has_value()) throw ConfigError("joint mode needs teacher triplets and alignment");
        if (!teacher_inputs_.empty()) {
            throw ConfigError("joint mode merges triplets; teacher embeddings are not used");
        }
        merge_joint_(*joint);
    } else if (joint.has_value()) {
        throw ConfigError("teacher triplets are only consumed in joint mode");
    }
}

void Trainer::merge_joint_(const JointSource& joint) {
    candidate_limit_ = graph_.entities.size();
    if (joint.alignment.pairs.empty()) throw AlignmentError("joint mode: empty alignment");

    // Teacher entity id -> merged id. Aligned ids collapse onto their
    // target entity (first listed pair wins); the rest get fresh rows.
    std::vector<int32_t> ent_map(static_cast<size_t>(joint.teacher_graph.entities.size()), -1);
    for (const auto& [teacher_id, target_id] : joint.alignment.pairs) {
        if (teacher_id < 0 || teacher_id >= joint.teacher_graph.entities.size() || target_id < 0 ||
            target_id >= candidate_limit_) {
            throw AlignmentError("joint mode: alignment pair outside either vocabulary");
        }
        auto& slot = ent_map[static_cast<size_t>(teacher_id)];
        if (slot == -1) slot = target_id;
    }
    for (int32_t e = 0; e < joint.teacher_graph.entities.size(); ++e) {
        auto& slot = ent_map[static_cast<size_t>(e)];
        if (slot != -1) continue;
        const int32_t before = graph_.entities.size();
        slot = graph_.entities.add(joint.label_prefix + joint.teacher_graph.entities.label(e));
        if (graph_.entities.size() == before) {
            throw ConfigError("joint mode: entity label collision under prefix '" +
                              joint.label_prefix + "'");
        }
    }

    // Relations stay disjoint: every teacher relation gets a fresh id.
    std::vector<int32_t> rel_map(static_cast<size_t>(joint.teacher_graph.relations.size()));
    for (int32_t r = 0; r < joint.teacher_graph.relations.size(); ++r) {
        const int32_t before = graph_.relations.size();
        rel_map[static_cast<size_t>(r)] =
            graph_.relations.add(joint.label_prefix + joint.teacher_graph.relations.label(r));
        if (graph_.relations.size() == before) {
            throw ConfigError("joint mode: relation label collision under prefix '" +
                              joint.label_prefix + "'");
        }
    }

    std::unordered_set<Triplet, TripletHash> seen(splits_.train.begin(), splits_.train.end());
    for (const Triplet& t : joint.teacher_graph.triplets) {
        Triplet mapped{ent_map[static_cast<size_t>(t.head)], rel_map[static_cast<size_t>(t.relation)],
                       ent_map[static_cast<size_t>(t.tail)]};
        if (seen.insert(mapped).second) splits_.train.push_back(mapped);
    }
}

void Trainer::prepare() {
    if (prepared_) return;
    if (splits_.train.empty()) throw UsageError("no training triplets");

    RngStream master(cfg_.seed);
    rng_init_ = master.fork("init/table");
    rng_shuffle_ = master.fork("train/shuffle");
    rng_negatives_ = master.fork("train/negatives");

    if (candidate_limit_ == 0) candidate_limit_ = graph_.entities.size();  // joint sets it earlier
    table_ = init_embeddings(cfg_.kind, graph_.entities.size(), graph_.relations.size(), cfg_.dim,
                             cfg_.gamma, cfg_.init_eps, rng_init_);
    opt_entities_ = make_sparse_adam(table_.entities);
    opt_relations_ = make_sparse_adam(table_.relations);

    constraints_enabled_ =
        (cfg_.mode == Mode::CTransE || cfg_.mode == Mode::ATransN) && !teacher_inputs_.empty();
    if (constraints_enabled_) {
        teachers_.reserve(teacher_inputs_.size());
        for (size_t i = 0; i < teacher_inputs_.size(); ++i) {
            TeacherInput& input = teacher_inputs_[i];
            const std::string tag = "teacher" + std::to_string(i);
            if (input.alignment.pairs.empty()) {
                throw AlignmentError(tag + ": empty alignment set");
            }
            for (const auto& [teacher_row, target_id] : input.alignment.pairs) {
                if (teacher_row < 0 || teacher_row >= input.embeddings.matrix.rows ||
                    target_id < 0 || target_id >= graph_.entities.size()) {
                    throw AlignmentError(tag + ": alignment pair outside either vocabulary");
                }
            }
            TeacherContext tc;
            tc.embeddings = std::move(input.embeddings);
            tc.alignment = std::move(input.alignment);
            RngStream w_rng = master.fork(tag + "/w_init");
            tc.w = make_transition_network(tc.embeddings.dim, cfg_.dim, w_rng,
                                           cfg_.w_mid_activation, cfg_.leaky_slope);
            tc.opt_w_emb = make_net_adam(tc.w.net);
            tc.adversarial = cfg_.mode == Mode::ATransN;
            if (tc.adversarial) {
                RngStream g_rng = master.fork(tag + "/g_init");
                RngStream d_rng = master.fork(tag + "/d_init");
                tc.g = make_generator(cfg_.dim, g_rng, cfg_.leaky_slope);
                tc.d = make_discriminator(cfg_.dim, d_rng, cfg_.leaky_slope);
                tc.opt_g = make_net_adam(tc.g.net);
                tc.opt_d = make_net_adam(tc.d.net);
                tc.opt_w_adv = make_net_adam(tc.w.net);
            }
            tc.rng_pairs = master.fork(tag + "/pairs");
            tc.rng_noise = master.fork(tag + "/noise");
            tc.rng_cap = master.fork(tag + "/cap");
            teachers_.push_back(std::move(tc));
        }
        teacher_inputs_.clear();
    }

    const auto n_train = static_cast<int64_t>(splits_.train.size());
    const int64_t n_l = cfg_.n_l > 0 ? cfg_.n_l : std::max<int64_t>(1, (n_train + 99) / 100);
    batch_size_ = static_cast<int>(n_l);
    steps_per_epoch_ = static_cast<int>((n_train + n_l - 1) / n_l);
    total_steps_ = cfg_.t_l > 0 ? cfg_.t_l
                                : static_cast<int64_t>(cfg_.epochs_max) * steps_per_epoch_;
    prepared_ = true;
}

AlignedPairBatch Trainer::sample_pairs_(TeacherContext& tc, int count) {
    AlignedPairBatch batch;
    batch.teacher_rows.reserve(static_cast<size_t>(count));
    batch.target_rows.reserve(static_cast<size_t>(count));
    const auto n = static_cast<uint64_t>(tc.alignment.pairs.size());
    for (int i = 0; i < count; ++i) {
        const auto& pair = tc.alignment.pairs[tc.rng_pairs.uniform_below(n)];
        batch.teacher_rows.push_back(pair.first);
        batch.target_rows.push_back(pair.second);
    }
    return batch;
}

double Trainer::pair_weight_(const TeacherContext& tc, int32_t teacher_row,
                             int32_t target_row) const {
    if (!tc.adversarial || cfg_.constant_weights) return 1.0;
    const Vec proj = project_teacher(tc.w, tc.embeddings.matrix.row(teacher_row));
    return discriminate(tc.d, table_.entities.row(target_row), proj);
}

double Trainer::discriminator_phase(TeacherContext& tc, double lr) {
    const AlignedPairBatch pairs = sample_pairs_(tc, cfg_.n_a);
    std::vector<FakePair> fakes;
    fakes.reserve(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto e = table_.entities.row(pairs.target_rows[i]);
        const Vec z = sample_noise(cfg_.dim, tc.rng_noise);
        FakePair fake;
        fake.condition.assign(e.begin(), e.end());
        fake.candidate = generate(tc.g, fake.condition, z);
        fakes.push_back(std::move(fake));
    }
    const DiscriminatorLossResult res =
        discriminator_loss(tc.d, tc.w, tc.embeddings.matrix, table_.entities, pairs, fakes);
    adam_step(tc.d.net, res.d_disc, tc.opt_d, lr);
    adam_step(tc.w.net, res.d_w, tc.opt_w_adv, lr);
    return res.loss;
}

double Trainer::generator_phase(TeacherContext& tc, double lr) {
    const AlignedPairBatch pairs = sample_pairs_(tc, cfg_.n_a);
    std::vector<Vec> conditions, noises;
    conditions.reserve(pairs.size());
    noises.reserve(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        const auto e = table_.entities.row(pairs.target_rows[i]);
        conditions.emplace_back(e.begin(), e.end());
        noises.push_back(sample_noise(cfg_.dim, tc.rng_noise));
    }
    const GeneratorLossResult res =
        generator_loss(tc.g, tc.d, conditions, noises, cfg_.lambda_g);
    adam_step(tc.g.net, res.d_gen, tc.opt_g, lr);
    return res.loss;
}

double Trainer::embedding_step(const std::vector<Triplet>& batch, double alpha_t, double beta_t,
                               double lr, double& mean_weight) {
    std::vector<NegativeGroup> negatives;
    negatives.reserve(batch.size());
    for (const Triplet& t : batch) {
        negatives.push_back(sample_negatives(t, cfg_.k, graph_.entities.size(), rng_negatives_));
    }

    EmbeddingLossResult acc;
    try {
        acc = embedding_loss(batch, negatives, table_, cfg_.gamma, cfg_.norm, cfg_.parallel);
    } catch (const TrainingError& e) {
        throw TrainingError("step " + std::to_string(step_) + ": " + e.what());
    }
    double total_loss = acc.loss;

    double weight_sum = 0.0;
    int64_t weight_count = 0;
    struct TeacherWGrad {
        size_t teacher;
        NetGrads grads;
    };
    std::vector<TeacherWGrad> w_updates;

    if (constraints_enabled_ && (alpha_t > 0.0 || beta_t > 0.0)) {
        for (size_t ti = 0; ti < teachers_.size(); ++ti) {
            TeacherContext& tc = teachers_[ti];
            NetGrads wg = make_grads_like(tc.w.net);
            bool w_touched = false;

            if (alpha_t > 0.0) {
                AlignedPairBatch pairs;
                if (cfg_.full_c_distance) {
                    for (const auto& [teacher_row, target_row] : tc.alignment.pairs) {
                        pairs.teacher_rows.push_back(teacher_row);
                        pairs.target_rows.push_back(target_row);
                    }
                } else {
                    pairs = sample_pairs_(tc, cfg_.n_a);
                }
                Vec weights(pairs.size(), 1.0);
                if (tc.adversarial && !cfg_.constant_weights) {
                    weights = consistency_weights(tc.d, tc.w, tc.embeddings.matrix,
                                                  table_.entities, pairs);
                }
                for (const double w : weights) weight_sum += w;
                weight_count += static_cast<int64_t>(weights.size());

                DistanceConstraintResult fd = distance_constraint(
                    tc.w, tc.embeddings.matrix, pairs, table_, weights);
                total_loss += alpha_t * fd.loss;
                for (const auto& [row, g] : fd.d_entities.rows()) {
                    acc.d_entities.add_scaled(row, alpha_t, g);
                }
                fd.d_w.scale_all(alpha_t);
                wg.add(fd.d_w);
                w_touched = true;
            }

            if (beta_t > 0.0) {
                std::unordered_map<uint64_t, double> weight_cache;
                const WeightFn weight_fn = [&](int32_t teacher_row, int32_t target_row) {
                    const uint64_t key =
                        (static_cast<uint64_t>(static_cast<uint32_t>(teacher_row)) << 32) |
                        static_cast<uint32_t>(target_row);
                    auto it = weight_cache.find(key);
                    const double w = it != weight_cache.end()
                                         ? it->second
                                         : (weight_cache[key] =
                                                pair_weight_(tc, teacher_row, target_row));
                    weight_sum += w;
                    ++weight_count;
                    return w;
                };
                TripletConstraintResult fn = triplet_constraint(
                    batch, tc.alignment, table_, tc.w, tc.embeddings.matrix, cfg_.gamma,
                    cfg_.norm, weight_fn, cfg_.transfer_cap, &tc.rng_cap);
                total_loss += beta_t * fn.loss;
                for (const auto& [row, g] : fn.d_entities.rows()) {
                    acc.d_entities.add_scaled(row, beta_t, g);
                }
                for (const auto& [row, g] : fn.d_relations.rows()) {
                    acc.d_relations.add_scaled(row, beta_t, g);
                }
                if (fn.n_transferred > 0) {
                    fn.d_w.scale_all(beta_t);
                    wg.add(fn.d_w);
                    w_touched = true;
                }
            }

            if (w_touched) w_updates.push_back({ti, std::move(wg)});
        }
    }
    mean_weight = weight_count > 0 ? weight_sum / static_cast<double>(weight_count) : 0.0;

    if (!std::isfinite(total_loss)) {
        throw TrainingError("step " + std::to_string(step_) + ": non-finite loss");
    }

    ++emb_step_count_;
    sparse_adam_step(table_.entities, acc.d_entities.rows(), opt_entities_, emb_step_count_, lr,
                     "entities");
    sparse_adam_step(table_.relations, acc.d_relations.rows(), opt_relations_, emb_step_count_,
                     lr, "relations");
    for (TeacherWGrad& update : w_updates) {
        TeacherContext& tc = teachers_[update.teacher];
        adam_step(tc.w.net, update.grads, tc.opt_w_emb, lr);
    }

    const std::vector<int32_t> ent_rows = acc.d_entities.touched_ids();
    project_entity_rows(table_, ent_rows);
    const std::vector<int32_t> rel_rows = acc.d_relations.touched_ids();
    project_relation_rows(table_, rel_rows);
    return total_loss;
}

bool Trainer::step_once() {
    prepare();
    if (step_ >= total_steps_) return false;
    const auto t0 = std::chrono::steady_clock::now();

    const auto step_in_epoch = static_cast<int>(step_ % steps_per_epoch_);
    if (step_in_epoch == 0) {
        ++epoch_;
        epoch_order_.resize(splits_.train.size());
        for (size_t i = 0; i < epoch_order_.size(); ++i) epoch_order_[i] = i;
        rng_shuffle_.shuffle(epoch_order_);
    }
    const size_t begin = static_cast<size_t>(step_in_epoch) * static_cast<size_t>(batch_size_);
    const size_t end = std::min(begin + static_cast<size_t>(batch_size_), epoch_order_.size());
    std::vector<Triplet> batch;
    batch.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) batch.push_back(splits_.train[epoch_order_[i]]);

    const double alpha_t =
        constraints_enabled_
            ? anneal_weight(step_, total_steps_, cfg_.alpha, cfg_.anneal_cycles)
            : 0.0;
    const double beta_t =
        constraints_enabled_
            ? anneal_weight(step_, total_steps_, cfg_.beta, cfg_.anneal_cycles)
            : 0.0;
    const double lr_e_t = warmup_lr(step_ + 1, total_steps_, cfg_.lr_e, cfg_.warmup_fraction);
    const double lr_a_t = warmup_lr(step_ + 1, total_steps_, cfg_.lr_a, cfg_.warmup_fraction);

    double loss_d = 0.0, loss_g = 0.0;
    int n_d = 0, n_g = 0;
    for (TeacherContext& tc : teachers_) {
        if (!tc.adversarial) continue;
        for (int j = 0; j < cfg_.t_d; ++j) {
            loss_d += discriminator_phase(tc, lr_a_t);
            ++n_d;
        }
        for (int j = 0; j < cfg_.t_g; ++j) {
            loss_g += generator_phase(tc, lr_a_t);
            ++n_g;
        }
    }

    double mean_weight = 0.0;
    const double loss_e = embedding_step(batch, alpha_t, beta_t, lr_e_t, mean_weight);

    ++step_;
    StepLog entry;
    entry.step = step_;
    entry.epoch = epoch_;
    entry.loss_e = loss_e;
    entry.loss_d = n_d > 0 ? loss_d / n_d : 0.0;
    entry.loss_g = n_g > 0 ? loss_g / n_g : 0.0;
    entry.alpha_t = alpha_t;
    entry.beta_t = beta_t;
    entry.lr_t = lr_e_t;
    entry.mean_consistency_weight = mean_weight;
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
    log_.push_back(entry);

    const bool epoch_end = step_ % steps_per_epoch_ == 0;
    const bool due = cfg_.eval_every > 0 ? step_ % cfg_.eval_every == 0 : epoch_end;
    if (due || step_ >= total_steps_) eval_now();
    return step_ < total_steps_;
}

void Trainer::snapshot_if_best_(const RankingMetrics& metrics) {
    const double score = selection_score(metrics);
    if (score > best_selection_) {
        best_selection_ = score;
        best_valid_ = metrics;
        best_step_ = step_;
        best_table_ = table_;
    }
}

void Trainer::eval_now() {
    prepare();
    if (last_eval_step_ == step_) return;
    last_eval_step_ = step_;
    if (splits_.valid.empty()) {
        // No validation data: the newest table is always "best".
        best_table_ = table_;
        best_step_ = step_;
        best_selection_ = 0.0;
        best_valid_ = RankingMetrics{};
        return;
    }
    const RankingMetrics metrics = evaluate(splits_.valid, table_, filter_, cfg_.norm,
                                            cfg_.tie_policy, candidate_limit_, cfg_.parallel);
    snapshot_if_best_(metrics);
}

TrainResult Trainer::train() {
    prepare();
    while (step_once()) {
    }
    eval_now();  // covers total_steps_ == 0 edge; otherwise a no-op

    TrainResult result;
    result.table = best_table_;
    result.entities = graph_.entities;
    result.relations = graph_.relations;
    result.best_valid = best_valid_;
    result.best_selection = best_selection_;
    result.best_step = best_step_;
    result.eval_candidate_limit = candidate_limit_;
    result.log = log_;
    return result;
}

}  // namespace atransn
