#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "atransn/graph_data.hpp"
#include "atransn/rng.hpp"

namespace atransn {

// Synthetic world for the transfer experiments. Entities carry latent
// positions and relations latent shift vectors; a triplet's tail is
// sampled from the entities nearest head + shift, so the ground truth
// is realizable by a translational model and the tasks are learnable
// rather than noise.
struct SynthConfig {
    int n_entities = 200;
    int n_relations = 8;
    int n_triplets = 2000;
    int latent_dim = 6;
    int k_nearest = 3;        // tail drawn uniformly among this many nearest
    double noise_prob = 0.1;  // chance of a uniform random tail instead
    double target_fraction = 0.4;  // share of world triplets the target view sees
    std::array<double, 3> target_split = {0.6, 0.2, 0.2};
    std::array<double, 3> teacher_split = {0.9, 0.05, 0.05};
    uint64_t seed = 7;
};

struct SynthWorld {
    KnowledgeGraph world;        // full vocabulary and all triplets
    SplitDataset teacher;        // split of all world triplets
    SplitDataset target;         // split of the sampled target view
    std::vector<int32_t> target_entities;  // entities present in the target view
    std::vector<int32_t> alignment_order;  // fixed shuffle of target_entities
};

SynthWorld make_synth_world(const SynthConfig& cfg);

// Identity alignment over the first floor(ratio * |target_entities|)
// entries of alignment_order, so sets at growing ratios are nested.
AlignmentSet alignment_at_ratio(const SynthWorld& world, double ratio);

}  // namespace atransn
