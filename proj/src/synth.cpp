#include "atransn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace atransn {

SynthWorld make_synth_world(const SynthConfig& cfg) {
    if (cfg.n_entities < 2 || cfg.n_relations < 1 || cfg.n_triplets < 1) {
        throw ConfigError("synth: need at least 2 entities, 1 relation, 1 triplet");
    }
    if (cfg.target_fraction <= 0.0 || cfg.target_fraction > 1.0) {
        throw ConfigError("synth: target_fraction outside (0, 1]");
    }
    RngStream master(cfg.seed);

    SynthWorld out;
    for (int i = 0; i < cfg.n_entities; ++i) out.world.entities.add("e" + std::to_string(i));
    for (int i = 0; i < cfg.n_relations; ++i) out.world.relations.add("rel" + std::to_string(i));

    // Latent geometry: positions in the unit cube, shifts sized so a
    // step usually lands near other entities.
    RngStream geo = master.fork("geometry");
    const auto dim = static_cast<size_t>(cfg.latent_dim);
    std::vector<Vec> pos(static_cast<size_t>(cfg.n_entities), Vec(dim));
    for (auto& p : pos) {
        for (double& x : p) x = geo.uniform_range(-1.0, 1.0);
    }
    std::vector<Vec> shift(static_cast<size_t>(cfg.n_relations), Vec(dim));
    for (auto& s : shift) {
        for (double& x : s) x = geo.uniform_range(-0.6, 0.6);
    }

    RngStream draw = master.fork("triplets");
    std::unordered_set<Triplet, TripletHash> seen;
    Vec y(dim);
    std::vector<std::pair<double, int32_t>> dist(static_cast<size_t>(cfg.n_entities));
    const int max_attempts = cfg.n_triplets * 200;
    int attempts = 0;
    while (static_cast<int>(out.world.triplets.size()) < cfg.n_triplets &&
           attempts < max_attempts) {
        ++attempts;
        Triplet t;
        t.head = draw.uniform_index(cfg.n_entities);
        t.relation = draw.uniform_index(cfg.n_relations);
        if (draw.uniform01() < cfg.noise_prob) {
            t.tail = draw.uniform_index(cfg.n_entities);
        } else {
            const Vec& h = pos[static_cast<size_t>(t.head)];
            const Vec& s = shift[static_cast<size_t>(t.relation)];
            for (size_t j = 0; j < dim; ++j) y[j] = h[j] + s[j];
            for (int32_t e = 0; e < cfg.n_entities; ++e) {
                double d2 = 0.0;
                const Vec& p = pos[static_cast<size_t>(e)];
                for (size_t j = 0; j < dim; ++j) d2 += (y[j] - p[j]) * (y[j] - p[j]);
                dist[static_cast<size_t>(e)] = {d2, e};
            }
            const auto k = static_cast<size_t>(std::min(cfg.k_nearest, cfg.n_entities));
            std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
            t.tail = dist[draw.uniform_below(k)].second;
        }
        if (seen.insert(t).second) out.world.triplets.push_back(t);
    }
    if (static_cast<int>(out.world.triplets.size()) < cfg.n_triplets) {
        throw DataError("synth: world saturated before reaching requested triplet count");
    }

    out.teacher = split_dataset(out.world, cfg.teacher_split, master.fork("teacher_split").next_u64());

    // Target view: a fixed subset of world triplets, split once so the
    // validation/test files stay identical across overlap ratios.
    RngStream view = master.fork("target_view");
    std::vector<size_t> order(out.world.triplets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    view.shuffle(order);
    const auto n_view = static_cast<size_t>(
        std::floor(cfg.target_fraction * static_cast<double>(order.size())));
    KnowledgeGraph target_graph;
    target_graph.entities = out.world.entities;
    target_graph.relations = out.world.relations;
    target_graph.triplets.reserve(n_view);
    std::vector<size_t> view_idx(order.begin(), order.begin() + static_cast<long>(n_view));
    std::sort(view_idx.begin(), view_idx.end());  // world order, determinism aid
    for (size_t i : view_idx) target_graph.triplets.push_back(out.world.triplets[i]);
    out.target = split_dataset(target_graph, cfg.target_split,
                               master.fork("target_split").next_u64());

    std::set<int32_t> present;
    for (const Triplet& t : target_graph.triplets) {
        present.insert(t.head);
        present.insert(t.tail);
    }
    out.target_entities.assign(present.begin(), present.end());
    out.alignment_order = out.target_entities;
    RngStream align = master.fork("alignment");
    align.shuffle(out.alignment_order);
    return out;
}

AlignmentSet alignment_at_ratio(const SynthWorld& world, double ratio) {
    if (ratio <= 0.0 || ratio > 1.0) throw ConfigError("alignment ratio outside (0, 1]");
    const auto n = static_cast<size_t>(
        std::floor(ratio * static_cast<double>(world.alignment_order.size())));
    std::vector<std::pair<int32_t, int32_t>> pairs;
    pairs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const int32_t e = world.alignment_order[i];
        pairs.emplace_back(e, e);  // same world id on both sides
    }
    if (pairs.empty()) throw AlignmentError("alignment ratio yields no pairs");
    return make_alignment(std::move(pairs));
}

}  // namespace atransn
