#include <algorithm>
#include <set>
#include <unordered_set>
#include <vector>

#include "atransn/errors.hpp"
#include "atransn/synth.hpp"
#include "doctest.h"

using namespace atransn;

namespace {

std::set<std::array<int32_t, 3>> as_set(const std::vector<Triplet>& v) {
    std::set<std::array<int32_t, 3>> out;
    for (const Triplet& t : v) out.insert({t.head, t.relation, t.tail});
    return out;
}

std::set<std::pair<int32_t, int32_t>> pair_set(const AlignmentSet& a) {
    return {a.pairs.begin(), a.pairs.end()};
}

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.n_entities = 40;
    cfg.n_relations = 4;
    cfg.n_triplets = 300;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_SUITE("synth") {
    TEST_CASE("world carries the requested vocabulary and distinct triplets") {
        SynthConfig cfg = small_config();
        SynthWorld w = make_synth_world(cfg);
        CHECK(w.world.entity_count() == 40);
        CHECK(w.world.relation_count() == 4);
        CHECK(w.world.triplets.size() == 300);
        CHECK(as_set(w.world.triplets).size() == 300);  // no duplicates
        for (const Triplet& t : w.world.triplets) {
            CHECK(t.head >= 0);
            CHECK(t.head < 40);
            CHECK(t.relation >= 0);
            CHECK(t.relation < 4);
            CHECK(t.tail >= 0);
            CHECK(t.tail < 40);
        }
    }

    TEST_CASE("teacher split covers all world triplets at its ratios") {
        SynthConfig cfg = small_config();
        SynthWorld w = make_synth_world(cfg);
        const size_t total =
            w.teacher.train.size() + w.teacher.valid.size() + w.teacher.test.size();
        CHECK(total == 300);
        CHECK(w.teacher.valid.size() == static_cast<size_t>(300 * cfg.teacher_split[1]));
        CHECK(w.teacher.test.size() == static_cast<size_t>(300 * cfg.teacher_split[2]));

        std::set<std::array<int32_t, 3>> world_set = as_set(w.world.triplets);
        for (const auto* part : {&w.teacher.train, &w.teacher.valid, &w.teacher.test})
            for (const Triplet& t : *part)
                CHECK(world_set.count({t.head, t.relation, t.tail}) == 1);
    }

    TEST_CASE("target view is the configured fraction, split at its own ratios") {
        SynthConfig cfg = small_config();
        SynthWorld w = make_synth_world(cfg);
        const size_t view =
            w.target.train.size() + w.target.valid.size() + w.target.test.size();
        CHECK(view == static_cast<size_t>(300 * cfg.target_fraction));
        CHECK(w.target.valid.size() == static_cast<size_t>(view * cfg.target_split[1]));
        CHECK(w.target.test.size() == static_cast<size_t>(view * cfg.target_split[2]));

        // The view is a subset of the world and its entity roster matches
        // target_entities exactly.
        std::set<std::array<int32_t, 3>> world_set = as_set(w.world.triplets);
        std::unordered_set<int32_t> roster;
        for (const auto* part : {&w.target.train, &w.target.valid, &w.target.test}) {
            for (const Triplet& t : *part) {
                CHECK(world_set.count({t.head, t.relation, t.tail}) == 1);
                roster.insert(t.head);
                roster.insert(t.tail);
            }
        }
        std::unordered_set<int32_t> listed(w.target_entities.begin(), w.target_entities.end());
        CHECK(listed == roster);
        CHECK(w.alignment_order.size() == w.target_entities.size());
        std::unordered_set<int32_t> shuffled(w.alignment_order.begin(),
                                             w.alignment_order.end());
        CHECK(shuffled == roster);
    }

    TEST_CASE("same seed reproduces the world; different seed does not") {
        SynthConfig cfg = small_config();
        SynthWorld a = make_synth_world(cfg);
        SynthWorld b = make_synth_world(cfg);
        CHECK(a.world.triplets == b.world.triplets);
        CHECK(a.target.train == b.target.train);
        CHECK(a.alignment_order == b.alignment_order);

        cfg.seed = 4;
        SynthWorld c = make_synth_world(cfg);
        CHECK(c.world.triplets != a.world.triplets);
    }

    TEST_CASE("alignments at growing ratios are nested and end at full coverage") {
        SynthWorld w = make_synth_world(small_config());
        AlignmentSet a25 = alignment_at_ratio(w, 0.25);
        AlignmentSet a50 = alignment_at_ratio(w, 0.5);
        AlignmentSet a100 = alignment_at_ratio(w, 1.0);

        const size_t n = w.target_entities.size();
        CHECK(a25.pairs.size() == n / 4);
        CHECK(a50.pairs.size() == n / 2);
        CHECK(a100.pairs.size() == n);

        std::set<std::pair<int32_t, int32_t>> s25 = pair_set(a25), s50 = pair_set(a50),
                                              s100 = pair_set(a100);
        CHECK(std::includes(s50.begin(), s50.end(), s25.begin(), s25.end()));
        CHECK(std::includes(s100.begin(), s100.end(), s50.begin(), s50.end()));

        // Identity alignment over target entities: teacher and target ids
        // coincide because both views share the world vocabulary.
        std::set<int32_t> covered;
        for (const auto& [teacher_id, target_id] : a100.pairs) {
            CHECK(teacher_id == target_id);
            covered.insert(target_id);
        }
        CHECK(covered == std::set<int32_t>(w.target_entities.begin(), w.target_entities.end()));
    }

    TEST_CASE("target split is identical across alignment ratios") {
        // The ratio only windows the alignment; the data split must not move.
        SynthWorld w1 = make_synth_world(small_config());
        SynthWorld w2 = make_synth_world(small_config());
        alignment_at_ratio(w1, 0.25);
        alignment_at_ratio(w2, 1.0);
        CHECK(w1.target.train == w2.target.train);
        CHECK(w1.target.test == w2.target.test);
    }

    TEST_CASE("invalid ratios and saturated worlds are rejected") {
        SynthWorld w = make_synth_world(small_config());
        CHECK_THROWS_AS(alignment_at_ratio(w, 0.0), ConfigError);
        CHECK_THROWS_AS(alignment_at_ratio(w, -0.1), ConfigError);
        CHECK_THROWS_AS(alignment_at_ratio(w, 1.5), ConfigError);

        SynthConfig tiny;
        tiny.n_entities = 5;
        tiny.n_relations = 1;
        tiny.n_triplets = 100;  // > 5 * 1 * k_nearest reachable tails
        tiny.noise_prob = 0.0;
        tiny.k_nearest = 1;
        CHECK_THROWS_AS(make_synth_world(tiny), DataError);

        SynthConfig bad = small_config();
        bad.n_entities = 0;
        CHECK_THROWS_AS(make_synth_world(bad), ConfigError);
        bad = small_config();
        bad.target_fraction = 0.0;
        CHECK_THROWS_AS(make_synth_world(bad), ConfigError);
    }
}
