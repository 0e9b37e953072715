#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "atransn/errors.hpp"
#include "atransn/matrix.hpp"
#include "atransn/rng.hpp"

namespace atransn {

// Bidirectional label <-> dense id map. Ids are assigned contiguously in
// first-appearance order so experiments are reproducible without sorting.
class Vocab {
public:
    int32_t add(std::string label) {
        auto it = ids_.find(label);
        if (it != ids_.end()) return it->second;
        const int32_t id = static_cast<int32_t>(labels_.size());
        ids_.emplace(label, id);
        labels_.push_back(std::move(label));
        return id;
    }

    std::optional<int32_t> find(const std::string& label) const {
        auto it = ids_.find(label);
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& label(int32_t id) const { return labels_[static_cast<size_t>(id)]; }
    int32_t size() const { return static_cast<int32_t>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }

    bool operator==(const Vocab& o) const { return labels_ == o.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int32_t> ids_;
};

struct Triplet {
    int32_t head = 0;
    int32_t relation = 0;
    int32_t tail = 0;

    bool operator==(const Triplet&) const = default;
};

struct TripletHash {
    size_t operator()(const Triplet& t) const {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (uint64_t v : {static_cast<uint64_t>(t.head), static_cast<uint64_t>(t.relation),
                           static_cast<uint64_t>(t.tail)}) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<size_t>(h);
    }
};

struct KnowledgeGraph {
    Vocab entities;
    Vocab relations;
    std::vector<Triplet> triplets;

    int32_t entity_count() const { return entities.size(); }
    int32_t relation_count() const { return relations.size(); }
};

struct SplitDataset {
    std::vector<Triplet> train;
    std::vector<Triplet> valid;
    std::vector<Triplet> test;
    uint64_t seed = 0;
};

struct AlignmentSet {
    // (teacher_entity_id, target_entity_id)
    std::vector<std::pair<int32_t, int32_t>> pairs;
    // target_entity_id -> teacher ids aligned to it
    std::unordered_map<int32_t, std::vector<int32_t>> by_target;
    int skipped_unknown = 0;
};

struct TeacherEmbeddings {
    Matrix matrix;  // |E_teacher| x dim
    int dim = 0;
};

// Filtered-ranking support: all (h,r,t) known true across every split.
class FilterIndex {
public:
    void insert(const Triplet& t) {
        head_sets_[key_(t.relation, t.tail)].push_back(t.head);
        tail_sets_[key_(t.head, t.relation)].push_back(t.tail);
        dirty_ = true;
    }

    void finalize();

    bool head_known(int32_t candidate_head, int32_t relation, int32_t tail) const {
        return contains_(head_sets_, key_(relation, tail), candidate_head);
    }
    bool tail_known(int32_t head, int32_t relation, int32_t candidate_tail) const {
        return contains_(tail_sets_, key_(head, relation), candidate_tail);
    }

    // Known heads for (r, t) / tails for (h, r); empty if none.
    std::span<const int32_t> known_heads(int32_t relation, int32_t tail) const { return lookup_(head_sets_, key_(relation, tail)); }
    std::span<const int32_t> known_tails(int32_t head, int32_t relation) const { return lookup_(tail_sets_, key_(head, relation)); }

private:
    using SetMap = std::unordered_map<uint64_t, std::vector<int32_t>>;

    static uint64_t key_(int32_t a, int32_t b) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
    }
    static bool contains_(const SetMap& m, uint64_t k, int32_t v);
    static std::span<const int32_t> lookup_(const SetMap& m, uint64_t k);

    SetMap head_sets_;
    SetMap tail_sets_;
    bool dirty_ = false;
};

struct LoadStats {
    int duplicates_dropped = 0;
    int skipped_unknown = 0;
};

// Triplet files: UTF-8, one head<TAB>relation<TAB>tail per line, lines
// starting with '#' ignored. Vocabularies are built in first-appearance
// order, or reused (frozen) when `frozen` is given, in which case an
// unknown label is a VocabError. Duplicate lines are dropped and counted.
KnowledgeGraph load_triplets(const std::string& path, const KnowledgeGraph* frozen = nullptr,
                             LoadStats* stats = nullptr);

void save_triplets(const KnowledgeGraph& graph, const std::string& path);

// Loads an explicit train/valid/test file trio into one graph whose
// vocabulary spans all three (first appearance in train, then valid,
// then test). Triplets duplicated across files keep their first slot.
std::pair<KnowledgeGraph, SplitDataset> load_split_files(const std::string& train_path,
                                                         const std::string& valid_path,
                                                         const std::string& test_path,
                                                         LoadStats* stats = nullptr);

// Deterministic 60/20/20-style split. Remainder triplets go to train.
SplitDataset split_dataset(const KnowledgeGraph& graph, const std::array<double, 3>& ratios,
                           uint64_t seed);

// Alignment files: teacher_label<TAB>target_label per line. Pairs with a
// label missing from either vocabulary are skipped and counted; an empty
// result is an AlignmentError.
AlignmentSet load_alignment(const std::string& path, const Vocab& teacher_entities,
                            const Vocab& target_entities);

AlignmentSet make_alignment(std::vector<std::pair<int32_t, int32_t>> pairs);

// One "TAG n_rows dim" section of a text dump: rows are
// "label<TAB>v1 v2 ... v_dim". Reads exactly n_rows rows so trailing
// sections stay available; shared by the embedding and checkpoint
// loaders.
std::pair<Matrix, std::vector<std::string>> read_dump_section(std::istream& in,
                                                              const std::string& path,
                                                              int& line_no, const char* tag);

// Embedding dump ("ENT n dim" header, one label<TAB>values row per
// entity). Rows are reordered to the given vocabulary; a missing entity
// or a non-finite value is an error.
TeacherEmbeddings load_teacher_embeddings(const std::string& path, const Vocab& teacher_entities);

// Same file format, but the vocabulary is taken from the dump itself in
// row order. Used by train-target, where the teacher graph is not
// available.
std::pair<TeacherEmbeddings, Vocab> load_teacher_dump(const std::string& path);

FilterIndex build_filter_index(const SplitDataset& splits);

}  // namespace atransn
