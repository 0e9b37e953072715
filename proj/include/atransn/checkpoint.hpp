#pragma once

#include <cstdint>
#include <string>

#include "atransn/eval.hpp"
#include "atransn/graph_data.hpp"
#include "atransn/scoring.hpp"

namespace atransn {

// Trained model snapshot. Text format, 17-significant-digit floats, so
// save/load round-trips doubles exactly:
//   ATRANSN-CKPT 1
//   kind <transe|distmult|complex|rotate>
//   norm <l1|l2>
//   gamma <g>   step <s>   limit <n>   (one "key value" line each)
//   ENT <n> <dim>  rows...
//   REL <n> <dim>  rows...
// limit is the ranking candidate count: joint-mode tables carry merged
// teacher rows past it that must not compete in evaluation. 0 = all.
struct Checkpoint {
    EmbeddingTable table;
    Vocab entities;
    Vocab relations;
    Norm norm = Norm::L1;
    double gamma = 0.0;
    int64_t step = 0;
    int32_t limit = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Entity embedding dump consumed by load_teacher_embeddings /
// load_teacher_dump. Relations are withheld unless requested: exported
// teacher vectors alone cannot reconstruct the teacher's triplets.
void save_embedding_dump(const Matrix& entities, const Vocab& entity_vocab,
                         const std::string& path, const Matrix* relations = nullptr,
                         const Vocab* relation_vocab = nullptr);

Norm norm_from_string(const std::string& name);
std::string to_string(Norm norm);

}  // namespace atransn
