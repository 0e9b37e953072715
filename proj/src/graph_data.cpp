#include "atransn/graph_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace atransn {
namespace {

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

// Strips a trailing '\r' so CRLF files parse the same as LF files.
void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool skippable(const std::string& line) {
    return line.empty() || line[0] == '#';
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

[[noreturn]] void parse_fail(const std::string& path, int line_no, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& path, int line_no, const std::string& tok) {
    try {
        size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) parse_fail(path, line_no, "trailing characters in number '" + tok + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        parse_fail(path, line_no, "bad number '" + tok + "'");
    }
}

}  // namespace

void FilterIndex::finalize() {
    if (!dirty_) return;
    for (auto* m : {&head_sets_, &tail_sets_}) {
        for (auto& [k, v] : *m) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
    }
    dirty_ = false;
}

bool FilterIndex::contains_(const SetMap& m, uint64_t k, int32_t v) {
    auto it = m.find(k);
    if (it == m.end()) return false;
    return std::binary_search(it->second.begin(), it->second.end(), v);
}

std::span<const int32_t> FilterIndex::lookup_(const SetMap& m, uint64_t k) {
    auto it = m.find(k);
    if (it == m.end()) return {};
    return {it->second.data(), it->second.size()};
}

KnowledgeGraph load_triplets(const std::string& path, const KnowledgeGraph* frozen,
                             LoadStats* stats) {
    std::ifstream in = open_or_throw(path);
    KnowledgeGraph graph;
    if (frozen != nullptr) {
        graph.entities = frozen->entities;
        graph.relations = frozen->relations;
    }

    auto entity_id = [&](const std::string& label, int line_no) {
        if (frozen == nullptr) return graph.entities.add(label);
        if (auto id = graph.entities.find(label)) return *id;
        throw VocabError(path + ":" + std::to_string(line_no) + ": unknown entity '" + label + "'");
    };
    auto relation_id = [&](const std::string& label, int line_no) {
        if (frozen == nullptr) return graph.relations.add(label);
        if (auto id = graph.relations.find(label)) return *id;
        throw VocabError(path + ":" + std::to_string(line_no) + ": unknown relation '" + label + "'");
    };

    std::unordered_set<Triplet, TripletHash> seen;
    int duplicates = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (skippable(line)) continue;
        const std::vector<std::string> cols = split_tabs(line);
        if (cols.size() != 3) {
            parse_fail(path, line_no,
                       "expected 3 tab-separated fields, got " + std::to_string(cols.size()));
        }
        for (const std::string& c : cols) {
            if (c.empty()) parse_fail(path, line_no, "empty field");
        }
        Triplet t;
        t.head = entity_id(cols[0], line_no);
        t.relation = relation_id(cols[1], line_no);
        t.tail = entity_id(cols[2], line_no);
        if (!seen.insert(t).second) {
            ++duplicates;
            continue;
        }
        graph.triplets.push_back(t);
    }
    if (duplicates > 0) {
        std::fprintf(stderr, "warning: %s: dropped %d duplicate triplet(s)\n", path.c_str(),
                     duplicates);
    }
    if (stats != nullptr) stats->duplicates_dropped += duplicates;
    return graph;
}

void save_triplets(const KnowledgeGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const Triplet& t : graph.triplets) {
        out << graph.entities.label(t.head) << '\t' << graph.relations.label(t.relation) << '\t'
            << graph.entities.label(t.tail) << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

std::pair<KnowledgeGraph, SplitDataset> load_split_files(const std::string& train_path,
                                                         const std::string& valid_path,
                                                         const std::string& test_path,
                                                         LoadStats* stats) {
    KnowledgeGraph graph = load_triplets(train_path, nullptr, stats);
    SplitDataset splits;
    splits.train = graph.triplets;

    for (auto [path, bucket] : {std::pair{&valid_path, &splits.valid}, std::pair{&test_path, &splits.test}}) {
        KnowledgeGraph part;
        part.entities = graph.entities;
        part.relations = graph.relations;
        {
            // Extend the shared vocabulary rather than freezing it: valid and
            // test may legitimately mention unseen labels.
            std::ifstream in = open_or_throw(*path);
            std::string line;
            int line_no = 0;
            std::unordered_set<Triplet, TripletHash> seen;
            int duplicates = 0;
            while (std::getline(in, line)) {
                ++line_no;
                strip_cr(line);
                if (skippable(line)) continue;
                const std::vector<std::string> cols = split_tabs(line);
                if (cols.size() != 3) {
                    parse_fail(*path, line_no,
                               "expected 3 tab-separated fields, got " + std::to_string(cols.size()));
                }
                for (const std::string& c : cols) {
                    if (c.empty()) parse_fail(*path, line_no, "empty field");
                }
                Triplet t;
                t.head = part.entities.add(cols[0]);
                t.relation = part.relations.add(cols[1]);
                t.tail = part.entities.add(cols[2]);
                if (!seen.insert(t).second) {
                    ++duplicates;
                    continue;
                }
                bucket->push_back(t);
            }
            if (duplicates > 0) {
                std::fprintf(stderr, "warning: %s: dropped %d duplicate triplet(s)\n",
                             path->c_str(), duplicates);
            }
            if (stats != nullptr) stats->duplicates_dropped += duplicates;
        }
        graph.entities = part.entities;
        graph.relations = part.relations;
    }

    graph.triplets.clear();
    for (const auto* bucket : {&splits.train, &splits.valid, &splits.test}) {
        graph.triplets.insert(graph.triplets.end(), bucket->begin(), bucket->end());
    }
    return {std::move(graph), std::move(splits)};
}

SplitDataset split_dataset(const KnowledgeGraph& graph, const std::array<double, 3>& ratios,
                           uint64_t seed) {
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (!(total > 0.0) || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
        throw ConfigError("split ratios must be non-negative with positive sum");
    }
    const size_t n = graph.triplets.size();
    const auto n_valid = static_cast<size_t>(std::floor(static_cast<double>(n) * ratios[1] / total));
    const auto n_test = static_cast<size_t>(std::floor(static_cast<double>(n) * ratios[2] / total));

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    RngStream rng = RngStream(seed).fork("split");
    rng.shuffle(order);

    SplitDataset out;
    out.seed = seed;
    out.train.reserve(n - n_valid - n_test);
    out.valid.reserve(n_valid);
    out.test.reserve(n_test);
    for (size_t i = 0; i < n; ++i) {
        const Triplet& t = graph.triplets[order[i]];
        if (i < n_valid) {
            out.valid.push_back(t);
        } else if (i < n_valid + n_test) {
            out.test.push_back(t);
        } else {
            out.train.push_back(t);
        }
    }
    return out;
}

AlignmentSet load_alignment(const std::string& path, const Vocab& teacher_entities,
                            const Vocab& target_entities) {
    std::ifstream in = open_or_throw(path);
    std::vector<std::pair<int32_t, int32_t>> pairs;
    int skipped = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (skippable(line)) continue;
        const std::vector<std::string> cols = split_tabs(line);
        if (cols.size() != 2) {
            parse_fail(path, line_no,
                       "expected 2 tab-separated fields, got " + std::to_string(cols.size()));
        }
        const auto teacher_id = teacher_entities.find(cols[0]);
        const auto target_id = target_entities.find(cols[1]);
        if (!teacher_id || !target_id) {
            ++skipped;
            continue;
        }
        pairs.emplace_back(*teacher_id, *target_id);
    }
    if (skipped > 0) {
        std::fprintf(stderr, "warning: %s: skipped %d alignment pair(s) with unknown labels\n",
                     path.c_str(), skipped);
    }
    if (pairs.empty()) {
        throw AlignmentError(path + ": no usable alignment pairs");
    }
    AlignmentSet out = make_alignment(std::move(pairs));
    out.skipped_unknown = skipped;
    return out;
}

AlignmentSet make_alignment(std::vector<std::pair<int32_t, int32_t>> pairs) {
    if (pairs.empty()) throw AlignmentError("alignment has no usable pairs");
    AlignmentSet out;
    out.pairs = std::move(pairs);
    for (const auto& [teacher_id, target_id] : out.pairs) {
        out.by_target[target_id].push_back(teacher_id);
    }
    return out;
}

std::pair<Matrix, std::vector<std::string>> read_dump_section(std::istream& in,
                                                              const std::string& path,
                                                              int& line_no, const char* tag) {
    std::string line;
    int n_rows = -1;
    int dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (skippable(line)) continue;
        std::istringstream header(line);
        std::string got_tag;
        if (!(header >> got_tag >> n_rows >> dim) || got_tag != tag || n_rows < 0 || dim <= 0) {
            parse_fail(path, line_no,
                       std::string("expected header '") + tag + " <rows> <dim>'");
        }
        break;
    }
    if (n_rows < 0) throw ParseError(path + ": missing " + tag + " header");

    Matrix m(n_rows, dim);
    std::vector<std::string> labels;
    labels.reserve(static_cast<size_t>(n_rows));
    int row = 0;
    while (row < n_rows && std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (skippable(line)) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            parse_fail(path, line_no, "expected 'label<TAB>values'");
        }
        labels.push_back(line.substr(0, tab));
        std::istringstream values(line.substr(tab + 1));
        std::string tok;
        int j = 0;
        while (values >> tok) {
            if (j >= dim) parse_fail(path, line_no, "more than " + std::to_string(dim) + " values");
            const double v = parse_double(path, line_no, tok);
            if (!std::isfinite(v)) parse_fail(path, line_no, "non-finite value");
            m.at(row, j) = v;
            ++j;
        }
        if (j != dim) {
            parse_fail(path, line_no,
                       "expected " + std::to_string(dim) + " values, got " + std::to_string(j));
        }
        ++row;
    }
    if (row != n_rows) {
        throw ParseError(path + ": header declared " + std::to_string(n_rows) + " rows, found " +
                         std::to_string(row));
    }
    return {std::move(m), std::move(labels)};
}

namespace {

std::pair<Matrix, std::vector<std::string>> read_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    int line_no = 0;
    return read_dump_section(in, path, line_no, "ENT");
}

}  // namespace

TeacherEmbeddings load_teacher_embeddings(const std::string& path, const Vocab& teacher_entities) {
    auto [rows, labels] = read_dump(path);
    TeacherEmbeddings out;
    out.dim = rows.cols;
    out.matrix = Matrix(teacher_entities.size(), rows.cols);

    std::vector<bool> filled(static_cast<size_t>(teacher_entities.size()), false);
    for (size_t i = 0; i < labels.size(); ++i) {
        const auto id = teacher_entities.find(labels[i]);
        if (!id) throw VocabError(path + ": dump entity '" + labels[i] + "' not in vocabulary");
        if (filled[static_cast<size_t>(*id)]) {
            throw ParseError(path + ": duplicate entity '" + labels[i] + "'");
        }
        filled[static_cast<size_t>(*id)] = true;
        std::copy_n(rows.row(static_cast<int>(i)).data(), rows.cols,
                    out.matrix.row(*id).data());
    }
    for (int32_t id = 0; id < teacher_entities.size(); ++id) {
        if (!filled[static_cast<size_t>(id)]) {
            throw VocabError(path + ": missing embedding for entity '" +
                             teacher_entities.label(id) + "'");
        }
    }
    return out;
}

std::pair<TeacherEmbeddings, Vocab> load_teacher_dump(const std::string& path) {
    auto [rows, labels] = read_dump(path);
    Vocab vocab;
    for (std::string& label : labels) {
        const int32_t before = vocab.size();
        vocab.add(std::move(label));
        if (vocab.size() == before) throw ParseError(path + ": duplicate entity label in dump");
    }
    TeacherEmbeddings out;
    out.dim = rows.cols;
    out.matrix = std::move(rows);
    return {std::move(out), std::move(vocab)};
}

FilterIndex build_filter_index(const SplitDataset& splits) {
    FilterIndex index;
    for (const auto* bucket : {&splits.train, &splits.valid, &splits.test}) {
        for (const Triplet& t : *bucket) index.insert(t);
    }
    index.finalize();
    return index;
}

}  // namespace atransn
