#include "atransn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace atransn {
namespace {

constexpr const char* kMagic = "ATRANSN-CKPT 1";

// 17 significant digits: shortest text that always round-trips a double.
void append_value(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

void write_section(std::ostream& out, const char* tag, const Matrix& m, const Vocab& vocab) {
    out << tag << ' ' << m.rows << ' ' << m.cols << '\n';
    std::string line;
    for (int i = 0; i < m.rows; ++i) {
        line = vocab.label(i);
        line += '\t';
        const auto row = m.row(i);
        for (int j = 0; j < m.cols; ++j) {
            if (j > 0) line += ' ';
            append_value(line, row[static_cast<size_t>(j)]);
        }
        line += '\n';
        out << line;
    }
}

Vocab vocab_from_labels(std::vector<std::string> labels, const std::string& path) {
    Vocab vocab;
    for (std::string& label : labels) {
        const int32_t before = vocab.size();
        vocab.add(std::move(label));
        if (vocab.size() == before) throw ParseError(path + ": duplicate label");
    }
    return vocab;
}

}  // namespace

Norm norm_from_string(const std::string& name) {
    if (name == "l1") return Norm::L1;
    if (name == "l2") return Norm::L2;
    throw ConfigError("unknown norm '" + name + "'");
}

std::string to_string(Norm norm) { return norm == Norm::L1 ? "l1" : "l2"; }

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << kMagic << '\n';
    out << "kind " << to_string(ckpt.table.kind) << '\n';
    out << "norm " << to_string(ckpt.norm) << '\n';
    std::string line = "gamma ";
    append_value(line, ckpt.gamma);
    out << line << '\n';
    out << "step " << ckpt.step << '\n';
    out << "limit " << ckpt.limit << '\n';
    write_section(out, "ENT", ckpt.table.entities, ckpt.entities);
    write_section(out, "REL", ckpt.table.relations, ckpt.relations);
    if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    int line_no = 0;
    std::string line;

    auto next_line = [&]() {
        if (!std::getline(in, line)) throw ParseError(path + ": truncated checkpoint");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };

    next_line();
    if (line != kMagic) throw ParseError(path + ": not a checkpoint file");

    Checkpoint ckpt;
    std::string kind_name;
    bool have_kind = false;
    // key-value lines until the ENT header
    for (int i = 0; i < 5; ++i) {
        next_line();
        std::istringstream kv(line);
        std::string key;
        kv >> key;
        if (key == "kind") {
            kv >> kind_name;
            have_kind = true;
        } else if (key == "norm") {
            std::string v;
            kv >> v;
            ckpt.norm = norm_from_string(v);
        } else if (key == "gamma") {
            kv >> ckpt.gamma;
        } else if (key == "step") {
            kv >> ckpt.step;
        } else if (key == "limit") {
            kv >> ckpt.limit;
        } else {
            throw ParseError(path + ":" + std::to_string(line_no) + ": unknown checkpoint key '" +
                             key + "'");
        }
        if (kv.fail()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
        }
    }
    if (!have_kind) throw ParseError(path + ": missing kind");
    const ModelKind kind = model_kind_from_string(kind_name);

    auto [ents, ent_labels] = read_dump_section(in, path, line_no, "ENT");
    auto [rels, rel_labels] = read_dump_section(in, path, line_no, "REL");

    ckpt.table.kind = kind;
    ckpt.table.dim = ents.cols;
    if (rels.cols != relation_dim(kind, ents.cols)) {
        throw ParseError(path + ": relation dim does not match kind/dim");
    }
    ckpt.table.entities = std::move(ents);
    ckpt.table.relations = std::move(rels);
    ckpt.entities = vocab_from_labels(std::move(ent_labels), path);
    ckpt.relations = vocab_from_labels(std::move(rel_labels), path);
    return ckpt;
}

void save_embedding_dump(const Matrix& entities, const Vocab& entity_vocab,
                         const std::string& path, const Matrix* relations,
                         const Vocab* relation_vocab) {
    if (entities.rows != entity_vocab.size()) throw ShapeError("dump: vocab/matrix row mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_section(out, "ENT", entities, entity_vocab);
    if (relations != nullptr) {
        if (relation_vocab == nullptr || relations->rows != relation_vocab->size()) {
            throw ShapeError("dump: relation vocab/matrix row mismatch");
        }
        write_section(out, "REL", *relations, *relation_vocab);
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace atransn
