#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atransn/checkpoint.hpp"
#include "atransn/config.hpp"
#include "atransn/errors.hpp"
#include "atransn/graph_data.hpp"
#include "atransn/manifest.hpp"
#include "doctest.h"

using namespace atransn;

namespace {

namespace fs = std::filesystem;

// Per-process scratch directory; files are tiny and overwritten freely.
fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "atransn_io_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
    fs::path p = scratch_dir() / name;
    std::ofstream out(p);
    out << text;
    out.close();
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("io_graph") {
    TEST_CASE("triplet load builds vocabularies in first-appearance order") {
        const std::string path = write_file("basic.tsv", "a\tr\tb\nb\tr\tc\n");
        KnowledgeGraph g = load_triplets(path);
        CHECK(g.entity_count() == 3);
        CHECK(g.relation_count() == 1);
        REQUIRE(g.triplets.size() == 2);
        CHECK(g.entities.label(0) == "a");
        CHECK(g.entities.label(1) == "b");
        CHECK(g.entities.label(2) == "c");
        CHECK(g.triplets[0] == Triplet{0, 0, 1});
        CHECK(g.triplets[1] == Triplet{1, 0, 2});
    }

    TEST_CASE("duplicates are dropped and counted; comments and blanks skipped") {
        const std::string path =
            write_file("dups.tsv", "# header comment\na\tr\tb\n\na\tr\tb\nc\tr\ta\n");
        LoadStats stats;
        KnowledgeGraph g = load_triplets(path, nullptr, &stats);
        CHECK(g.triplets.size() == 2);
        CHECK(stats.duplicates_dropped == 1);
    }

    TEST_CASE("malformed line raises a ParseError naming the location") {
        const std::string path = write_file("bad.tsv", "a\tr\tb\noops_two\tcols\n");
        CHECK_THROWS_WITH_AS(load_triplets(path), doctest::Contains(":2"), ParseError);
    }

    TEST_CASE("frozen vocabulary rejects unknown labels") {
        KnowledgeGraph base = load_triplets(write_file("frozen_base.tsv", "a\tr\tb\n"));
        const std::string path = write_file("frozen_new.tsv", "a\tr\tzzz\n");
        CHECK_THROWS_WITH_AS(load_triplets(path, &base), doctest::Contains("zzz"), VocabError);

        // Known labels reuse the frozen ids instead of re-numbering.
        const std::string ok = write_file("frozen_ok.tsv", "b\tr\ta\n");
        KnowledgeGraph g = load_triplets(ok, &base);
        REQUIRE(g.triplets.size() == 1);
        CHECK(g.triplets[0] == Triplet{1, 0, 0});
        CHECK(g.entities == base.entities);
    }

    TEST_CASE("save then load round-trips triplets and vocabularies") {
        // Start from a loaded file so vocabulary order is the format's
        // first-appearance order; load-save-load is then a fixpoint.
        RngStream rng(404);
        std::ostringstream text;
        std::set<std::array<int, 3>> seen;
        while (seen.size() < 40) {
            std::array<int, 3> t{static_cast<int>(rng.uniform_below(17)),
                                 static_cast<int>(rng.uniform_below(3)),
                                 static_cast<int>(rng.uniform_below(17))};
            if (seen.insert(t).second)
                text << "e" << t[0] << "\tr" << t[1] << "\te" << t[2] << "\n";
        }
        KnowledgeGraph g = load_triplets(write_file("round_src.tsv", text.str()));
        const std::string path = (scratch_dir() / "round.tsv").string();
        save_triplets(g, path);
        KnowledgeGraph back = load_triplets(path);
        CHECK(back.triplets == g.triplets);
        CHECK(back.entities.labels() == g.entities.labels());
        CHECK(back.relations.labels() == g.relations.labels());
        CHECK(slurp(path) == slurp((scratch_dir() / "round_src.tsv").string()));
    }

    TEST_CASE("load_split_files spans one vocabulary over the trio") {
        const std::string tr = write_file("trio_train.tsv", "a\tr\tb\nb\tr\tc\n");
        const std::string va = write_file("trio_valid.tsv", "c\tr\td\n");
        const std::string te = write_file("trio_test.tsv", "d\ts\ta\n");
        auto [g, splits] = load_split_files(tr, va, te);
        CHECK(g.entity_count() == 4);
        CHECK(g.relation_count() == 2);
        CHECK(splits.train.size() == 2);
        CHECK(splits.valid.size() == 1);
        CHECK(splits.test.size() == 1);
        CHECK(splits.test[0] == Triplet{3, 1, 0});
    }

    TEST_CASE("split_dataset sizes: remainder goes to train") {
        KnowledgeGraph g;
        g.entities.add("x");
        g.relations.add("r");
        auto fill = [&](size_t n) {
            g.triplets.clear();
            for (size_t i = 0; i < n; ++i)
                g.triplets.push_back({static_cast<int32_t>(i % 7), 0, static_cast<int32_t>(i)});
        };

        fill(10);
        SplitDataset s = split_dataset(g, {0.6, 0.2, 0.2}, 1);
        CHECK(s.train.size() == 6);
        CHECK(s.valid.size() == 2);
        CHECK(s.test.size() == 2);

        fill(12780);
        s = split_dataset(g, {0.6, 0.2, 0.2}, 1);
        CHECK(s.train.size() == 7668);
        CHECK(s.valid.size() == 2556);
        CHECK(s.test.size() == 2556);
    }

    TEST_CASE("split_dataset is a seed-determined partition") {
        KnowledgeGraph g;
        g.entities.add("x");
        g.relations.add("r");
        for (int i = 0; i < 50; ++i) g.triplets.push_back({i, 0, (i * 3) % 50});

        SplitDataset a = split_dataset(g, {0.8, 0.1, 0.1}, 9);
        SplitDataset b = split_dataset(g, {0.8, 0.1, 0.1}, 9);
        CHECK(a.train == b.train);
        CHECK(a.valid == b.valid);
        CHECK(a.test == b.test);

        // Every triplet lands in exactly one split.
        std::set<std::array<int32_t, 3>> all;
        for (const auto* part : {&a.train, &a.valid, &a.test})
            for (const Triplet& t : *part) CHECK(all.insert({t.head, t.relation, t.tail}).second);
        CHECK(all.size() == g.triplets.size());

        SplitDataset c = split_dataset(g, {0.8, 0.1, 0.1}, 10);
        CHECK(c.train != a.train);
    }

    TEST_CASE("split_dataset rejects degenerate ratios") {
        KnowledgeGraph g;
        g.triplets.push_back({0, 0, 0});
        CHECK_THROWS_AS(split_dataset(g, {0.0, 0.0, 0.0}, 1), ConfigError);
        CHECK_THROWS_AS(split_dataset(g, {-0.5, 1.0, 0.5}, 1), ConfigError);
    }

    TEST_CASE("alignment load keeps known pairs and counts skipped ones") {
        Vocab teacher, target;
        teacher.add("t0");
        teacher.add("t1");
        target.add("s0");
        target.add("s1");
        const std::string path =
            write_file("align.tsv", "t0\ts1\nt1\tmissing\nghost\ts0\nt1\ts0\n");
        AlignmentSet a = load_alignment(path, teacher, target);
        REQUIRE(a.pairs.size() == 2);
        CHECK(a.pairs[0] == std::pair<int32_t, int32_t>{0, 1});
        CHECK(a.pairs[1] == std::pair<int32_t, int32_t>{1, 0});
        CHECK(a.skipped_unknown == 2);
        CHECK(a.by_target.at(1) == std::vector<int32_t>{0});
    }

    TEST_CASE("alignment with several teachers per target keeps every pair") {
        AlignmentSet a = make_alignment({{0, 5}, {1, 5}, {2, 6}});
        CHECK(a.pairs.size() == 3);
        CHECK(a.by_target.at(5) == std::vector<int32_t>{0, 1});
    }

    TEST_CASE("empty alignment is an AlignmentError") {
        Vocab teacher, target;
        teacher.add("t0");
        target.add("s0");
        const std::string path = write_file("align_empty.tsv", "nope\tnope\n");
        CHECK_THROWS_AS(load_alignment(path, teacher, target), AlignmentError);
        CHECK_THROWS_AS(make_alignment({}), AlignmentError);
    }

    TEST_CASE("embedding dump round-trips and reorders to the reader's vocabulary") {
        Vocab v;
        v.add("apple");
        v.add("pear");
        v.add("plum");
        Matrix m(3, 2);
        m.at(0, 0) = 0.125;
        m.at(0, 1) = -1.0 / 3.0;
        m.at(1, 0) = 2e-17;
        m.at(1, 1) = 4.0;
        m.at(2, 0) = -5.5;
        m.at(2, 1) = 0.1;
        const std::string path = (scratch_dir() / "dump.tsv").string();
        save_embedding_dump(m, v, path);

        TeacherEmbeddings same = load_teacher_embeddings(path, v);
        CHECK(same.matrix == m);
        CHECK(same.dim == 2);

        // A permuted reader vocabulary gets rows in its own order.
        Vocab shuffled;
        shuffled.add("plum");
        shuffled.add("apple");
        shuffled.add("pear");
        TeacherEmbeddings re = load_teacher_embeddings(path, shuffled);
        CHECK(std::vector<double>(re.matrix.row(0).begin(), re.matrix.row(0).end()) ==
              std::vector<double>(m.row(2).begin(), m.row(2).end()));
        CHECK(std::vector<double>(re.matrix.row(1).begin(), re.matrix.row(1).end()) ==
              std::vector<double>(m.row(0).begin(), m.row(0).end()));

        auto [own, own_vocab] = load_teacher_dump(path);
        CHECK(own.matrix == m);
        CHECK(own_vocab == v);

        Vocab wider = v;
        wider.add("quince");
        CHECK_THROWS_WITH_AS(load_teacher_embeddings(path, wider), doctest::Contains("quince"),
                             VocabError);
    }

    TEST_CASE("dump section reader flags malformed headers and rows") {
        {
            std::istringstream in("ENT 2 2\na\t1 2\n");  // one row short
            int line_no = 0;
            CHECK_THROWS_AS(read_dump_section(in, "short", line_no, "ENT"), ParseError);
        }
        {
            std::istringstream in("WRONG 1 2\na\t1 2\n");
            int line_no = 0;
            CHECK_THROWS_AS(read_dump_section(in, "tag", line_no, "ENT"), ParseError);
        }
        {
            std::istringstream in("ENT 1 2\na\t1 notanumber\n");
            int line_no = 0;
            CHECK_THROWS_AS(read_dump_section(in, "value", line_no, "ENT"), ParseError);
        }
        {
            std::istringstream in("ENT 1 2\na\t1 inf\n");
            int line_no = 0;
            CHECK_THROWS_AS(read_dump_section(in, "nonfinite", line_no, "ENT"), ParseError);
        }
    }

    TEST_CASE("filter index agrees with a linear membership scan") {
        RngStream rng(77);
        SplitDataset splits;
        auto draw = [&] {
            return Triplet{static_cast<int32_t>(rng.uniform_below(12)),
                           static_cast<int32_t>(rng.uniform_below(3)),
                           static_cast<int32_t>(rng.uniform_below(12))};
        };
        for (int i = 0; i < 30; ++i) splits.train.push_back(draw());
        for (int i = 0; i < 10; ++i) splits.valid.push_back(draw());
        for (int i = 0; i < 10; ++i) splits.test.push_back(draw());

        FilterIndex filter = build_filter_index(splits);
        auto known = [&](const Triplet& q) {
            for (const auto* part : {&splits.train, &splits.valid, &splits.test})
                for (const Triplet& t : *part)
                    if (t == q) return true;
            return false;
        };
        for (int i = 0; i < 200; ++i) {
            Triplet q = draw();
            CHECK(filter.head_known(q.head, q.relation, q.tail) == known(q));
            CHECK(filter.tail_known(q.head, q.relation, q.tail) == known(q));
        }
    }
}

TEST_SUITE("io_checkpoint") {
    TEST_CASE("checkpoint round-trips every field bitwise") {
        RngStream rng(31);
        Checkpoint ckpt;
        ckpt.table = EmbeddingTable(ModelKind::ComplEx, 5, 2, 6);
        for (double& x : ckpt.table.entities.data) x = rng.gaussian();
        for (double& x : ckpt.table.relations.data) x = rng.gaussian();
        for (int i = 0; i < 5; ++i) ckpt.entities.add("ent/" + std::to_string(i));
        ckpt.relations.add("likes");
        ckpt.relations.add("made of");
        ckpt.norm = Norm::L2;
        ckpt.gamma = 7.25;
        ckpt.step = 1234567;
        ckpt.limit = 3;

        const std::string path = (scratch_dir() / "model.ckpt").string();
        save_checkpoint(ckpt, path);
        Checkpoint back = load_checkpoint(path);
        CHECK(back.table.kind == ckpt.table.kind);
        CHECK(back.table.dim == ckpt.table.dim);
        CHECK(back.table.entities == ckpt.table.entities);
        CHECK(back.table.relations == ckpt.table.relations);
        CHECK(back.entities == ckpt.entities);
        CHECK(back.relations == ckpt.relations);
        CHECK(back.norm == ckpt.norm);
        CHECK(back.gamma == ckpt.gamma);
        CHECK(back.step == ckpt.step);
        CHECK(back.limit == ckpt.limit);

        // Re-saving the loaded model reproduces the file byte for byte.
        const std::string path2 = (scratch_dir() / "model2.ckpt").string();
        save_checkpoint(back, path2);
        CHECK(slurp(path) == slurp(path2));
    }

    TEST_CASE("checkpoint loader rejects unknown keys and truncation") {
        const std::string bad_key = write_file(
            "bad_key.ckpt", "ATRANSN-CKPT 1\nkind transe\nnorm l1\ngamma 1\nsteps 4\nlimit 0\n");
        CHECK_THROWS_AS(load_checkpoint(bad_key), ParseError);

        const std::string bad_magic = write_file("bad_magic.ckpt", "NOPE 1\n");
        CHECK_THROWS_AS(load_checkpoint(bad_magic), ParseError);

        const std::string truncated =
            write_file("trunc.ckpt",
                       "ATRANSN-CKPT 1\nkind transe\nnorm l1\ngamma 1\nstep 4\nlimit 0\n"
                       "ENT 2 2\na\t1 2\n");
        CHECK_THROWS_AS(load_checkpoint(truncated), ParseError);

        CHECK_THROWS_AS(load_checkpoint((scratch_dir() / "does_not_exist.ckpt").string()),
                        IoError);
    }

    TEST_CASE("norm names round-trip and reject junk") {
        CHECK(norm_from_string("l1") == Norm::L1);
        CHECK(norm_from_string("l2") == Norm::L2);
        CHECK(to_string(Norm::L1) == "l1");
        CHECK(to_string(Norm::L2) == "l2");
        CHECK_THROWS_AS(norm_from_string("linf"), ConfigError);
    }
}

TEST_SUITE("io_config") {
    TEST_CASE("full config parses and round-trips through serialization") {
        const std::string text = R"({
            "kind": "rotate", "mode": "atransn", "norm": "l1",
            "dim": 24, "gamma": 6.5, "alpha": 0.4, "beta": 0.25,
            "lr_e": 0.01, "lr_a": 0.002, "k": 4, "n_l": 32, "n_a": 16,
            "t_l": 500, "t_g": 2, "t_d": 3,
            "warmup_fraction": 0.1, "anneal_cycles": 4, "lambda_g": 0.5,
            "seed": 99, "epochs_max": 12, "eval_every": 50,
            "init_eps": 2.0, "transfer_cap": 8,
            "constant_weights": true, "w_mid_activation": false,
            "leaky_slope": 0.2, "tie_policy": "mean",
            "full_c_distance": true, "parallel": false,
            "train_path": "train.tsv", "valid_path": "valid.tsv",
            "test_path": "test.tsv", "teacher_triplets_path": ""
        })";
        RunConfig cfg = parse_run_config(text);
        CHECK(cfg.train.kind == ModelKind::RotatE);
        CHECK(cfg.train.mode == Mode::ATransN);
        CHECK(cfg.train.norm == Norm::L1);  // explicit key beats the rotate default
        CHECK(cfg.train.dim == 24);
        CHECK(cfg.train.gamma == 6.5);
        CHECK(cfg.train.alpha == 0.4);
        CHECK(cfg.train.beta == 0.25);
        CHECK(cfg.train.k == 4);
        CHECK(cfg.train.n_l == 32);
        CHECK(cfg.train.n_a == 16);
        CHECK(cfg.train.t_l == 500);
        CHECK(cfg.train.t_g == 2);
        CHECK(cfg.train.t_d == 3);
        CHECK(cfg.train.warmup_fraction == 0.1);
        CHECK(cfg.train.anneal_cycles == 4);
        CHECK(cfg.train.lambda_g == 0.5);
        CHECK(cfg.train.seed == 99);
        CHECK(cfg.train.epochs_max == 12);
        CHECK(cfg.train.eval_every == 50);
        CHECK(cfg.train.transfer_cap == 8);
        CHECK(cfg.train.constant_weights);
        CHECK_FALSE(cfg.train.w_mid_activation);
        CHECK(cfg.train.leaky_slope == 0.2);
        CHECK(cfg.train.tie_policy == TiePolicy::Mean);
        CHECK(cfg.train.full_c_distance);
        CHECK(cfg.train_path == "train.tsv");

        RunConfig again = parse_run_config(config_to_json(cfg));
        CHECK(config_to_json(again) == config_to_json(cfg));
    }

    TEST_CASE("unknown keys and type mismatches are named ConfigErrors") {
        CHECK_THROWS_WITH_AS(parse_run_config(R"({"gama": 1.0})"),
                             doctest::Contains("unknown config key 'gama'"), ConfigError);
        CHECK_THROWS_WITH_AS(parse_run_config(R"({"dim": "twelve"})"), doctest::Contains("dim"),
                             ConfigError);
        CHECK_THROWS_WITH_AS(parse_run_config(R"({"dim": 2.5})"), doctest::Contains("dim"),
                             ConfigError);
        CHECK_THROWS_WITH_AS(parse_run_config(R"({"constant_weights": 1})"),
                             doctest::Contains("constant_weights"), ConfigError);
        CHECK_THROWS_WITH_AS(parse_run_config(R"({"seed": -4})"), doctest::Contains("seed"),
                             ConfigError);
        CHECK_THROWS_AS(parse_run_config("[1,2]"), ConfigError);
        CHECK_THROWS_AS(parse_run_config("{not json"), ParseError);
    }

    TEST_CASE("norm defaults follow the model kind") {
        CHECK(parse_run_config(R"({"kind": "transe"})").train.norm == Norm::L1);
        CHECK(parse_run_config(R"({"kind": "distmult"})").train.norm == Norm::L1);
        CHECK(parse_run_config(R"({"kind": "rotate"})").train.norm == Norm::L2);
        CHECK(parse_run_config(R"({"kind": "rotate", "norm": "l1"})").train.norm == Norm::L1);
    }

    TEST_CASE("out-of-range values fail TrainingConfig validation") {
        CHECK_THROWS_AS(parse_run_config(R"({"k": 0})"), ConfigError);
        CHECK_THROWS_AS(parse_run_config(R"({"gamma": -1.0})"), ConfigError);
        CHECK_THROWS_AS(parse_run_config(R"({"warmup_fraction": 1.0})"), ConfigError);
        CHECK_THROWS_AS(parse_run_config(R"({"anneal_cycles": 0})"), ConfigError);
    }

    TEST_CASE("load_run_config resolves paths relative to the file") {
        const std::string path = write_file(
            "cfg.json", R"({"dim": 4, "train_path": "data/train.tsv", "valid_path": ""})");
        RunConfig cfg = load_run_config(path);
        CHECK(cfg.train.dim == 4);
        CHECK(fs::path(cfg.train_path) == scratch_dir() / "data" / "train.tsv");
        CHECK(cfg.valid_path.empty());
    }
}

TEST_SUITE("io_manifest") {
    TEST_CASE("manifest round-trips command, seed, inputs and artifacts") {
        const std::string input = write_file("manifest_input.txt", "payload\n");
        RunManifest m;
        m.command = {"atransn", "train", "--config", "cfg.json"};
        m.seed = 42;
        m.config_json = R"({"dim": 4})";
        m.inputs.emplace_back(input, digest_hex(fnv1a_file(input)));
        m.artifacts.emplace_back("checkpoint", "out/model.ckpt");

        const std::string path = (scratch_dir() / "manifest.json").string();
        write_manifest(m, path);
        RunManifest back = load_manifest(path);
        CHECK(back.tool_version == kToolVersion);
        CHECK(back.command == m.command);
        CHECK(back.seed == 42);
        CHECK(back.inputs == m.inputs);
        CHECK(back.artifacts == m.artifacts);
    }

    TEST_CASE("file digest is stable and content-sensitive") {
        const std::string a = write_file("digest_a.txt", "alpha beta\n");
        const std::string b = write_file("digest_b.txt", "alpha beta\n");
        const std::string c = write_file("digest_c.txt", "alpha betA\n");
        CHECK(fnv1a_file(a) == fnv1a_file(b));
        CHECK(fnv1a_file(a) != fnv1a_file(c));
        CHECK(digest_hex(fnv1a_file(a)).rfind("fnv1a:", 0) == 0);
        CHECK(digest_hex(fnv1a_file(a)).size() == 6 + 16);
        CHECK_THROWS_AS(fnv1a_file((scratch_dir() / "missing.bin").string()), IoError);
    }
}
