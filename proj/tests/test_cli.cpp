#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atransn/checkpoint.hpp"
#include "atransn/graph_data.hpp"
#include "doctest.h"
#include "json.hpp"

// End-to-end tests of the command-line binary (path injected by the
// build as ATRANSN_BIN). One shared environment carries the synthetic
// dataset and a trained teacher through the dependent cases.

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

fs::path scratch() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "atransn_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string out_file = (scratch() / "last_output.txt").string();
    const std::string cmd =
        std::string(ATRANSN_BIN) + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) {
        std::ifstream in(out_file);
        std::ostringstream ss;
        ss << in.rdbuf();
        *output = ss.str();
    }
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

Json load_json(const fs::path& p) { return Json::parse(slurp(p)); }

size_t line_count(const std::string& text) {
    size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::string strip_wall_ms(const std::string& jsonl) {
    static const std::regex wall(R"("wall_ms":[^,}]*)");
    return std::regex_replace(jsonl, wall, R"("wall_ms":0)");
}

// Dataset + trained teacher + exported dump, built once.
struct Env {
    fs::path data = scratch() / "data";
    fs::path teacher_run = scratch() / "teacher_run";
    fs::path teacher_dump = scratch() / "teacher_dump";
    fs::path teacher_cfg = scratch() / "teacher.json";
    fs::path target_cfg = scratch() / "target.json";

    static const Env& get() {
        static Env env;
        return env;
    }

private:
    Env() {
        REQUIRE(run_cli("synth --out " + data.string() +
                        " --entities 60 --relations 4 --triplets 400 --seed 5") == 0);
        write_file(teacher_cfg, R"({
            "kind": "transe", "mode": "plain", "dim": 16, "gamma": 4.0,
            "lr_e": 0.02, "k": 4, "n_l": 64, "epochs_max": 5, "seed": 3,
            "train_path": "data/teacher-train.tsv",
            "valid_path": "data/teacher-valid.tsv",
            "test_path": "data/teacher-test.tsv"
        })");
        write_file(target_cfg, R"({
            "kind": "transe", "mode": "atransn", "dim": 12, "gamma": 4.0,
            "alpha": 0.5, "beta": 0.25, "lr_e": 0.02, "lr_a": 0.01,
            "k": 4, "n_l": 32, "n_a": 16, "t_g": 1, "t_d": 1,
            "epochs_max": 4, "seed": 7,
            "train_path": "data/target-train.tsv",
            "valid_path": "data/target-valid.tsv",
            "test_path": "data/target-test.tsv"
        })");
        REQUIRE(run_cli("train-teacher --config " + teacher_cfg.string() + " --out " +
                        teacher_run.string()) == 0);
        REQUIRE(run_cli("export " + (teacher_run / "checkpoint.ckpt").string() + " --out " +
                        teacher_dump.string()) == 0);
    }
};

std::string train_target_cmd(const Env& env, const fs::path& out_dir) {
    return "train-target --config " + env.target_cfg.string() + " --teacher-emb " +
           (env.teacher_dump / "embeddings.tsv").string() + " --align " +
           (env.data / "align-1.tsv").string() + " --out " + out_dir.string();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("synth writes nested alignments and consistent split files") {
        const Env& env = Env::get();
        for (const char* name :
             {"teacher-train.tsv", "teacher-valid.tsv", "teacher-test.tsv",
              "target-train.tsv", "target-valid.tsv", "target-test.tsv", "align-0.25.tsv",
              "align-0.5.tsv", "align-1.tsv", "manifest.json"}) {
            CAPTURE(name);
            CHECK(fs::exists(env.data / name));
        }

        auto align_lines = [&](const char* name) {
            std::set<std::string> lines;
            std::ifstream in(env.data / name);
            std::string line;
            while (std::getline(in, line))
                if (!line.empty()) lines.insert(line);
            return lines;
        };
        std::set<std::string> a25 = align_lines("align-0.25.tsv");
        std::set<std::string> a50 = align_lines("align-0.5.tsv");
        std::set<std::string> a100 = align_lines("align-1.tsv");
        CHECK(!a25.empty());
        CHECK(a25.size() < a50.size());
        CHECK(a50.size() < a100.size());
        CHECK(std::includes(a50.begin(), a50.end(), a25.begin(), a25.end()));
        CHECK(std::includes(a100.begin(), a100.end(), a50.begin(), a50.end()));

        // Full-overlap alignment covers every entity in the target view.
        auto [graph, splits] = atransn::load_split_files(
            (env.data / "target-train.tsv").string(), (env.data / "target-valid.tsv").string(),
            (env.data / "target-test.tsv").string());
        CHECK(a100.size() == static_cast<size_t>(graph.entity_count()));
    }

    TEST_CASE("teacher training writes the full artifact set and learns the task") {
        const Env& env = Env::get();
        for (const char* name : {"checkpoint.ckpt", "log.jsonl", "metrics.json",
                                 "manifest.json"}) {
            CAPTURE(name);
            CHECK(fs::exists(env.teacher_run / name));
        }
        Json metrics = load_json(env.teacher_run / "metrics.json");
        CHECK(metrics.at("mrr").get<double>() > 0.2);  // far above the ~1/60 random floor
        CHECK(metrics.at("n_queries").get<int64_t>() > 0);
        CHECK(metrics.contains("selection"));
        CHECK(metrics.contains("best_step"));

        // One log line per outer step, each carrying a finite loss.
        const std::string log = slurp(env.teacher_run / "log.jsonl");
        size_t steps = line_count(log);
        CHECK(steps > 0);
        std::istringstream in(log);
        std::string line;
        while (std::getline(in, line)) {
            Json entry = Json::parse(line);
            CHECK(std::isfinite(entry.at("loss_e").get<double>()));
            CHECK(entry.at("loss_d").get<double>() == 0.0);  // plain mode: no adversary
        }
    }

    TEST_CASE("export emits a reloadable dump, relations only on request") {
        const Env& env = Env::get();
        const std::string dump = slurp(env.teacher_dump / "embeddings.tsv");
        CHECK(dump.rfind("ENT ", 0) == 0);
        CHECK(dump.find("\nREL ") == std::string::npos);

        // The dump round-trips the checkpoint's entity table bitwise.
        atransn::Checkpoint ckpt =
            atransn::load_checkpoint((env.teacher_run / "checkpoint.ckpt").string());
        auto [emb, vocab] =
            atransn::load_teacher_dump((env.teacher_dump / "embeddings.tsv").string());
        CHECK(emb.matrix == ckpt.table.entities);
        CHECK(vocab == ckpt.entities);

        fs::path with_rel = scratch() / "teacher_dump_rel";
        REQUIRE(run_cli("export " + (env.teacher_run / "checkpoint.ckpt").string() +
                        " --include-relations --out " + with_rel.string()) == 0);
        CHECK(slurp(with_rel / "embeddings.tsv").find("\nREL ") != std::string::npos);
    }

    TEST_CASE("target training, evaluation, and rank dumps agree with each other") {
        const Env& env = Env::get();
        fs::path run = scratch() / "target_run";
        REQUIRE(run_cli(train_target_cmd(env, run)) == 0);
        Json train_metrics = load_json(run / "metrics.json");

        fs::path eval_dir = scratch() / "eval_valid";
        std::string out;
        REQUIRE(run_cli("eval " + (run / "checkpoint.ckpt").string() + " --config " +
                        env.target_cfg.string() + " --split valid --out " + eval_dir.string(),
                        &out) == 0);
        Json eval_metrics = load_json(eval_dir / "metrics.json");

        // The checkpoint is the best-validation snapshot; re-evaluating it
        // on valid reproduces the training-time numbers exactly.
        CHECK(eval_metrics.at("mr") == train_metrics.at("mr"));
        CHECK(eval_metrics.at("mrr") == train_metrics.at("mrr"));
        CHECK(eval_metrics.at("selection") == train_metrics.at("selection"));
        CHECK(eval_metrics.at("split") == "valid");

        // ranks.csv: one header plus one row per valid triplet.
        atransn::KnowledgeGraph valid =
            atransn::load_triplets((env.data / "target-valid.tsv").string());
        const std::string csv = slurp(eval_dir / "ranks.csv");
        CHECK(line_count(csv) == valid.triplets.size() + 1);
        CHECK(csv.rfind("head,relation,tail,head_rank,tail_rank", 0) == 0);

        fs::path eval_test = scratch() / "eval_test";
        REQUIRE(run_cli("eval " + (run / "checkpoint.ckpt").string() + " --config " +
                        env.target_cfg.string() + " --split test --out " +
                        eval_test.string()) == 0);
        Json test_metrics = load_json(eval_test / "metrics.json");
        CHECK(test_metrics.at("split") == "test");
        atransn::KnowledgeGraph test_graph =
            atransn::load_triplets((env.data / "target-test.tsv").string());
        CHECK(test_metrics.at("n_queries").get<int64_t>() ==
              static_cast<int64_t>(2 * test_graph.triplets.size()));
    }

    TEST_CASE("identical invocations reproduce every artifact bit for bit") {
        const Env& env = Env::get();
        fs::path run1 = scratch() / "repro_a";
        fs::path run2 = scratch() / "repro_b";
        REQUIRE(run_cli(train_target_cmd(env, run1)) == 0);
        REQUIRE(run_cli(train_target_cmd(env, run2)) == 0);
        CHECK(slurp(run1 / "checkpoint.ckpt") == slurp(run2 / "checkpoint.ckpt"));
        CHECK(slurp(run1 / "metrics.json") == slurp(run2 / "metrics.json"));
        CHECK(strip_wall_ms(slurp(run1 / "log.jsonl")) ==
              strip_wall_ms(slurp(run2 / "log.jsonl")));
    }

    TEST_CASE("report tabulates metric files and can plot them") {
        const Env& env = Env::get();
        fs::path run = scratch() / "target_run";  // from the earlier case
        REQUIRE(fs::exists(run / "metrics.json"));
        fs::path eval_dir = scratch() / "eval_valid";
        fs::path report_dir = scratch() / "report";

        std::string out;
        const std::string files = (env.teacher_run / "metrics.json").string() + " " +
                                  (run / "metrics.json").string() + " " +
                                  (eval_dir / "metrics.json").string();
        REQUIRE(run_cli("report " + files + " --out " + report_dir.string() + " --plot",
                        &out) == 0);
        CHECK(line_count(out) == 4);  // header + one row per file
        CHECK(out.rfind("file,mr,mrr,hits1,hits3,hits10,n_queries", 0) == 0);
        CHECK(slurp(report_dir / "report.csv") == out);
        CHECK(slurp(report_dir / "report.svg").find("<svg") != std::string::npos);
    }

    TEST_CASE("bad inputs exit with code 2") {
        const Env& env = Env::get();

        fs::path bad_cfg = scratch() / "bad.json";
        write_file(bad_cfg, R"({"dim": 8, "gama": 1.0})");
        std::string out;
        CHECK(run_cli("train-teacher --config " + bad_cfg.string() + " --out " +
                      (scratch() / "bad_run").string(), &out) == 2);
        CHECK(out.find("unknown config key 'gama'") != std::string::npos);

        // Evaluating against data with labels the checkpoint never saw.
        fs::path alien = scratch() / "alien.tsv";
        write_file(alien, "nobody\tteacher0\tnoone\n");
        fs::path alien_cfg = scratch() / "alien.json";
        write_file(alien_cfg, R"({
            "kind": "transe", "dim": 16, "gamma": 4.0,
            "train_path": "data/teacher-train.tsv",
            "valid_path": "alien.tsv",
            "test_path": "data/teacher-test.tsv"
        })");
        CHECK(run_cli("eval " + (env.teacher_run / "checkpoint.ckpt").string() + " --config " +
                      alien_cfg.string() + " --split valid", &out) == 2);

        // Metrics file missing a required key.
        fs::path short_metrics = scratch() / "short.json";
        write_file(short_metrics, R"({"mr": 5.0, "mrr": 0.2})");
        CHECK(run_cli("report " + short_metrics.string(), &out) == 2);
        CHECK(out.find("hits1") != std::string::npos);

        // --plot needs --out to hold the SVG.
        CHECK(run_cli("report " + (env.teacher_run / "metrics.json").string() + " --plot",
                      &out) == 2);

        // Overlap ratios must sit in (0, 1].
        CHECK(run_cli("synth --out " + (scratch() / "bad_synth").string() +
                      " --ratios 0,0.5", &out) == 2);

        // Plain mode must not be handed teacher embeddings.
        fs::path plain_cfg = scratch() / "plain.json";
        write_file(plain_cfg, R"({
            "kind": "transe", "mode": "plain", "dim": 12, "gamma": 4.0,
            "epochs_max": 1,
            "train_path": "data/target-train.tsv",
            "valid_path": "data/target-valid.tsv",
            "test_path": "data/target-test.tsv"
        })");
        CHECK(run_cli("train-target --config " + plain_cfg.string() + " --teacher-emb " +
                      (env.teacher_dump / "embeddings.tsv").string() + " --align " +
                      (env.data / "align-1.tsv").string() + " --out " +
                      (scratch() / "plain_run").string(), &out) == 2);
    }
}
