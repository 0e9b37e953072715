#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "atransn/checkpoint.hpp"
#include "atransn/config.hpp"
#include "atransn/manifest.hpp"
#include "atransn/synth.hpp"
#include "atransn/trainer.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::vector<std::string> g_argv;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw atransn::IoError("cannot write " + path);
    out << content;
    if (!out) throw atransn::IoError("short write: " + path);
}

Json metrics_to_json(const atransn::RankingMetrics& m) {
    Json j;
    j["mr"] = m.mr;
    j["mrr"] = m.mrr;
    j["hits1"] = m.hits1;
    j["hits3"] = m.hits3;
    j["hits10"] = m.hits10;
    j["n_queries"] = m.n_queries;
    return j;
}

std::string log_to_jsonl(const std::vector<atransn::StepLog>& log) {
    std::string out;
    for (const atransn::StepLog& e : log) {
        Json j;
        j["step"] = e.step;
        j["epoch"] = e.epoch;
        j["loss_e"] = e.loss_e;
        j["loss_d"] = e.loss_d;
        j["loss_g"] = e.loss_g;
        j["alpha_t"] = e.alpha_t;
        j["beta_t"] = e.beta_t;
        j["lr_t"] = e.lr_t;
        j["mean_consistency_weight"] = e.mean_consistency_weight;
        j["wall_ms"] = e.wall_ms;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void add_input(atransn::RunManifest& m, const std::string& path) {
    if (path.empty()) return;
    m.inputs.emplace_back(path, atransn::digest_hex(atransn::fnv1a_file(path)));
}

struct TrainArgs {
    std::string config_path;
    std::string out_dir;
    std::string mode;
    int64_t seed = -1;
    std::vector<std::string> teacher_embs;
    std::vector<std::string> aligns;
};

atransn::SplitDataset load_config_splits(const atransn::RunConfig& rc,
                                         atransn::KnowledgeGraph& graph) {
    if (rc.train_path.empty() || rc.valid_path.empty() || rc.test_path.empty()) {
        throw atransn::ConfigError("config must set train_path, valid_path and test_path");
    }
    auto [g, splits] = atransn::load_split_files(rc.train_path, rc.valid_path, rc.test_path);
    graph = std::move(g);
    return splits;
}

int cmd_train(const TrainArgs& args, bool teacher_mode) {
    atransn::RunConfig rc = atransn::load_run_config(args.config_path);
    if (args.seed >= 0) rc.train.seed = static_cast<uint64_t>(args.seed);
    if (teacher_mode) {
        rc.train.mode = atransn::Mode::Plain;
    } else if (!args.mode.empty()) {
        rc.train.mode = atransn::mode_from_string(args.mode);
    }

    atransn::KnowledgeGraph graph;
    atransn::SplitDataset splits = load_config_splits(rc, graph);

    std::vector<atransn::TeacherInput> teachers;
    std::optional<atransn::JointSource> joint;
    const atransn::Mode mode = rc.train.mode;
    if (mode == atransn::Mode::ATransN || mode == atransn::Mode::CTransE) {
        if (args.teacher_embs.empty()) {
            throw atransn::ConfigError(atransn::to_string(mode) +
                                       " mode needs at least one --teacher-emb");
        }
        if (args.aligns.size() != args.teacher_embs.size()) {
            throw atransn::ConfigError("--align files must pair up with --teacher-emb files");
        }
        for (size_t i = 0; i < args.teacher_embs.size(); ++i) {
            auto [emb, teacher_vocab] = atransn::load_teacher_dump(args.teacher_embs[i]);
            atransn::AlignmentSet alignment =
                atransn::load_alignment(args.aligns[i], teacher_vocab, graph.entities);
            teachers.push_back({std::move(emb), std::move(alignment)});
        }
    } else if (mode == atransn::Mode::Joint) {
        if (rc.teacher_triplets_path.empty()) {
            throw atransn::ConfigError("joint mode needs teacher_triplets_path in the config");
        }
        if (args.aligns.size() != 1) {
            throw atransn::ConfigError("joint mode needs exactly one --align file");
        }
        atransn::KnowledgeGraph teacher_graph = atransn::load_triplets(rc.teacher_triplets_path);
        atransn::AlignmentSet alignment =
            atransn::load_alignment(args.aligns[0], teacher_graph.entities, graph.entities);
        joint = atransn::JointSource{std::move(teacher_graph), std::move(alignment)};
    } else if (!args.teacher_embs.empty() || !args.aligns.empty()) {
        throw atransn::ConfigError("plain mode takes no --teacher-emb or --align files");
    }

    atransn::Trainer trainer(rc.train, std::move(graph), std::move(splits), std::move(teachers),
                             std::move(joint));
    const atransn::TrainResult result = trainer.train();

    fs::create_directories(args.out_dir);
    const std::string ckpt_path = (fs::path(args.out_dir) / "checkpoint.ckpt").string();
    const std::string log_path = (fs::path(args.out_dir) / "log.jsonl").string();
    const std::string metrics_path = (fs::path(args.out_dir) / "metrics.json").string();
    const std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();

    atransn::Checkpoint ckpt;
    ckpt.table = result.table;
    ckpt.entities = result.entities;
    ckpt.relations = result.relations;
    ckpt.norm = rc.train.norm;
    ckpt.gamma = rc.train.gamma;
    ckpt.step = result.best_step;
    ckpt.limit = result.eval_candidate_limit;
    atransn::save_checkpoint(ckpt, ckpt_path);
    write_text_file(log_path, log_to_jsonl(result.log));

    Json metrics = metrics_to_json(result.best_valid);
    metrics["selection"] = result.best_selection;
    metrics["best_step"] = result.best_step;
    write_text_file(metrics_path, metrics.dump(2) + "\n");

    atransn::RunManifest manifest;
    manifest.command = g_argv;
    manifest.seed = rc.train.seed;
    manifest.config_json = atransn::config_to_json(rc);
    add_input(manifest, args.config_path);
    add_input(manifest, rc.train_path);
    add_input(manifest, rc.valid_path);
    add_input(manifest, rc.test_path);
    add_input(manifest, rc.teacher_triplets_path);
    for (const std::string& p : args.teacher_embs) add_input(manifest, p);
    for (const std::string& p : args.aligns) add_input(manifest, p);
    manifest.artifacts.emplace_back("checkpoint", ckpt_path);
    manifest.artifacts.emplace_back("log", log_path);
    manifest.artifacts.emplace_back("metrics", metrics_path);
    atransn::write_manifest(manifest, manifest_path);

    std::cout << "best step " << result.best_step << " selection "
              << result.best_selection << "\n"
              << metrics.dump() << "\n";
    return 0;
}

struct EvalArgs {
    std::string ckpt_path;
    std::string config_path;
    std::string split = "valid";
    std::string out_dir;
};

int cmd_eval(const EvalArgs& args) {
    const atransn::Checkpoint ckpt = atransn::load_checkpoint(args.ckpt_path);
    const atransn::RunConfig rc = atransn::load_run_config(args.config_path);
    if (rc.train_path.empty() || rc.valid_path.empty() || rc.test_path.empty()) {
        throw atransn::ConfigError("config must set train_path, valid_path and test_path");
    }

    // Frozen vocabulary: dataset labels must resolve to checkpoint rows.
    atransn::KnowledgeGraph frozen;
    frozen.entities = ckpt.entities;
    frozen.relations = ckpt.relations;
    atransn::SplitDataset splits;
    splits.train = atransn::load_triplets(rc.train_path, &frozen).triplets;
    splits.valid = atransn::load_triplets(rc.valid_path, &frozen).triplets;
    splits.test = atransn::load_triplets(rc.test_path, &frozen).triplets;
    const atransn::FilterIndex filter = atransn::build_filter_index(splits);

    if (args.split != "valid" && args.split != "test") {
        throw atransn::UsageError("--split must be valid or test");
    }
    const std::vector<atransn::Triplet>& eval_set =
        args.split == "valid" ? splits.valid : splits.test;

    const std::vector<atransn::RankPair> ranks =
        atransn::rank_all(eval_set, ckpt.table, filter, ckpt.norm, rc.train.tie_policy,
                          ckpt.limit, rc.train.parallel);
    const atransn::RankingMetrics metrics = atransn::metrics_from_ranks(ranks);

    Json j = metrics_to_json(metrics);
    j["split"] = args.split;
    j["selection"] = atransn::selection_score(metrics);
    std::cout << j.dump() << "\n";

    if (!args.out_dir.empty()) {
        fs::create_directories(args.out_dir);
        const std::string metrics_path = (fs::path(args.out_dir) / "metrics.json").string();
        const std::string ranks_path = (fs::path(args.out_dir) / "ranks.csv").string();
        const std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();
        write_text_file(metrics_path, j.dump(2) + "\n");

        std::string csv = "head,relation,tail,head_rank,tail_rank\n";
        char buf[64];
        for (size_t i = 0; i < eval_set.size(); ++i) {
            const atransn::Triplet& t = eval_set[i];
            csv += ckpt.entities.label(t.head);
            csv += ',';
            csv += ckpt.relations.label(t.relation);
            csv += ',';
            csv += ckpt.entities.label(t.tail);
            std::snprintf(buf, sizeof buf, ",%g,%g\n", ranks[i].head_rank, ranks[i].tail_rank);
            csv += buf;
        }
        write_text_file(ranks_path, csv);

        atransn::RunManifest manifest;
        manifest.command = g_argv;
        manifest.seed = rc.train.seed;
        manifest.config_json = atransn::config_to_json(rc);
        add_input(manifest, args.ckpt_path);
        add_input(manifest, args.config_path);
        add_input(manifest, rc.train_path);
        add_input(manifest, rc.valid_path);
        add_input(manifest, rc.test_path);
        manifest.artifacts.emplace_back("metrics", metrics_path);
        manifest.artifacts.emplace_back("ranks", ranks_path);
        atransn::write_manifest(manifest, manifest_path);
    }
    return 0;
}

struct ExportArgs {
    std::string ckpt_path;
    std::string out_dir;
    bool include_relations = false;
};

int cmd_export(const ExportArgs& args) {
    const atransn::Checkpoint ckpt = atransn::load_checkpoint(args.ckpt_path);
    fs::create_directories(args.out_dir);
    const std::string dump_path = (fs::path(args.out_dir) / "embeddings.tsv").string();
    const std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();
    if (args.include_relations) {
        atransn::save_embedding_dump(ckpt.table.entities, ckpt.entities, dump_path,
                                     &ckpt.table.relations, &ckpt.relations);
    } else {
        atransn::save_embedding_dump(ckpt.table.entities, ckpt.entities, dump_path);
    }

    atransn::RunManifest manifest;
    manifest.command = g_argv;
    add_input(manifest, args.ckpt_path);
    manifest.artifacts.emplace_back("embeddings", dump_path);
    atransn::write_manifest(manifest, manifest_path);
    std::cout << "exported " << ckpt.table.entities.rows << " entity rows to " << dump_path
              << "\n";
    return 0;
}

struct SynthArgs {
    std::string out_dir;
    int entities = 200;
    int relations = 8;
    int triplets = 2000;
    double target_fraction = 0.4;
    std::vector<double> ratios;
    int64_t seed = 7;
};

void save_split_triplets(const atransn::KnowledgeGraph& vocab_source,
                         const std::vector<atransn::Triplet>& triplets,
                         const std::string& path) {
    atransn::KnowledgeGraph view;
    view.entities = vocab_source.entities;
    view.relations = vocab_source.relations;
    view.triplets = triplets;
    atransn::save_triplets(view, path);
}

int cmd_synth(const SynthArgs& args) {
    atransn::SynthConfig cfg;
    cfg.n_entities = args.entities;
    cfg.n_relations = args.relations;
    cfg.n_triplets = args.triplets;
    cfg.target_fraction = args.target_fraction;
    cfg.seed = static_cast<uint64_t>(args.seed);
    std::vector<double> ratios = args.ratios;
    if (ratios.empty()) ratios = {0.25, 0.5, 1.0};

    const atransn::SynthWorld world = atransn::make_synth_world(cfg);
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);

    const auto path_of = [&out](const std::string& name) { return (out / name).string(); };
    save_split_triplets(world.world, world.teacher.train, path_of("teacher-train.tsv"));
    save_split_triplets(world.world, world.teacher.valid, path_of("teacher-valid.tsv"));
    save_split_triplets(world.world, world.teacher.test, path_of("teacher-test.tsv"));
    save_split_triplets(world.world, world.target.train, path_of("target-train.tsv"));
    save_split_triplets(world.world, world.target.valid, path_of("target-valid.tsv"));
    save_split_triplets(world.world, world.target.test, path_of("target-test.tsv"));

    atransn::RunManifest manifest;
    manifest.command = g_argv;
    manifest.seed = cfg.seed;
    std::vector<std::string> align_files;
    for (const double ratio : ratios) {
        const atransn::AlignmentSet alignment = atransn::alignment_at_ratio(world, ratio);
        char name[64];
        std::snprintf(name, sizeof name, "align-%g.tsv", ratio);
        const std::string align_path = path_of(name);
        std::string text;
        for (const auto& [teacher_id, target_id] : alignment.pairs) {
            text += world.world.entities.label(teacher_id);
            text += '\t';
            text += world.world.entities.label(target_id);
            text += '\n';
        }
        write_text_file(align_path, text);
        align_files.push_back(align_path);
    }

    for (const char* name : {"teacher-train.tsv", "teacher-valid.tsv", "teacher-test.tsv",
                             "target-train.tsv", "target-valid.tsv", "target-test.tsv"}) {
        manifest.artifacts.emplace_back(name, path_of(name));
    }
    for (const std::string& p : align_files) {
        manifest.artifacts.emplace_back(fs::path(p).filename().string(), p);
    }
    atransn::write_manifest(manifest, path_of("manifest.json"));
    std::cout << "synthetic world: " << world.world.entities.size() << " entities, "
              << world.world.relations.size() << " relations, " << world.world.triplets.size()
              << " triplets; " << ratios.size() << " alignment files\n";
    return 0;
}

struct ReportArgs {
    std::vector<std::string> metric_files;
    std::string out_dir;
    bool plot = false;
};

// Minimal static line chart: one polyline per metric over file order.
std::string render_svg(const std::vector<std::string>& names,
                       const std::vector<std::array<double, 4>>& rows) {
    const int width = 640, height = 400, margin = 50;
    const int plot_w = width - 2 * margin, plot_h = height - 2 * margin;
    const char* metric_names[4] = {"mrr", "hits1", "hits3", "hits10"};
    const char* colors[4] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
    const size_t n = rows.size();

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
        << "' y2='" << height - margin << "' stroke='black'/>\n";
    svg << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << height - margin << "' stroke='black'/>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = tick / 5.0;
        const double y = height - margin - v * plot_h;
        svg << "<text x='" << margin - 8 << "' y='" << y + 4
            << "' font-size='11' text-anchor='end'>" << v << "</text>\n";
    }
    const auto x_of = [&](size_t i) {
        return n > 1 ? margin + static_cast<double>(i) * plot_w / static_cast<double>(n - 1)
                     : margin + plot_w / 2.0;
    };
    for (size_t i = 0; i < n; ++i) {
        svg << "<text x='" << x_of(i) << "' y='" << height - margin + 16
            << "' font-size='11' text-anchor='middle'>" << names[i] << "</text>\n";
    }
    for (int m = 0; m < 4; ++m) {
        svg << "<polyline fill='none' stroke='" << colors[m] << "' stroke-width='2' points='";
        for (size_t i = 0; i < n; ++i) {
            const double y = height - margin - rows[i][static_cast<size_t>(m)] * plot_h;
            svg << x_of(i) << ',' << y << ' ';
        }
        svg << "'/>\n";
        svg << "<text x='" << width - margin + 4 << "' y='" << margin + 16 * m
            << "' font-size='11' fill='" << colors[m] << "'>" << metric_names[m] << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

int cmd_report(const ReportArgs& args) {
    const char* required[5] = {"mr", "mrr", "hits1", "hits3", "hits10"};
    std::string csv = "file,mr,mrr,hits1,hits3,hits10,n_queries\n";
    std::vector<std::string> names;
    std::vector<std::array<double, 4>> plot_rows;
    for (const std::string& file : args.metric_files) {
        std::ifstream in(file);
        if (!in) throw atransn::IoError("cannot open metrics file: " + file);
        std::ostringstream buf;
        buf << in.rdbuf();
        Json j;
        try {
            j = Json::parse(buf.str());
        } catch (const Json::parse_error& e) {
            throw atransn::ParseError(file + ": " + e.what());
        }
        for (const char* key : required) {
            if (!j.contains(key) || !j[key].is_number()) {
                throw atransn::ParseError(file + ": missing metric key '" + key + "'");
            }
        }
        char buf2[256];
        std::snprintf(buf2, sizeof buf2, "%s,%g,%g,%g,%g,%g,%lld\n", file.c_str(),
                      j["mr"].get<double>(), j["mrr"].get<double>(), j["hits1"].get<double>(),
                      j["hits3"].get<double>(), j["hits10"].get<double>(),
                      static_cast<long long>(j.value("n_queries", int64_t{0})));
        csv += buf2;
        names.push_back(fs::path(file).stem().string());
        plot_rows.push_back({j["mrr"].get<double>(), j["hits1"].get<double>(),
                             j["hits3"].get<double>(), j["hits10"].get<double>()});
    }

    std::cout << csv;
    if (!args.out_dir.empty()) {
        fs::create_directories(args.out_dir);
        const std::string csv_path = (fs::path(args.out_dir) / "report.csv").string();
        write_text_file(csv_path, csv);
        atransn::RunManifest manifest;
        manifest.command = g_argv;
        for (const std::string& f : args.metric_files) add_input(manifest, f);
        manifest.artifacts.emplace_back("report", csv_path);
        if (args.plot) {
            const std::string svg_path = (fs::path(args.out_dir) / "report.svg").string();
            write_text_file(svg_path, render_svg(names, plot_rows));
            manifest.artifacts.emplace_back("plot", svg_path);
        }
        atransn::write_manifest(manifest, (fs::path(args.out_dir) / "manifest.json").string());
    } else if (args.plot) {
        throw atransn::UsageError("--plot needs --out");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);
    CLI::App app{"Knowledge-graph embeddings with adversarial teacher transfer"};
    app.require_subcommand(1);
    int exit_code = 0;

    TrainArgs teacher_args;
    CLI::App* train_teacher =
        app.add_subcommand("train-teacher", "Train a plain model, e.g. to act as a teacher");
    train_teacher->add_option("--config", teacher_args.config_path, "config JSON")->required();
    train_teacher->add_option("--seed", teacher_args.seed, "seed override");
    train_teacher->add_option("--out", teacher_args.out_dir, "artifact directory")->required();

    TrainArgs target_args;
    CLI::App* train_target =
        app.add_subcommand("train-target", "Train a target model, optionally with teachers");
    train_target->add_option("--config", target_args.config_path, "config JSON")->required();
    train_target->add_option("--seed", target_args.seed, "seed override");
    train_target->add_option("--mode", target_args.mode,
                             "atransn | ctranse | plain | joint (overrides config)");
    train_target->add_option("--teacher-emb", target_args.teacher_embs,
                             "teacher embedding dump (repeatable)");
    train_target->add_option("--align", target_args.aligns,
                             "alignment file, paired with --teacher-emb by order (repeatable)");
    train_target->add_option("--out", target_args.out_dir, "artifact directory")->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Filtered link-prediction metrics");
    eval_cmd->add_option("checkpoint", eval_args.ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("--config", eval_args.config_path, "config JSON with dataset paths")
        ->required();
    eval_cmd->add_option("--split", eval_args.split, "valid | test");
    eval_cmd->add_option("--out", eval_args.out_dir, "artifact directory (metrics + rank CSV)");

    ExportArgs export_args;
    CLI::App* export_cmd = app.add_subcommand("export", "Write an entity embedding dump");
    export_cmd->add_option("checkpoint", export_args.ckpt_path, "checkpoint file")->required();
    export_cmd->add_option("--out", export_args.out_dir, "artifact directory")->required();
    export_cmd->add_flag("--include-relations", export_args.include_relations,
                         "also dump relation rows (withheld by default)");

    SynthArgs synth_args;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Generate a synthetic teacher/target transfer task");
    synth_cmd->add_option("--out", synth_args.out_dir, "artifact directory")->required();
    synth_cmd->add_option("--entities", synth_args.entities, "world entity count");
    synth_cmd->add_option("--relations", synth_args.relations, "world relation count");
    synth_cmd->add_option("--triplets", synth_args.triplets, "world triplet count");
    synth_cmd->add_option("--target-fraction", synth_args.target_fraction,
                          "share of world triplets in the target view");
    synth_cmd->add_option("--ratios", synth_args.ratios, "entity overlap ratios, nested")
        ->delimiter(',');
    synth_cmd->add_option("--seed", synth_args.seed, "world seed");

    ReportArgs report_args;
    CLI::App* report_cmd = app.add_subcommand("report", "Tabulate metrics files as CSV");
    report_cmd->add_option("metrics", report_args.metric_files, "metrics JSON files")
        ->required();
    report_cmd->add_option("--out", report_args.out_dir, "artifact directory");
    report_cmd->add_flag("--plot", report_args.plot, "emit an SVG chart of the metric curves");

    train_teacher->callback([&] { exit_code = cmd_train(teacher_args, true); });
    train_target->callback([&] { exit_code = cmd_train(target_args, false); });
    eval_cmd->callback([&] { exit_code = cmd_eval(eval_args); });
    export_cmd->callback([&] { exit_code = cmd_export(export_args); });
    synth_cmd->callback([&] { exit_code = cmd_synth(synth_args); });
    report_cmd->callback([&] { exit_code = cmd_report(report_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const atransn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
