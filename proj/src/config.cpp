#include "atransn/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "atransn/checkpoint.hpp"

namespace atransn {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void bad_key(const std::string& origin, const std::string& key,
                          const std::string& why) {
    throw ConfigError(origin + ": key '" + key + "' " + why);
}

double need_number(const Json& v, const std::string& origin, const std::string& key) {
    if (!v.is_number()) bad_key(origin, key, "must be a number");
    return v.get<double>();
}

int64_t need_integer(const Json& v, const std::string& origin, const std::string& key) {
    if (!v.is_number_integer()) bad_key(origin, key, "must be an integer");
    return v.get<int64_t>();
}

bool need_bool(const Json& v, const std::string& origin, const std::string& key) {
    if (!v.is_boolean()) bad_key(origin, key, "must be a boolean");
    return v.get<bool>();
}

std::string need_string(const Json& v, const std::string& origin, const std::string& key) {
    if (!v.is_string()) bad_key(origin, key, "must be a string");
    return v.get<std::string>();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(origin + ": top level must be a JSON object");

    RunConfig cfg;
    TrainingConfig& t = cfg.train;
    bool norm_given = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") {
            t.kind = model_kind_from_string(need_string(value, origin, key));
        } else if (key == "mode") {
            t.mode = mode_from_string(need_string(value, origin, key));
        } else if (key == "norm") {
            t.norm = norm_from_string(need_string(value, origin, key));
            norm_given = true;
        } else if (key == "dim") {
            t.dim = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "gamma") {
            t.gamma = need_number(value, origin, key);
        } else if (key == "alpha") {
            t.alpha = need_number(value, origin, key);
        } else if (key == "beta") {
            t.beta = need_number(value, origin, key);
        } else if (key == "lr_e") {
            t.lr_e = need_number(value, origin, key);
        } else if (key == "lr_a") {
            t.lr_a = need_number(value, origin, key);
        } else if (key == "k") {
            t.k = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "n_l") {
            t.n_l = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "n_a") {
            t.n_a = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "t_l") {
            t.t_l = need_integer(value, origin, key);
        } else if (key == "t_g") {
            t.t_g = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "t_d") {
            t.t_d = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "warmup_fraction") {
            t.warmup_fraction = need_number(value, origin, key);
        } else if (key == "anneal_cycles") {
            t.anneal_cycles = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "lambda_g") {
            t.lambda_g = need_number(value, origin, key);
        } else if (key == "seed") {
            const int64_t s = need_integer(value, origin, key);
            if (s < 0) bad_key(origin, key, "must be >= 0");
            t.seed = static_cast<uint64_t>(s);
        } else if (key == "epochs_max") {
            t.epochs_max = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "eval_every") {
            t.eval_every = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "init_eps") {
            t.init_eps = need_number(value, origin, key);
        } else if (key == "transfer_cap") {
            t.transfer_cap = static_cast<int>(need_integer(value, origin, key));
        } else if (key == "constant_weights") {
            t.constant_weights = need_bool(value, origin, key);
        } else if (key == "w_mid_activation") {
            t.w_mid_activation = need_bool(value, origin, key);
        } else if (key == "leaky_slope") {
            t.leaky_slope = need_number(value, origin, key);
        } else if (key == "tie_policy") {
            t.tie_policy = tie_policy_from_string(need_string(value, origin, key));
        } else if (key == "full_c_distance") {
            t.full_c_distance = need_bool(value, origin, key);
        } else if (key == "parallel") {
            t.parallel = need_bool(value, origin, key);
        } else if (key == "train_path") {
            cfg.train_path = need_string(value, origin, key);
        } else if (key == "valid_path") {
            cfg.valid_path = need_string(value, origin, key);
        } else if (key == "test_path") {
            cfg.test_path = need_string(value, origin, key);
        } else if (key == "teacher_triplets_path") {
            cfg.teacher_triplets_path = need_string(value, origin, key);
        } else {
            throw ConfigError(origin + ": unknown config key '" + key + "'");
        }
    }
    if (!norm_given) t.norm = t.kind == ModelKind::RotatE ? Norm::L2 : Norm::L1;
    t.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig cfg = parse_run_config(buf.str(), path);

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    const auto resolve = [&base](std::string& p) {
        if (p.empty()) return;
        const std::filesystem::path fp(p);
        if (fp.is_relative()) p = (base / fp).string();
    };
    resolve(cfg.train_path);
    resolve(cfg.valid_path);
    resolve(cfg.test_path);
    resolve(cfg.teacher_triplets_path);
    return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
    const TrainingConfig& t = cfg.train;
    Json j;
    j["kind"] = to_string(t.kind);
    j["mode"] = to_string(t.mode);
    j["norm"] = to_string(t.norm);
    j["dim"] = t.dim;
    j["gamma"] = t.gamma;
    j["alpha"] = t.alpha;
    j["beta"] = t.beta;
    j["lr_e"] = t.lr_e;
    j["lr_a"] = t.lr_a;
    j["k"] = t.k;
    j["n_l"] = t.n_l;
    j["n_a"] = t.n_a;
    j["t_l"] = t.t_l;
    j["t_g"] = t.t_g;
    j["t_d"] = t.t_d;
    j["warmup_fraction"] = t.warmup_fraction;
    j["anneal_cycles"] = t.anneal_cycles;
    j["lambda_g"] = t.lambda_g;
    j["seed"] = t.seed;
    j["epochs_max"] = t.epochs_max;
    j["eval_every"] = t.eval_every;
    j["init_eps"] = t.init_eps;
    j["transfer_cap"] = t.transfer_cap;
    j["constant_weights"] = t.constant_weights;
    j["w_mid_activation"] = t.w_mid_activation;
    j["leaky_slope"] = t.leaky_slope;
    j["tie_policy"] = to_string(t.tie_policy);
    j["full_c_distance"] = t.full_c_distance;
    j["parallel"] = t.parallel;
    if (!cfg.train_path.empty()) j["train_path"] = cfg.train_path;
    if (!cfg.valid_path.empty()) j["valid_path"] = cfg.valid_path;
    if (!cfg.test_path.empty()) j["test_path"] = cfg.test_path;
    if (!cfg.teacher_triplets_path.empty()) j["teacher_triplets_path"] = cfg.teacher_triplets_path;
    return j.dump(2) + "\n";
}

}  // namespace atransn
