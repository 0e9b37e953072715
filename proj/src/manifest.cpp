#include "atransn/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "atransn/errors.hpp"

namespace atransn {

using Json = nlohmann::ordered_json;

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string digest_hex(uint64_t digest) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    Json j;
    j["tool_version"] = manifest.tool_version;
    j["command"] = manifest.command;
    j["seed"] = manifest.seed;
    if (!manifest.config_json.empty()) {
        j["config"] = Json::parse(manifest.config_json);
    } else {
        j["config"] = Json::object();
    }
    Json inputs = Json::object();
    for (const auto& [file, digest] : manifest.inputs) inputs[file] = digest;
    j["inputs"] = inputs;
    Json artifacts = Json::object();
    for (const auto& [name, artifact] : manifest.artifacts) artifacts[name] = artifact;
    j["artifacts"] = artifacts;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("short write: " + path);
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    Json j;
    try {
        j = Json::parse(buf.str());
    } catch (const Json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    RunManifest m;
    m.tool_version = j.value("tool_version", std::string());
    if (j.contains("command")) {
        for (const auto& part : j["command"]) m.command.push_back(part.get<std::string>());
    }
    m.seed = j.value("seed", uint64_t{0});
    if (j.contains("config") && !j["config"].empty()) m.config_json = j["config"].dump(2) + "\n";
    if (j.contains("inputs")) {
        for (const auto& [file, digest] : j["inputs"].items()) {
            m.inputs.emplace_back(file, digest.get<std::string>());
        }
    }
    if (j.contains("artifacts")) {
        for (const auto& [name, artifact] : j["artifacts"].items()) {
            m.artifacts.emplace_back(name, artifact.get<std::string>());
        }
    }
    return m;
}

}  // namespace atransn
