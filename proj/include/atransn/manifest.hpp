#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace atransn {

inline constexpr const char* kToolVersion = "atransn 0.1.0";

// Everything needed to re-run a command and check its inputs: the
// exact argv, input-file digests at write time, and artifact paths.
struct RunManifest {
    std::string tool_version = kToolVersion;
    std::vector<std::string> command;
    uint64_t seed = 0;
    std::string config_json;  // serialized RunConfig snapshot; may be empty
    std::vector<std::pair<std::string, std::string>> inputs;     // path -> digest
    std::vector<std::pair<std::string, std::string>> artifacts;  // name -> path
};

// FNV-1a over the raw file bytes; cheap and stable across platforms.
uint64_t fnv1a_file(const std::string& path);
std::string digest_hex(uint64_t digest);

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

}  // namespace atransn
