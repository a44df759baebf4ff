#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fairkit {

inline constexpr const char* kToolVersion = "0.1.0";

struct ManifestInput {
    std::string role;
    std::string path;
    std::string digest;  // FNV-1a 64 of the file bytes, hex
};

// Reproducibility sidecar written next to every file output.
struct RunManifest {
    std::string subcommand;
    std::string version = kToolVersion;
    nlohmann::json config;  // effective parameters including defaults
    std::vector<ManifestInput> inputs;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

std::string file_digest(const std::string& path);

// Entry point behind the binary; argv[0] is the program name.
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal error.
int run_cli(int argc, const char* const* argv);

}  // namespace fairkit
