#pragma once

#include "onestep/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace onestep {

std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
    std::string command;
    RunConfig config;
    std::string version;
    int workers = 1;
    std::vector<std::uint64_t> replica_seeds;
    double wall_clock_seconds = 0.0;
    std::vector<std::pair<std::string, std::string>> outputs;  // file name, sha256
    std::vector<std::string> notes;
};

void write_manifest(const RunManifest& m, const std::filesystem::path& path);

std::string version_string();

}  // namespace onestep
