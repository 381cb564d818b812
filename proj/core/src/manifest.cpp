#include "onestep/manifest.hpp"

#include "onestep/errors.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#ifndef ONESTEP_VERSION
#define ONESTEP_VERSION "dev"
#endif

namespace onestep {

std::string version_string() { return ONESTEP_VERSION; }

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        const auto got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    using json = nlohmann::json;
    json j;
    j["command"] = m.command;
    j["version"] = m.version;
    j["config"] = json::parse(config_json(m.config));
    j["workers"] = m.workers;
    j["replica_seeds"] = m.replica_seeds;
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    json outputs = json::object();
    for (const auto& [name, digest] : m.outputs) outputs[name] = digest;
    j["outputs"] = outputs;
    j["notes"] = m.notes;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace onestep
