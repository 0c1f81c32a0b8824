#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "../errors.hpp"
#include "../version.hpp"
#include "csv.hpp"

namespace phonolib::io {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw NumericalError("sha256: digest initialisation failed");
    }
    Sha256& update(std::string_view bytes) {
        if (EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size()) != 1) throw NumericalError("sha256: update failed");
        return *this;
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw NumericalError("sha256: finalisation failed");
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 0xf];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

inline std::string sha256_hex(std::string_view bytes) { return Sha256().update(bytes).hex(); }

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path.string() + " for hashing");
    Sha256 h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    }
    return h.hex();
}

// UTC ISO-8601; SOURCE_DATE_EPOCH pins it for reproducible builds of the manifest itself.
inline std::string utc_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct FileDigest {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string config_source;  // path, or "defaults"
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::string version = phonolib::version;
    std::string timestamp = utc_timestamp();

    void add_input(const std::filesystem::path& p) { inputs.push_back({p.string(), sha256_file(p)}); }
    void add_output(const std::filesystem::path& p) { outputs.push_back({p.string(), sha256_file(p)}); }

    nlohmann::ordered_json to_json() const {
        auto digests = [](const std::vector<FileDigest>& v) {
            auto a = nlohmann::ordered_json::array();
            for (const auto& d : v) a.push_back({{"path", d.path}, {"sha256", d.sha256}});
            return a;
        };
        return {{"command", command},       {"config_hash", config_hash}, {"config_source", config_source},
                {"inputs", digests(inputs)}, {"outputs", digests(outputs)}, {"version", version},
                {"timestamp", timestamp}};
    }
};

inline std::filesystem::path manifest_path(const std::filesystem::path& output) {
    auto p = output;
    p += ".manifest.json";
    return p;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& output) {
    write_file_atomic(manifest_path(output), m.to_json().dump(2) + "\n");
}

}  // namespace phonolib::io
