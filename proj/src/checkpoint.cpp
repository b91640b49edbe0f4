#include "spgnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace spgnn {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'G', 'N', 'N', 'C', 'K', '1'};

void write_u64_le(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, 8);
}

std::uint64_t read_u64_le(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64_le(std::ostream& os, double d) {
    write_u64_le(os, std::bit_cast<std::uint64_t>(d));
}

double read_f64_le(std::istream& is) { return std::bit_cast<double>(read_u64_le(is)); }

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
    // First pass computes offsets: header + manifest, then arrays.
    nlohmann::json manifest = nlohmann::json::array();
    for (const Parameter* p : params)
        manifest.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"offset", 0}});
    // offsets depend on manifest size, which changes when offsets are
    // filled in; iterate until the serialized length is stable.
    std::string text = manifest.dump();
    for (int pass = 0; pass < 8; ++pass) {
        std::uint64_t off = 8 + 8 + text.size();
        for (size_t i = 0; i < params.size(); ++i) {
            manifest[i]["offset"] = off;
            off += 8 + 8 * static_cast<std::uint64_t>(params[i]->numel());
        }
        std::string next = manifest.dump();
        if (next.size() == text.size()) {
            text = next;
            break;
        }
        text = next;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    write_u64_le(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Parameter* p : params) {
        write_u64_le(os, static_cast<std::uint64_t>(p->numel()));
        for (std::int64_t i = 0; i < p->numel(); ++i) write_f64_le(os, p->value[i]);
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    std::uint64_t len = read_u64_le(is);
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (!is) throw std::runtime_error("truncated checkpoint manifest: " + path);
    nlohmann::json manifest = nlohmann::json::parse(text);
    if (manifest.size() != params.size())
        throw std::runtime_error("checkpoint parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        const auto& entry = manifest[i];
        if (entry.at("name").get<std::string>() != p.name)
            throw std::runtime_error("checkpoint name mismatch at index " + std::to_string(i) +
                                     ": " + entry.at("name").get<std::string>() + " vs " +
                                     p.name);
        if (entry.at("shape").get<std::vector<int>>() != p.value.shape())
            throw std::runtime_error("checkpoint shape mismatch for " + p.name);
        is.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
        std::uint64_t count = read_u64_le(is);
        if (count != static_cast<std::uint64_t>(p.numel()))
            throw std::runtime_error("checkpoint length mismatch for " + p.name);
        for (std::int64_t t = 0; t < p.numel(); ++t) p.value[t] = read_f64_le(is);
        if (!is) throw std::runtime_error("truncated checkpoint data for " + p.name);
    }
}

}  // namespace spgnn
