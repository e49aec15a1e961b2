#include "nmdr/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>

namespace nmdr {

namespace {

constexpr char kMagic[4] = {'N', 'M', 'D', 'R'};
constexpr uint8_t kVersion = 0x01;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void write_u32(std::FILE* f, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    check(std::fwrite(b, 1, 4, f) == 4, "checkpoint: write failed");
}

uint32_t read_u32(std::FILE* f) {
    uint8_t b[4];
    check(std::fread(b, 1, 4, f) == 4, "checkpoint: truncated file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_records(const std::string& path, const Records& records) {
    File f(std::fopen(path.c_str(), "wb"));
    check(f != nullptr, "checkpoint: cannot open " + path + " for writing");
    check(std::fwrite(kMagic, 1, 4, f.get()) == 4, "checkpoint: write failed");
    check(std::fwrite(&kVersion, 1, 1, f.get()) == 1, "checkpoint: write failed");
    write_u32(f.get(), static_cast<uint32_t>(records.size()));
    for (const auto& [name, t] : records) {
        write_u32(f.get(), static_cast<uint32_t>(name.size()));
        check(std::fwrite(name.data(), 1, name.size(), f.get()) == name.size(),
              "checkpoint: write failed");
        write_u32(f.get(), static_cast<uint32_t>(t.rank()));
        for (int d : t.shape()) write_u32(f.get(), static_cast<uint32_t>(d));
        size_t n = static_cast<size_t>(t.size());
        // x86 floats are already little-endian; written raw.
        check(std::fwrite(t.data(), sizeof(float), n, f.get()) == n, "checkpoint: write failed");
    }
}

Records load_records(const std::string& path) {
    File f(std::fopen(path.c_str(), "rb"));
    check(f != nullptr, "checkpoint: cannot open " + path);
    char magic[4];
    check(std::fread(magic, 1, 4, f.get()) == 4 && std::memcmp(magic, kMagic, 4) == 0,
          "checkpoint: bad magic in " + path);
    uint8_t version = 0;
    check(std::fread(&version, 1, 1, f.get()) == 1 && version == kVersion,
          "checkpoint: unsupported format version");
    uint32_t count = read_u32(f.get());
    Records out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = read_u32(f.get());
        std::string name(name_len, '\0');
        check(std::fread(name.data(), 1, name_len, f.get()) == name_len,
              "checkpoint: truncated name");
        uint32_t rank = read_u32(f.get());
        check(rank <= 8, "checkpoint: implausible rank");
        std::vector<int> shape(rank);
        int64_t n = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int>(read_u32(f.get()));
            n *= shape[d];
        }
        std::vector<float> data(static_cast<size_t>(n));
        check(std::fread(data.data(), sizeof(float), data.size(), f.get()) == data.size(),
              "checkpoint: truncated data for " + name);
        out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return out;
}

}  // namespace nmdr
