#include "fakerair/field_io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "fakerair/errors.hpp"

namespace fakerair {
namespace {

constexpr char kMagic[4] = {'F', 'K', 'R', 'F'};
constexpr uint16_t kVersion = 1;

// Serialization is explicitly little-endian byte by byte, so files are
// portable even off x86.
void put_u16(std::string& buf, uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

struct Reader {
    std::string data;
    size_t pos = 0;
    std::string path;

    void need(size_t n, const char* what) const {
        if (pos + n > data.size())
            throw DataError(path + ": truncated at byte " + std::to_string(pos) +
                            " while reading " + what);
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = 0;
        for (int i = 0; i < 2; ++i)
            v |= static_cast<uint16_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32(const char* what) {
        const uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

}  // namespace

void write_fkrf(const std::filesystem::path& path, const FieldSequence& seq) {
    for (size_t t = 0; t < seq.frames.size(); ++t) {
        const GridField& f = seq.frames[t];
        if (f.nx != seq.nx || f.ny != seq.ny || f.n_vars != seq.n_vars)
            throw DataError("frame " + std::to_string(t) + " shape differs from sequence header");
        if (f.time_index != seq.base_time_index + static_cast<int64_t>(t))
            throw DataError("frame " + std::to_string(t) + " time index " +
                            std::to_string(f.time_index) + " not consecutive from base " +
                            std::to_string(seq.base_time_index));
    }

    std::string buf;
    buf.reserve(30 + seq.frames.size() * static_cast<size_t>(seq.n_vars) * seq.ny * seq.nx * 4);
    buf.append(kMagic, 4);
    put_u16(buf, kVersion);
    put_u32(buf, static_cast<uint32_t>(seq.nx));
    put_u32(buf, static_cast<uint32_t>(seq.ny));
    put_u32(buf, static_cast<uint32_t>(seq.n_vars));
    put_u32(buf, static_cast<uint32_t>(seq.frames.size()));
    put_u64(buf, static_cast<uint64_t>(seq.base_time_index));
    for (const GridField& f : seq.frames)
        for (double v : f.values) put_f32(buf, static_cast<float>(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failure: " + path.string());
}

FieldSequence read_fkrf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    Reader r;
    r.path = path.string();
    r.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) throw DataError("read failure: " + path.string());

    r.need(4, "magic");
    if (std::memcmp(r.data.data(), kMagic, 4) != 0)
        throw DataError(r.path + ": bad magic at byte 0 (not an FKRF file)");
    r.pos = 4;
    const uint16_t ver = r.u16("version");
    if (ver != kVersion)
        throw DataError(r.path + ": unsupported FKRF version " + std::to_string(ver) +
                        " at byte 4");

    FieldSequence seq;
    const uint32_t nx = r.u32("nx");
    const uint32_t ny = r.u32("ny");
    const uint32_t n_vars = r.u32("n_vars");
    const uint32_t n_times = r.u32("n_times");
    if (nx == 0 || ny == 0 || n_vars == 0 || nx > (1u << 16) || ny > (1u << 16) || n_vars > 64)
        throw DataError(r.path + ": implausible dimensions " + std::to_string(nx) + "x" +
                        std::to_string(ny) + "x" + std::to_string(n_vars) + " at byte 6");
    seq.nx = static_cast<int>(nx);
    seq.ny = static_cast<int>(ny);
    seq.n_vars = static_cast<int>(n_vars);
    seq.base_time_index = static_cast<int64_t>(r.u64("base time index"));

    const size_t frame_vals = static_cast<size_t>(nx) * ny * n_vars;
    const size_t expect = r.pos + static_cast<size_t>(n_times) * frame_vals * 4;
    if (r.data.size() != expect)
        throw DataError(r.path + ": payload size mismatch, file has " +
                        std::to_string(r.data.size()) + " bytes, header implies " +
                        std::to_string(expect));

    seq.frames.reserve(n_times);
    for (uint32_t t = 0; t < n_times; ++t) {
        GridField f(seq.nx, seq.ny, seq.n_vars, seq.base_time_index + t);
        for (size_t i = 0; i < frame_vals; ++i) {
            const float v = r.f32("frame payload");
            f.values[i] = static_cast<double>(v);
        }
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

}  // namespace fakerair
