#include "fakerair/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include "fakerair/checksum.hpp"
#include "fakerair/errors.hpp"

namespace fakerair {
namespace {

constexpr char kMagic[4] = {'F', 'K', 'R', 'M'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& b, uint16_t v) {
    for (int i = 0; i < 2; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::string& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& b, uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Tensor {
    std::vector<uint32_t> dims;
    std::vector<double> data;
};

void put_tensor(std::string& b, const std::string& name, const Tensor& t) {
    put_u32(b, static_cast<uint32_t>(name.size()));
    b.append(name);
    put_u32(b, static_cast<uint32_t>(t.dims.size()));
    size_t n = 1;
    for (uint32_t d : t.dims) {
        put_u32(b, d);
        n *= d;
    }
    if (n != t.data.size()) throw UsageError("tensor '" + name + "' dims/data mismatch");
    for (double v : t.data) {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(b, bits);
    }
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
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Forecaster& model,
                     uint64_t config_hash) {
    const ModelShape& s = model.shape;
    const ParamLayout lay(s);
    const int64_t F = s.features();

    // Insertion order is the file order; keep it fixed so identical models
    // produce byte-identical checkpoints.
    std::vector<std::pair<std::string, Tensor>> tensors;
    tensors.push_back({"dims",
                       {{5},
                        {static_cast<double>(s.n_vars), static_cast<double>(s.n_out),
                         static_cast<double>(s.t_in), static_cast<double>(s.kernel),
                         static_cast<double>(s.hidden)}}});
    tensors.push_back({"norm_mean", {{static_cast<uint32_t>(s.n_vars)},
                                     {model.norm_mean.begin(), model.norm_mean.end()}}});
    tensors.push_back({"norm_std", {{static_cast<uint32_t>(s.n_vars)},
                                    {model.norm_std.begin(), model.norm_std.end()}}});

    auto slice = [&](int64_t from, int64_t count) {
        return std::vector<double>(model.params.begin() + from, model.params.begin() + from + count);
    };
    if (s.hidden == 0) {
        tensors.push_back({"w", {{static_cast<uint32_t>(s.n_out), static_cast<uint32_t>(F)},
                                 slice(lay.w1, s.n_out * F)}});
        tensors.push_back({"b", {{static_cast<uint32_t>(s.n_out)}, slice(lay.b1, s.n_out)}});
    } else {
        tensors.push_back({"w1", {{static_cast<uint32_t>(s.hidden), static_cast<uint32_t>(F)},
                                  slice(lay.w1, static_cast<int64_t>(s.hidden) * F)}});
        tensors.push_back({"b1", {{static_cast<uint32_t>(s.hidden)}, slice(lay.b1, s.hidden)}});
        tensors.push_back({"w2",
                           {{static_cast<uint32_t>(s.n_out), static_cast<uint32_t>(s.hidden)},
                            slice(lay.w2, static_cast<int64_t>(s.n_out) * s.hidden)}});
        tensors.push_back({"b2", {{static_cast<uint32_t>(s.n_out)}, slice(lay.b2, s.n_out)}});
    }

    std::string buf;
    buf.append(kMagic, 4);
    put_u16(buf, kVersion);
    put_u64(buf, config_hash);
    put_u32(buf, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) put_tensor(buf, name, t);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failure: " + path.string());
}

Forecaster load_checkpoint(const std::filesystem::path& path, uint64_t expected_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    Reader r;
    r.path = path.string();
    r.data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) throw DataError("read failure: " + path.string());

    r.need(4, "magic");
    if (std::memcmp(r.data.data(), kMagic, 4) != 0)
        throw DataError(r.path + ": bad magic (not an FKRM checkpoint)");
    r.pos = 4;
    const uint16_t ver = r.u16("version");
    if (ver != kVersion)
        throw DataError(r.path + ": unsupported FKRM version " + std::to_string(ver));
    const uint64_t stored_hash = r.u64("config hash");
    if (expected_hash != 0 && stored_hash != expected_hash)
        throw DataError(r.path + ": checkpoint config hash " + hash_hex(stored_hash) +
                        " does not match the current config hash " + hash_hex(expected_hash));

    const uint32_t count = r.u32("tensor count");
    if (count > 64) throw DataError(r.path + ": implausible tensor count");
    std::map<std::string, Tensor> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = r.u32("tensor name length");
        if (name_len > 256) throw DataError(r.path + ": implausible tensor name length");
        r.need(name_len, "tensor name");
        std::string name(r.data.data() + r.pos, name_len);
        r.pos += name_len;
        Tensor t;
        const uint32_t ndim = r.u32("tensor rank");
        if (ndim > 8) throw DataError(r.path + ": implausible tensor rank");
        size_t n = 1;
        for (uint32_t d = 0; d < ndim; ++d) {
            t.dims.push_back(r.u32("tensor dim"));
            n *= t.dims.back();
            if (n > (1u << 28)) throw DataError(r.path + ": implausible tensor size");
        }
        t.data.reserve(n);
        for (size_t j = 0; j < n; ++j) {
            const uint32_t bits = r.u32("tensor payload");
            float f;
            std::memcpy(&f, &bits, 4);
            t.data.push_back(static_cast<double>(f));
        }
        tensors.emplace(std::move(name), std::move(t));
    }
    if (r.pos != r.data.size())
        throw DataError(r.path + ": " + std::to_string(r.data.size() - r.pos) +
                        " trailing bytes after the last tensor");

    auto get = [&](const char* name) -> const Tensor& {
        const auto it = tensors.find(name);
        if (it == tensors.end())
            throw DataError(r.path + ": missing tensor '" + std::string(name) + "'");
        return it->second;
    };

    const Tensor& dims = get("dims");
    if (dims.data.size() != 5) throw DataError(r.path + ": malformed dims tensor");
    Forecaster m;
    m.shape.n_vars = static_cast<int>(dims.data[0]);
    m.shape.n_out = static_cast<int>(dims.data[1]);
    m.shape.t_in = static_cast<int>(dims.data[2]);
    m.shape.kernel = static_cast<int>(dims.data[3]);
    m.shape.hidden = static_cast<int>(dims.data[4]);
    if (m.shape.n_vars != kStateVars || m.shape.n_out != kPmVars || m.shape.t_in < 1 ||
        m.shape.kernel < 1 || m.shape.kernel % 2 == 0 || m.shape.hidden < 0)
        throw DataError(r.path + ": invalid model dimensions in checkpoint");

    const Tensor& mean = get("norm_mean");
    const Tensor& sd = get("norm_std");
    if (mean.data.size() != static_cast<size_t>(m.shape.n_vars) ||
        sd.data.size() != static_cast<size_t>(m.shape.n_vars))
        throw DataError(r.path + ": normalization tensor shape mismatch");
    std::copy(mean.data.begin(), mean.data.end(), m.norm_mean.begin());
    std::copy(sd.data.begin(), sd.data.end(), m.norm_std.begin());

    const ParamLayout lay(m.shape);
    m.params.assign(static_cast<size_t>(m.shape.param_count()), 0.0);
    const int64_t F = m.shape.features();
    auto place = [&](const char* name, int64_t offset, size_t expect) {
        const Tensor& t = get(name);
        if (t.data.size() != expect)
            throw DataError(r.path + ": tensor '" + std::string(name) + "' has " +
                            std::to_string(t.data.size()) + " values, expected " +
                            std::to_string(expect));
        std::copy(t.data.begin(), t.data.end(), m.params.begin() + offset);
    };
    if (m.shape.hidden == 0) {
        place("w", lay.w1, static_cast<size_t>(m.shape.n_out * F));
        place("b", lay.b1, static_cast<size_t>(m.shape.n_out));
    } else {
        place("w1", lay.w1, static_cast<size_t>(m.shape.hidden) * F);
        place("b1", lay.b1, static_cast<size_t>(m.shape.hidden));
        place("w2", lay.w2, static_cast<size_t>(m.shape.n_out) * m.shape.hidden);
        place("b2", lay.b2, static_cast<size_t>(m.shape.n_out));
    }
    return m;
}

}  // namespace fakerair
