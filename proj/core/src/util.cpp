#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fakerair/checksum.hpp"
#include "fakerair/errors.hpp"
#include "fakerair/grid.hpp"
#include "fakerair/threads.hpp"

namespace fakerair {

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

uint64_t file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for checksum: " + path.string());
    uint64_t h = kFnvOffset;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= kFnvPrime;
        }
    }
    if (in.bad()) throw DataError("read failure while checksumming: " + path.string());
    return h;
}

int worker_count() {
    if (const char* env = std::getenv("FAKER_AIR_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void validate_dataset_field(const GridField& f) {
    if (f.nx < 4 || f.ny < 4)
        throw DataError("grid too small: " + std::to_string(f.nx) + "x" + std::to_string(f.ny) +
                        " (need at least 4x4)");
    if (f.n_vars != kStateVars)
        throw DataError("expected " + std::to_string(kStateVars) + " channels, got " +
                        std::to_string(f.n_vars));
    for (int v = 0; v < f.n_vars; ++v) {
        const auto vals = f.var(v);
        for (size_t i = 0; i < vals.size(); ++i) {
            const double x = vals[i];
            if (!std::isfinite(x))
                throw DataError("non-finite value in channel " + std::to_string(v) +
                                " at flat index " + std::to_string(i) + " (time " +
                                std::to_string(f.time_index) + ")");
            if (v < kPmVars && x < 0.0)
                throw DataError("negative concentration in channel " + std::to_string(v) +
                                " at flat index " + std::to_string(i) + " (time " +
                                std::to_string(f.time_index) + ")");
        }
    }
}

}  // namespace fakerair
