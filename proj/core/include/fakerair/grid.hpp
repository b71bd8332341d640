#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fakerair/errors.hpp"

namespace fakerair {

// Channel layout of a full state frame. PM channels are forecast targets,
// wind channels are known forcing.
enum Channel : int { kPm25 = 0, kPm10 = 1, kWindU = 2, kWindV = 3 };
constexpr int kStateVars = 4;
constexpr int kPmVars = 2;

// One time-stamped multi-variable 2-D field. values is [var][y][x] row-major.
// One time step corresponds to 6 simulated hours.
struct GridField {
    int nx = 0;
    int ny = 0;
    int n_vars = 0;
    int64_t time_index = 0;
    std::vector<double> values;

    GridField() = default;
    GridField(int nx_, int ny_, int n_vars_, int64_t t = 0)
        : nx(nx_), ny(ny_), n_vars(n_vars_), time_index(t),
          values(static_cast<size_t>(nx_) * ny_ * n_vars_, 0.0) {}

    size_t cells() const { return static_cast<size_t>(nx) * ny; }
    size_t size() const { return values.size(); }

    double& at(int v, int y, int x) { return values[(static_cast<size_t>(v) * ny + y) * nx + x]; }
    double at(int v, int y, int x) const { return values[(static_cast<size_t>(v) * ny + y) * nx + x]; }

    std::span<double> var(int v) { return {values.data() + static_cast<size_t>(v) * cells(), cells()}; }
    std::span<const double> var(int v) const {
        return {values.data() + static_cast<size_t>(v) * cells(), cells()};
    }

    bool same_shape(const GridField& o) const {
        return nx == o.nx && ny == o.ny && n_vars == o.n_vars;
    }
};

// Contract check for dataset-grade fields: minimum extent, finite values,
// non-negative PM channels. Model predictions are not routed through this
// (they may dip slightly below zero before the clamp points).
void validate_dataset_field(const GridField& f);

inline void require_same_shape(const GridField& a, const GridField& b, const char* what) {
    if (!a.same_shape(b)) throw DataError(std::string(what) + ": field shape mismatch");
}

}  // namespace fakerair
