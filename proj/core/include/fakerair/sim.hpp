#pragma once

#include <cstdint>
#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/grid.hpp"
#include "fakerair/rng.hpp"

namespace fakerair {

// Emission blob. Intensity follows an AR(1) in log space, so episodes are
// right-skewed: long calm stretches punctuated by strong multi-step events.
struct Source {
    double x = 0.0;
    double y = 0.0;
    double median_strength = 0.0;  // exp of the log-AR(1) mean
    double radius = 3.0;           // Gaussian blob radius in cells
    double log_state = 0.0;        // current deviation from the log mean

    double radius_sq() const { return radius * radius; }
};

struct SimParams {
    int nx = 64;
    int ny = 64;
    int substeps = 4;
    double diffusion = 0.5;
    double decay = 0.02;
    bool periodic = true;
    double wind_speed = 0.6;
    double wind_period = 28.0;
    double background = 8.0;
    double pm10_ratio = 1.7;
    double source_rho = 0.9;
    double source_eta = 0.55;

    static SimParams from_config(const RunConfig& cfg);
};

// Explicit finite-difference advection-diffusion-reaction integrator.
// Advection is conservative flux-form first-order upwind, diffusion is
// centered second-order, plus source injection and linear decay toward a
// background equilibrium. Periodic boundaries conserve PM mass exactly
// (up to rounding) when sources and decay are off.
class Simulator {
public:
    Simulator(const SimParams& params, std::vector<Source> sources, uint64_t seed);

    // Initial condition: background concentration everywhere plus the wind
    // field at t = 0.
    GridField initial_state() const;

    // Advances one dataset step (params.substeps solver substeps). The input
    // field supplies concentrations; wind is overwritten from the analytic
    // forcing at the new time. Throws NumericError if the stability limits
    // (CFL, diffusion number, decay rate) are violated.
    GridField step(const GridField& current);

    // Wind components at dataset time t (slowly rotating uniform flow with a
    // weak shear term so the two components decorrelate across the grid).
    void wind_at(int64_t t, double& u_base, double& v_base) const;

    const SimParams& params() const { return params_; }
    const std::vector<Source>& sources() const { return sources_; }

    // Stability bounds for one substep of length 1/substeps.
    static void check_stability(const SimParams& p);

private:
    SimParams params_;
    std::vector<Source> sources_;
    Rng rng_;
    std::vector<double> emission_;  // per-cell injection pattern, rebuilt per step
};

// Source layout for a config: positions drawn deterministically from the
// seed, strengths from sim.source_strength.
std::vector<Source> make_sources(const RunConfig& cfg);

// Total PM mass (sum over both PM channels is NOT taken; per-channel sum).
double channel_mass(const GridField& f, int var);

}  // namespace fakerair
