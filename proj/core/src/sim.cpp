#include "fakerair/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fakerair/errors.hpp"

namespace fakerair {
namespace {

// Sinusoidal cross-grid modulation of the wind components; u_max below must
// track this factor.
constexpr double kShearFrac = 0.2;

}  // namespace

SimParams SimParams::from_config(const RunConfig& cfg) {
    SimParams p;
    p.nx = cfg.nx;
    p.ny = cfg.ny;
    p.substeps = cfg.sim_substeps;
    p.diffusion = cfg.sim_diffusion;
    p.decay = cfg.sim_decay;
    p.periodic = cfg.sim_boundary == "periodic";
    p.wind_speed = cfg.sim_wind_speed;
    p.wind_period = cfg.sim_wind_period;
    p.background = cfg.sim_background;
    p.pm10_ratio = cfg.sim_pm10_ratio;
    p.source_rho = cfg.sim_source_rho;
    p.source_eta = cfg.sim_source_eta;
    return p;
}

void Simulator::check_stability(const SimParams& p) {
    const double dt = 1.0 / p.substeps;
    const double u_max = p.wind_speed * (1.0 + kShearFrac);
    auto fail = [&](const std::string& what, double value, double limit) {
        throw NumericError("simulator stability violated: " + what + " = " +
                           std::to_string(value) + " exceeds " + std::to_string(limit) +
                           " (reduce wind/diffusion or raise sim.substeps)");
    };
    if (u_max * dt > 1.0) fail("CFL number max(|u|,|v|)*dt", u_max * dt, 1.0);
    if (p.diffusion * dt > 0.25) fail("diffusion number D*dt", p.diffusion * dt, 0.25);
    if (p.decay * dt >= 1.0) fail("decay rate lambda*dt", p.decay * dt, 1.0);
    // Positivity: worst-case outflow coefficient of one cell. Both x faces
    // (and both y faces) can drain a cell simultaneously under divergent
    // shear, hence the factor 2 per direction.
    const double outflow = (4.0 * u_max + 4.0 * p.diffusion + p.decay) * dt;
    if (outflow > 1.0) fail("positivity bound (4*u_max + 4*D + lambda)*dt", outflow, 1.0);
}

Simulator::Simulator(const SimParams& params, std::vector<Source> sources, uint64_t seed)
    : params_(params), sources_(std::move(sources)), rng_(Rng::derive(seed, 0x51u)) {
    check_stability(params_);
    emission_.assign(static_cast<size_t>(params_.nx) * params_.ny, 0.0);
}

void Simulator::wind_at(int64_t t, double& u_base, double& v_base) const {
    const double omega = 2.0 * std::numbers::pi / params_.wind_period;
    u_base = params_.wind_speed * std::cos(omega * static_cast<double>(t));
    v_base = params_.wind_speed * std::sin(omega * static_cast<double>(t));
}

namespace {

// Per-cell wind with the shear modulation, matching what step() stores.
inline double cell_u(double u_base, double phase, int y, int ny) {
    return u_base * (1.0 + kShearFrac * std::sin(2.0 * std::numbers::pi * y / ny + phase));
}
inline double cell_v(double v_base, double phase, int x, int nx) {
    return v_base * (1.0 + kShearFrac * std::sin(2.0 * std::numbers::pi * x / nx - phase));
}

}  // namespace

GridField Simulator::initial_state() const {
    GridField f(params_.nx, params_.ny, kStateVars, 0);
    double u_base, v_base;
    wind_at(0, u_base, v_base);
    const double phase = 0.0;
    for (int y = 0; y < params_.ny; ++y)
        for (int x = 0; x < params_.nx; ++x) {
            f.at(kPm25, y, x) = params_.background;
            f.at(kPm10, y, x) = params_.background * params_.pm10_ratio;
            f.at(kWindU, y, x) = cell_u(u_base, phase, y, params_.ny);
            f.at(kWindV, y, x) = cell_v(v_base, phase, x, params_.nx);
        }
    return f;
}

GridField Simulator::step(const GridField& current) {
    const int nx = params_.nx, ny = params_.ny;
    if (current.nx != nx || current.ny != ny || current.n_vars != kStateVars)
        throw DataError("simulator state shape mismatch");
    check_stability(params_);

    const int64_t t_new = current.time_index + 1;
    const double dt = 1.0 / params_.substeps;

    // Advance the episodic emission intensities once per dataset step.
    std::fill(emission_.begin(), emission_.end(), 0.0);
    for (Source& s : sources_) {
        s.log_state = params_.source_rho * s.log_state + params_.source_eta * rng_.normal();
        const double intensity = s.median_strength * std::exp(s.log_state);
        const double inv2r2 = 1.0 / (2.0 * s.radius_sq());
        // Blobs are compact; only touch cells within 4 radii.
        const double r = std::sqrt(s.radius_sq());
        const int span = static_cast<int>(std::ceil(4.0 * r));
        for (int dy = -span; dy <= span; ++dy)
            for (int dx = -span; dx <= span; ++dx) {
                int x = static_cast<int>(std::lround(s.x)) + dx;
                int y = static_cast<int>(std::lround(s.y)) + dy;
                if (params_.periodic) {
                    x = (x % nx + nx) % nx;
                    y = (y % ny + ny) % ny;
                } else if (x < 0 || x >= nx || y < 0 || y >= ny) {
                    continue;
                }
                const double ddx = (static_cast<double>(std::lround(s.x)) + dx) - s.x;
                const double ddy = (static_cast<double>(std::lround(s.y)) + dy) - s.y;
                emission_[static_cast<size_t>(y) * nx + x] +=
                    intensity * std::exp(-(ddx * ddx + ddy * ddy) * inv2r2);
            }
    }

    // Wind for the whole step, evaluated at the new time (this is also what
    // gets stored in the new state's wind channels).
    double u_base, v_base;
    wind_at(t_new, u_base, v_base);
    const double phase =
        0.5 * 2.0 * std::numbers::pi * static_cast<double>(t_new) / params_.wind_period;
    std::vector<double> u(static_cast<size_t>(nx) * ny), v(u.size());
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            u[static_cast<size_t>(y) * nx + x] = cell_u(u_base, phase, y, ny);
            v[static_cast<size_t>(y) * nx + x] = cell_v(v_base, phase, x, nx);
        }

    GridField out(nx, ny, kStateVars, t_new);
    std::vector<double> c(current.var(kPm25).begin(), current.var(kPm25).end());
    std::vector<double> next(c.size());

    for (int pm = 0; pm < kPmVars; ++pm) {
        const auto src = current.var(pm);
        std::copy(src.begin(), src.end(), c.begin());
        const double emis_scale = (pm == kPm25) ? 1.0 : params_.pm10_ratio;
        const double bg = params_.background * ((pm == kPm25) ? 1.0 : params_.pm10_ratio);

        for (int sub = 0; sub < params_.substeps; ++sub) {
            for (int y = 0; y < ny; ++y) {
                const int ym = params_.periodic ? (y + ny - 1) % ny : std::max(y - 1, 0);
                const int yp = params_.periodic ? (y + 1) % ny : std::min(y + 1, ny - 1);
                for (int x = 0; x < nx; ++x) {
                    const int xm = params_.periodic ? (x + nx - 1) % nx : std::max(x - 1, 0);
                    const int xp = params_.periodic ? (x + 1) % nx : std::min(x + 1, nx - 1);
                    const size_t i = static_cast<size_t>(y) * nx + x;
                    const size_t iw = static_cast<size_t>(y) * nx + xm;
                    const size_t ie = static_cast<size_t>(y) * nx + xp;
                    const size_t is = static_cast<size_t>(ym) * nx + x;
                    const size_t in = static_cast<size_t>(yp) * nx + x;

                    // Flux-form upwind: face velocity = mean of adjacent
                    // cell winds; the donor cell supplies the advected
                    // concentration. Every face flux appears with opposite
                    // signs in the two adjacent cells, so the total mass
                    // telescopes exactly under periodic wrap.
                    const double ue = 0.5 * (u[i] + u[ie]);
                    const double uw = 0.5 * (u[iw] + u[i]);
                    const double vn = 0.5 * (v[i] + v[in]);
                    const double vs = 0.5 * (v[is] + v[i]);
                    const double flux_e = ue >= 0.0 ? ue * c[i] : ue * c[ie];
                    const double flux_w = uw >= 0.0 ? uw * c[iw] : uw * c[i];
                    const double flux_n = vn >= 0.0 ? vn * c[i] : vn * c[in];
                    const double flux_s = vs >= 0.0 ? vs * c[is] : vs * c[i];

                    const double adv = -(flux_e - flux_w) - (flux_n - flux_s);
                    const double diff =
                        params_.diffusion * (c[ie] + c[iw] + c[in] + c[is] - 4.0 * c[i]);
                    const double relax = -params_.decay * (c[i] - bg);
                    const double emit = emis_scale * emission_[i];

                    double val = c[i] + dt * (adv + diff + relax + emit);
                    // Guard only; the stability bounds keep the update
                    // nonnegative already.
                    next[i] = val < 0.0 ? 0.0 : val;
                }
            }
            std::swap(c, next);
        }
        std::copy(c.begin(), c.end(), out.var(pm).begin());
    }

    std::copy(u.begin(), u.end(), out.var(kWindU).begin());
    std::copy(v.begin(), v.end(), out.var(kWindV).begin());
    return out;
}

std::vector<Source> make_sources(const RunConfig& cfg) {
    Rng rng(Rng::derive(cfg.seed, 0x50u));
    std::vector<Source> out;
    out.reserve(static_cast<size_t>(cfg.sim_sources));
    for (int k = 0; k < cfg.sim_sources; ++k) {
        Source s;
        s.x = rng.uniform(0.15, 0.85) * cfg.nx;
        s.y = rng.uniform(0.15, 0.85) * cfg.ny;
        s.median_strength = cfg.sim_source_strength * rng.uniform(0.7, 1.3);
        s.radius = cfg.sim_source_radius;
        s.log_state = 0.0;
        out.push_back(s);
    }
    return out;
}

double channel_mass(const GridField& f, int var) {
    double sum = 0.0;
    for (double v : f.var(var)) sum += v;
    return sum;
}

}  // namespace fakerair
