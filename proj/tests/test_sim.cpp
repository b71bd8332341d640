// Simulator physics checks: conservation, positivity, closed-form decay,
// exact fixed points, stability guards, and deterministic source layout.

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/errors.hpp"
#include "fakerair/grid.hpp"
#include "fakerair/sim.hpp"

using namespace fakerair;

namespace {

GridField random_positive_field(int nx, int ny, std::mt19937_64& gen) {
    GridField f(nx, ny, kStateVars);
    // Heavy-tailed positives with occasional near-zero cells: the regime
    // where a non-positivity-preserving scheme would go negative first.
    std::lognormal_distribution<double> heavy(1.5, 1.2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int v = 0; v < kPmVars; ++v)
        for (double& c : f.var(v)) c = unit(gen) < 0.15 ? unit(gen) * 1e-3 : heavy(gen);
    return f;
}

SimParams conservative_params() {
    SimParams p;
    p.nx = 48;
    p.ny = 48;
    p.substeps = 8;
    p.diffusion = 0.3;
    p.decay = 0.0;       // conservation run: no sink
    p.periodic = true;
    p.wind_speed = 1.0;  // advection fully active
    p.background = 5.0;
    return p;
}

}  // namespace

TEST_CASE("periodic source-free decay-free runs conserve PM mass") {
    SimParams p = conservative_params();
    Simulator sim(p, {}, 1234);
    std::mt19937_64 gen(99);
    GridField f = random_positive_field(p.nx, p.ny, gen);
    const double m25_0 = channel_mass(f, kPm25);
    const double m10_0 = channel_mass(f, kPm10);
    REQUIRE(m25_0 > 0.0);
    double m25_prev = m25_0, m10_prev = m10_0;
    for (int t = 0; t < 500; ++t) {
        f = sim.step(f);
        const double m25 = channel_mass(f, kPm25);
        const double m10 = channel_mass(f, kPm10);
        REQUIRE(std::abs(m25 - m25_prev) / m25_prev < 1e-6);
        REQUIRE(std::abs(m10 - m10_prev) / m10_prev < 1e-6);
        m25_prev = m25;
        m10_prev = m10;
    }
    // Accumulated drift over the whole run stays tiny as well.
    CHECK(std::abs(m25_prev - m25_0) / m25_0 < 1e-9);
    CHECK(std::abs(m10_prev - m10_0) / m10_0 < 1e-9);
}

TEST_CASE("PM stays non-negative over a million randomized cell updates") {
    // 16x16 grid -> 256 cell updates per step; 40 parameter draws x 100
    // steps = 1,024,000 randomized cell-steps, spanning wind, diffusion and
    // decay up to the stability envelope.
    std::mt19937_64 gen(31337);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int64_t cell_steps = 0;
    for (int rep = 0; rep < 40; ++rep) {
        SimParams p;
        p.nx = 16;
        p.ny = 16;
        p.substeps = 8;
        p.wind_speed = 1.2 * unit(gen);
        p.diffusion = 0.5 * unit(gen);
        p.decay = 0.1 * unit(gen);
        p.background = 10.0 * unit(gen);
        p.source_rho = 0.8 + 0.15 * unit(gen);
        p.source_eta = 0.7 * unit(gen);
        std::vector<Source> sources;
        if (rep % 2 == 0) {
            Source s;
            s.x = 16.0 * unit(gen);
            s.y = 16.0 * unit(gen);
            s.median_strength = 5.0 * unit(gen);
            sources.push_back(s);
        }
        Simulator sim(p, sources, 1000 + rep);
        GridField f = random_positive_field(p.nx, p.ny, gen);
        for (int t = 0; t < 100; ++t) {
            f = sim.step(f);
            for (int v = 0; v < kPmVars; ++v)
                for (double c : f.var(v)) REQUIRE(c >= 0.0);
            cell_steps += static_cast<int64_t>(p.nx) * p.ny;
        }
    }
    CHECK(cell_steps >= 1'000'000);
}

TEST_CASE("pure decay follows the closed form") {
    SUBCASE("single substep, background 0: one step maps 10 to 9") {
        SimParams p;
        p.nx = 8;
        p.ny = 8;
        p.substeps = 1;
        p.diffusion = 0.0;
        p.wind_speed = 0.0;
        p.decay = 0.1;
        p.background = 0.0;
        Simulator sim(p, {}, 1);
        GridField f(p.nx, p.ny, kStateVars);
        for (int v = 0; v < kPmVars; ++v)
            for (double& c : f.var(v)) c = 10.0;
        GridField g = sim.step(f);
        for (int v = 0; v < kPmVars; ++v)
            for (double c : g.var(v)) CHECK(c == doctest::Approx(9.0).epsilon(1e-12));
    }
    SUBCASE("substeps compound as (1 - lambda/s)^s toward the background") {
        SimParams p;
        p.nx = 8;
        p.ny = 8;
        p.substeps = 4;
        p.diffusion = 0.0;
        p.wind_speed = 0.0;
        p.decay = 0.2;
        p.background = 3.0;
        Simulator sim(p, {}, 1);
        GridField f(p.nx, p.ny, kStateVars);
        for (int v = 0; v < kPmVars; ++v)
            for (double& c : f.var(v)) c = 23.0;
        const double factor = std::pow(1.0 - p.decay / p.substeps, p.substeps);
        GridField g = sim.step(f);
        for (int v = 0; v < kPmVars; ++v) {
            // PM10 relaxes toward its own equilibrium, background * ratio.
            const double bg = v == kPm25 ? p.background : p.background * p.pm10_ratio;
            const double expect = bg + (23.0 - bg) * factor;
            for (double c : g.var(v)) CHECK(c == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("uniform field is an exact fixed point of advection and diffusion") {
    SimParams p;
    p.nx = 24;
    p.ny = 24;
    p.substeps = 6;
    p.diffusion = 0.4;
    p.wind_speed = 0.9;
    p.decay = 0.0;
    Simulator sim(p, {}, 7);
    GridField f(p.nx, p.ny, kStateVars);
    for (int v = 0; v < kPmVars; ++v)
        for (double& c : f.var(v)) c = 12.5;
    GridField g = f;
    for (int t = 0; t < 10; ++t) {
        g = sim.step(g);
        for (int v = 0; v < kPmVars; ++v)
            for (double c : g.var(v)) REQUIRE(c == 12.5);  // bit-exact
    }
}

TEST_CASE("background equilibrium is a fixed point with decay active") {
    SimParams p;
    p.nx = 16;
    p.ny = 16;
    p.substeps = 6;
    p.diffusion = 0.3;
    p.wind_speed = 0.5;
    p.decay = 0.05;
    p.background = 8.0;
    Simulator sim(p, {}, 3);
    GridField f = sim.initial_state();
    for (int t = 0; t < 5; ++t) {
        GridField g = sim.step(f);
        for (int v = 0; v < kPmVars; ++v) {
            auto before = f.var(v);
            auto after = g.var(v);
            for (size_t i = 0; i < before.size(); ++i)
                REQUIRE(after[i] == doctest::Approx(before[i]).epsilon(1e-12));
        }
        f = g;
    }
}

TEST_CASE("stability violations throw with an actionable message") {
    SimParams p;
    p.nx = 8;
    p.ny = 8;
    p.substeps = 1;
    p.wind_speed = 2.0;  // CFL-breaking at one substep
    p.diffusion = 0.0;
    CHECK_THROWS_AS(Simulator::check_stability(p), NumericError);
    try {
        Simulator::check_stability(p);
    } catch (const NumericError& e) {
        std::string msg = e.what();
        CHECK(msg.find("substeps") != std::string::npos);
    }
    // The constructor validates too, so an unstable simulator can't exist.
    CHECK_THROWS_AS(Simulator(p, {}, 1), NumericError);

    SimParams q = p;
    q.wind_speed = 0.1;
    q.diffusion = 2.0;  // diffusion-number violation
    CHECK_THROWS_AS(Simulator::check_stability(q), NumericError);
}

TEST_CASE("source layout is deterministic in the seed") {
    RunConfig cfg;
    auto a = make_sources(cfg);
    auto b = make_sources(cfg);
    REQUIRE(a.size() == b.size());
    REQUIRE(!a.empty());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].median_strength == b[i].median_strength);
        CHECK(a[i].x >= 0.0);
        CHECK(a[i].x < cfg.nx);
        CHECK(a[i].y >= 0.0);
        CHECK(a[i].y < cfg.ny);
        CHECK(a[i].median_strength > 0.0);
    }
    RunConfig other = cfg;
    other.seed = cfg.seed + 1;
    auto c = make_sources(other);
    bool any_differs = false;
    for (size_t i = 0; i < std::min(a.size(), c.size()); ++i)
        if (a[i].x != c[i].x || a[i].y != c[i].y) any_differs = true;
    CHECK(any_differs);
}

TEST_CASE("simulation trajectories are deterministic per seed") {
    SimParams p = conservative_params();
    p.decay = 0.02;
    RunConfig cfg;
    auto sources = make_sources(cfg);
    Simulator s1(p, sources, 42), s2(p, sources, 42), s3(p, sources, 43);
    GridField a = s1.initial_state(), b = s2.initial_state(), c = s3.initial_state();
    for (int t = 0; t < 20; ++t) {
        a = s1.step(a);
        b = s2.step(b);
        c = s3.step(c);
    }
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);  // source episodes differ by seed
}
