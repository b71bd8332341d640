// On-disk containers (gridded sequences, station CSV) and the inverse
// distance weighting interpolator that turns sparse station readings into
// gridded observation fields.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fakerair/errors.hpp"
#include "fakerair/field_io.hpp"
#include "fakerair/stations.hpp"
#include "test_support.hpp"

using namespace fakerair;
using fakerair::testing::synthetic_sequence;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "fakerair-io-tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("gridded sequences survive a write/read cycle at f32 precision") {
    FieldSequence seq = synthetic_sequence(7, 5, 4, 321);
    seq.base_time_index = 11;
    for (int t = 0; t < seq.size(); ++t) seq.frames[t].time_index = 11 + t;
    const fs::path p = temp_dir() / "roundtrip.fkrf";
    write_fkrf(p, seq);
    FieldSequence back = read_fkrf(p);
    CHECK(back.nx == 7);
    CHECK(back.ny == 5);
    CHECK(back.n_vars == kStateVars);
    CHECK(back.base_time_index == 11);
    REQUIRE(back.size() == 4);
    for (int t = 0; t < 4; ++t) {
        CHECK(back.frames[t].time_index == 11 + t);
        for (size_t i = 0; i < seq.frames[t].values.size(); ++i)
            CHECK(back.frames[t].values[i] == f32_roundtrip(seq.frames[t].values[i]));
    }
    SUBCASE("writing the same sequence twice produces identical bytes") {
        const fs::path q = temp_dir() / "roundtrip2.fkrf";
        write_fkrf(q, seq);
        CHECK(slurp(p) == slurp(q));
    }
    SUBCASE("a second round trip is lossless (f32 is a fixed point)") {
        const fs::path q = temp_dir() / "roundtrip3.fkrf";
        write_fkrf(q, back);
        FieldSequence again = read_fkrf(q);
        for (int t = 0; t < 4; ++t) CHECK(again.frames[t].values == back.frames[t].values);
    }
}

TEST_CASE("an empty sequence is a bare header") {
    FieldSequence seq;
    seq.nx = 6;
    seq.ny = 3;
    seq.n_vars = kStateVars;
    seq.base_time_index = -4;
    const fs::path p = temp_dir() / "empty.fkrf";
    write_fkrf(p, seq);
    CHECK(fs::file_size(p) == 30);  // documented header size
    FieldSequence back = read_fkrf(p);
    CHECK(back.size() == 0);
    CHECK(back.nx == 6);
    CHECK(back.ny == 3);
    CHECK(back.base_time_index == -4);
}

TEST_CASE("malformed sequence files are rejected with the failure location") {
    FieldSequence seq = synthetic_sequence(4, 4, 2, 9);
    const fs::path good = temp_dir() / "good.fkrf";
    write_fkrf(good, seq);
    const std::vector<char> bytes = slurp(good);

    SUBCASE("bad magic") {
        std::vector<char> b = bytes;
        b[0] = 'X';
        const fs::path p = temp_dir() / "badmagic.fkrf";
        spit(p, b);
        CHECK_THROWS_WITH_AS(read_fkrf(p), doctest::Contains("bad magic"), DataError);
    }
    SUBCASE("unsupported version") {
        std::vector<char> b = bytes;
        b[4] = 99;  // version u16 little-endian low byte
        const fs::path p = temp_dir() / "badver.fkrf";
        spit(p, b);
        CHECK_THROWS_WITH_AS(read_fkrf(p), doctest::Contains("version"), DataError);
    }
    SUBCASE("truncated header") {
        std::vector<char> b(bytes.begin(), bytes.begin() + 12);
        const fs::path p = temp_dir() / "shorthdr.fkrf";
        spit(p, b);
        CHECK_THROWS_WITH_AS(read_fkrf(p), doctest::Contains("byte"), DataError);
    }
    SUBCASE("truncated payload reports the byte offset") {
        std::vector<char> b(bytes.begin(), bytes.end() - 7);
        const fs::path p = temp_dir() / "shortpay.fkrf";
        spit(p, b);
        try {
            read_fkrf(p);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find(p.string()) != std::string::npos);
            CHECK(msg.find("byte") != std::string::npos);
        }
    }
    SUBCASE("trailing garbage is a payload size mismatch") {
        std::vector<char> b = bytes;
        b.push_back(0);
        const fs::path p = temp_dir() / "overlong.fkrf";
        spit(p, b);
        CHECK_THROWS_WITH_AS(read_fkrf(p), doctest::Contains("size mismatch"), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_fkrf(temp_dir() / "no-such-file.fkrf"), DataError);
    }
}

TEST_CASE("writer rejects inconsistent sequences") {
    FieldSequence seq = synthetic_sequence(4, 4, 3, 10);
    const fs::path p = temp_dir() / "reject.fkrf";
    SUBCASE("frame shape differs") {
        seq.frames[1] = GridField(5, 4, kStateVars, 1);
        CHECK_THROWS_AS(write_fkrf(p, seq), DataError);
    }
    SUBCASE("time indices not consecutive") {
        seq.frames[2].time_index = 7;
        CHECK_THROWS_AS(write_fkrf(p, seq), DataError);
    }
}

TEST_CASE("station CSV survives a write/read cycle") {
    StationSet set;
    set.stations = {{3, 1.25, 2.0}, {7, 0.0, 3.5}};
    for (int64_t t = 0; t < 3; ++t)
        for (int id : {3, 7})
            for (int v : {kPm25, kPm10})
                set.samples.push_back({id, t, v, 5.0 + id + t + v * 0.125});
    const fs::path p = temp_dir() / "stations.csv";
    write_station_csv(p, set);
    StationSet back = read_station_csv(p);
    REQUIRE(back.stations.size() == 2);
    // Stations come back sorted by id with exact coordinates (%.17g output).
    CHECK(back.stations[0].id == 3);
    CHECK(back.stations[0].x == 1.25);
    CHECK(back.stations[0].y == 2.0);
    CHECK(back.stations[1].id == 7);
    REQUIRE(back.samples.size() == set.samples.size());
    for (size_t i = 0; i < set.samples.size(); ++i) {
        CHECK(back.samples[i].station_id == set.samples[i].station_id);
        CHECK(back.samples[i].time_index == set.samples[i].time_index);
        CHECK(back.samples[i].variable == set.samples[i].variable);
        CHECK(back.samples[i].value == set.samples[i].value);
    }
    SUBCASE("samples are re-sorted by time, station, variable on read") {
        StationSet shuffled = set;
        std::swap(shuffled.samples[0], shuffled.samples.back());
        const fs::path q = temp_dir() / "stations-shuffled.csv";
        write_station_csv(q, shuffled);
        StationSet sorted = read_station_csv(q);
        for (size_t i = 1; i < sorted.samples.size(); ++i) {
            const auto& a = sorted.samples[i - 1];
            const auto& b = sorted.samples[i];
            CHECK(std::tie(a.time_index, a.station_id, a.variable) <=
                  std::tie(b.time_index, b.station_id, b.variable));
        }
    }
}

TEST_CASE("station CSV rejects malformed input") {
    const fs::path p = temp_dir() / "bad-stations.csv";
    auto write_text = [&](const std::string& text) {
        std::ofstream out(p, std::ios::trunc);
        out << text;
    };
    SUBCASE("wrong header") {
        write_text("id,x,y,t,var,val\n");
        CHECK_THROWS_WITH_AS(read_station_csv(p), doctest::Contains("bad header"), DataError);
    }
    SUBCASE("unknown variable") {
        write_text("station_id,x,y,time_index,variable,value\n1,0,0,0,ozone,5\n");
        CHECK_THROWS_WITH_AS(read_station_csv(p), doctest::Contains("ozone"), DataError);
    }
    SUBCASE("wrong field count") {
        write_text("station_id,x,y,time_index,variable,value\n1,0,0,0,pm25\n");
        CHECK_THROWS_WITH_AS(read_station_csv(p), doctest::Contains("6 fields"), DataError);
    }
    SUBCASE("non-numeric value") {
        write_text("station_id,x,y,time_index,variable,value\n1,0,0,0,pm25,abc\n");
        CHECK_THROWS_AS(read_station_csv(p), DataError);
    }
    SUBCASE("negative concentration") {
        write_text("station_id,x,y,time_index,variable,value\n1,0,0,0,pm25,-2\n");
        CHECK_THROWS_AS(read_station_csv(p), DataError);
    }
    SUBCASE("station coordinates change between rows") {
        write_text(
            "station_id,x,y,time_index,variable,value\n"
            "1,0,0,0,pm25,5\n"
            "1,2,0,0,pm10,5\n");
        CHECK_THROWS_WITH_AS(read_station_csv(p), doctest::Contains("coordinates"), DataError);
    }
    SUBCASE("empty file") {
        write_text("");
        CHECK_THROWS_AS(read_station_csv(p), DataError);
    }
}

TEST_CASE("inverse distance weighting reproduces hand-computed weights") {
    // Two stations on a 5x1 row grid: at cells 0 and 4.
    std::vector<Station> st = {{0, 0.0, 0.0}, {1, 4.0, 0.0}};
    IdwInterpolator idw(5, 1, st, 2.0);
    std::vector<double> out;
    SUBCASE("station cells take the station value exactly") {
        idw.interpolate({10.0, 50.0}, out);
        CHECK(out[0] == 10.0);
        CHECK(out[4] == 50.0);
    }
    SUBCASE("midpoint is the unweighted mean") {
        idw.interpolate({10.0, 50.0}, out);
        CHECK(out[2] == doctest::Approx(30.0).epsilon(1e-12));
    }
    SUBCASE("asymmetric cell matches the closed form") {
        // Cell 1: d0 = 1, d1 = 3; with p = 2 the weights are 1 and 1/9.
        idw.interpolate({10.0, 50.0}, out);
        const double w0 = 1.0, w1 = 1.0 / 9.0;
        CHECK(out[1] == doctest::Approx((w0 * 10.0 + w1 * 50.0) / (w0 + w1)).epsilon(1e-12));
    }
    SUBCASE("power changes the falloff") {
        IdwInterpolator idw1(5, 1, st, 1.0);
        idw1.interpolate({10.0, 50.0}, out);
        const double w0 = 1.0, w1 = 1.0 / 3.0;
        CHECK(out[1] == doctest::Approx((w0 * 10.0 + w1 * 50.0) / (w0 + w1)).epsilon(1e-12));
    }
}

TEST_CASE("interpolated fields are convex combinations of station readings") {
    Rng rng(64);
    for (int trial = 0; trial < 10; ++trial) {
        const int nx = 9, ny = 7, n_st = 5;
        std::vector<Station> st;
        std::vector<double> vals;
        for (int s = 0; s < n_st; ++s) {
            st.push_back({s, rng.uniform() * (nx - 1), rng.uniform() * (ny - 1)});
            vals.push_back(5.0 + 60.0 * rng.uniform());
        }
        const double lo = *std::min_element(vals.begin(), vals.end());
        const double hi = *std::max_element(vals.begin(), vals.end());
        IdwInterpolator idw(nx, ny, st, 2.0);
        std::vector<double> out;
        idw.interpolate(vals, out);
        REQUIRE(out.size() == static_cast<size_t>(nx) * ny);
        for (double v : out) {
            CHECK(v >= lo - 1e-9);
            CHECK(v <= hi + 1e-9);
        }
        // Constant readings give a constant field (weights sum to one).
        std::vector<double> ones(n_st, 42.5);
        idw.interpolate(ones, out);
        for (double v : out) CHECK(v == doctest::Approx(42.5).epsilon(1e-12));
    }
}

TEST_CASE("observation fields blend station PM with truth wind") {
    FieldSequence truth = synthetic_sequence(6, 6, 3, 77);
    StationSet set;
    set.stations = {{0, 1.0, 1.0}, {1, 4.0, 4.0}};
    for (int64_t t = 0; t < 3; ++t)
        for (int id : {0, 1})
            for (int v : {kPm25, kPm10})
                set.samples.push_back({id, t, v, 20.0 + 10.0 * id + static_cast<double>(t)});
    FieldSequence obs = interpolate_observations(truth, set, 2.0);
    REQUIRE(obs.size() == 3);
    for (int t = 0; t < 3; ++t) {
        // Wind channels are the forcing, copied verbatim.
        for (int v : {kWindU, kWindV})
            for (int y = 0; y < 6; ++y)
                for (int x = 0; x < 6; ++x)
                    CHECK(obs.frames[t].at(v, y, x) == truth.frames[t].at(v, y, x));
        // Station cells reproduce the readings exactly.
        const double expect25 = 20.0 + static_cast<double>(t);
        CHECK(obs.frames[t].at(kPm25, 1, 1) == doctest::Approx(expect25).epsilon(1e-12));
        CHECK(obs.frames[t].at(kPm25, 4, 4) == doctest::Approx(expect25 + 10.0).epsilon(1e-12));
        CHECK(obs.frames[t].time_index == truth.frames[t].time_index);
    }
    SUBCASE("a missing sample is an error") {
        StationSet sparse = set;
        sparse.samples.pop_back();
        CHECK_THROWS_AS(interpolate_observations(truth, sparse, 2.0), DataError);
    }
}
