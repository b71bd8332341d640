#include "fakerair/aqi.hpp"

#include "fakerair/errors.hpp"

namespace fakerair {

const char* to_string(AqiClass c) {
    switch (c) {
        case AqiClass::Good: return "good";
        case AqiClass::Moderate: return "moderate";
        case AqiClass::Bad: return "bad";
        case AqiClass::VeryBad: return "verybad";
    }
    return "?";
}

const char* to_string(Pollutant p) {
    return p == Pollutant::Pm25 ? "pm25" : "pm10";
}

void AqiThresholds::validate() const {
    auto check = [](const std::array<double, 3>& b, const char* name) {
        for (double v : b)
            if (!(v > 0.0)) throw ConfigError(std::string(name) + " thresholds must be positive");
        if (!(b[0] < b[1] && b[1] < b[2]))
            throw ConfigError(std::string(name) + " thresholds must be strictly increasing");
    };
    check(pm25, "aqi.pm25");
    check(pm10, "aqi.pm10");
}

}  // namespace fakerair
