#pragma once

#include <array>
#include <cmath>
#include <string>

#include "fakerair/errors.hpp"

namespace fakerair {

// Four ordered air-quality categories. The numeric values are used for
// ordering (monotonicity of classification) and as confusion-matrix indices.
enum class AqiClass : int { Good = 0, Moderate = 1, Bad = 2, VeryBad = 3 };
constexpr int kNumClasses = 4;

enum class Pollutant : int { Pm25 = 0, Pm10 = 1 };

const char* to_string(AqiClass c);
const char* to_string(Pollutant p);

// Ascending concentration breakpoints (ug/m3) separating the four classes.
// Values equal to a breakpoint fall into the lower class.
struct AqiThresholds {
    std::array<double, 3> pm25{15.0, 35.0, 75.0};
    std::array<double, 3> pm10{30.0, 80.0, 150.0};

    const std::array<double, 3>& for_pollutant(Pollutant p) const {
        return p == Pollutant::Pm25 ? pm25 : pm10;
    }

    // Breakpoints must be positive and strictly increasing.
    void validate() const;
};

inline AqiClass aqi_classify(double value, Pollutant p, const AqiThresholds& t) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw DataError("aqi_classify: value must be finite and non-negative, got " +
                        std::to_string(value));
    }
    const auto& b = t.for_pollutant(p);
    if (value <= b[0]) return AqiClass::Good;
    if (value <= b[1]) return AqiClass::Moderate;
    if (value <= b[2]) return AqiClass::Bad;
    return AqiClass::VeryBad;
}

// Binary event partition: an "event" is air bad enough to alert on.
inline bool is_event(AqiClass c) { return c >= AqiClass::Bad; }

}  // namespace fakerair
