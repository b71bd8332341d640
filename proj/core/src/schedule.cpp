#include "fakerair/schedule.hpp"

#include <cmath>
#include <numbers>

#include "fakerair/errors.hpp"

namespace fakerair {

double one_cycle_lr(long long step, long long total_steps, double peak_lr) {
    if (total_steps < 1) throw UsageError("one_cycle_lr: total_steps must be positive");
    if (step < 0 || step > total_steps)
        throw UsageError("one_cycle_lr: step " + std::to_string(step) + " outside [0, " +
                         std::to_string(total_steps) + "]");
    const double start = peak_lr / 25.0;
    const double floor = peak_lr / 1e4;
    const double warm_end = 0.3 * static_cast<double>(total_steps);
    const double s = static_cast<double>(step);
    if (s == warm_end) return peak_lr;  // exact apex
    if (s < warm_end) return start + (peak_lr - start) * (s / warm_end);
    const double frac = (s - warm_end) / (static_cast<double>(total_steps) - warm_end);
    return floor + 0.5 * (peak_lr - floor) * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace fakerair
