#pragma once

namespace fakerair {

// One-cycle learning rate: linear warmup from peak/25 to peak over the first
// 30% of steps, then cosine decay down to peak/1e4 at the final step.
// step ranges over [0, total_steps].
double one_cycle_lr(long long step, long long total_steps, double peak_lr);

}  // namespace fakerair
