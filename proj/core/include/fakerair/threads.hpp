#pragma once

namespace fakerair {

// Worker count for parallel loops: FAKER_AIR_THREADS if set (>=1), else the
// OpenMP default. Results are identical for any thread count because every
// parallel reduction in this codebase accumulates into per-item slots that
// are summed in item order afterwards.
int worker_count();

}  // namespace fakerair
