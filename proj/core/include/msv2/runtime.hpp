#pragma once

namespace msv2 {

// Worker cap for anything that fans out (bench repetitions, test sweeps).
// Reads MSV2_THREADS once; defaults to the hardware concurrency, at least 1.
int max_threads();

} // namespace msv2
