#pragma once

namespace gazeact {

// Selects between the OpenMP kernel and a single-threaded run of the same
// kernel. Both must produce bit-identical results.
enum class Execution { kSerial, kParallel };

}  // namespace gazeact
