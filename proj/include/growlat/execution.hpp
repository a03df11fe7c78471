#pragma once

namespace growlat {

/// Kernel selection. `serial` is the reference implementation kept for
/// testing; `parallel` uses OpenMP with a fixed reduction order, so both give
/// reproducible results for any thread count.
enum class Execution { serial, parallel };

}  // namespace growlat
