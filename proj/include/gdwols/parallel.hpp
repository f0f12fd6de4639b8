#pragma once

#include <cstddef>
#include <functional>

namespace gdwols {

// Runs fn(i) for i in [0, n) across the requested number of threads. Work is
// claimed through an atomic counter and every index writes only to its own
// output slot, so results do not depend on scheduling.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gdwols
