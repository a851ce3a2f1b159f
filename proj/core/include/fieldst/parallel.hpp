#pragma once

#include <functional>

namespace fieldst {

// Runs fn(0..n-1) on up to `jobs` threads. Tasks must be independent;
// results may not depend on scheduling order. Rethrows the first exception
// after all workers join.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace fieldst
