#ifndef BUNDLESPECTRA_PARALLEL_HPP
#define BUNDLESPECTRA_PARALLEL_HPP

#include <functional>

namespace bspec {

// Worker count: BUNDLE_SPECTRA_THREADS if set, else hardware concurrency.
int thread_count();

// Runs fn(0..n-1). Tasks must be independent; each index writes only its own
// output slot, so results do not depend on the schedule.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace bspec

#endif
