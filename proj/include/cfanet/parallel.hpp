#pragma once

#include <cstddef>
#include <functional>

namespace cfanet {

/// Worker count used by batch-parallel kernels. 1 (the default) runs inline.
/// Kernels split work by batch sample and reduce partial sums in sample
/// order, so results do not depend on the thread count.
void set_num_threads(std::size_t count);
std::size_t num_threads();

/// Calls body(i) for i in [0, count), possibly on several threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace cfanet
