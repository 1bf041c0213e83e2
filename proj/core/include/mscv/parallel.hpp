#pragma once

#include <cstddef>
#include <functional>

namespace mscv {

/// Worker count used by row/channel-parallel stages. Defaults to 1.
/// Results never depend on this value: each output element is computed by
/// exactly one task with a fixed reduction order.
void set_num_threads(int n);
int num_threads() noexcept;

/// Runs body(i) for i in [0, n), statically partitioned across workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mscv
