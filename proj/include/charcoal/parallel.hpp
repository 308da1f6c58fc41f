#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace charcoal {

// Worker count: the explicit request if given, otherwise CHARCOAL_THREADS,
// otherwise the hardware concurrency (at least 1).
std::size_t resolve_threads(std::optional<std::size_t> requested = std::nullopt);

// Calls body(i) for i in [0, count) on up to `threads` workers. Tasks are
// handed out dynamically, so body must write only to slot i of any shared
// output; results are then independent of scheduling. After a task throws,
// no new tasks start and the exception with the lowest index is rethrown
// once all workers have stopped.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace charcoal
