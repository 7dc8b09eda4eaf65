#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace welfarecast {

// Worker cap: WELFARECAST_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
std::size_t thread_cap();

// Runs body(i) for i in [0, n) on up to thread_cap() threads. Each index is
// visited exactly once; the first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

enum class LogLevel { Quiet = 0, Warning = 1, Info = 2 };

void set_log_level(LogLevel level);
void log_warning(const std::string& message);
void log_info(const std::string& message);

}  // namespace welfarecast
