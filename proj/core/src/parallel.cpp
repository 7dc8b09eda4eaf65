#include "welfarecast/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace welfarecast {

namespace {
std::atomic<int> g_log_level{static_cast<int>(LogLevel::Warning)};
std::mutex g_log_mutex;
}  // namespace

std::size_t thread_cap() {
  if (const char* env = std::getenv("WELFARECAST_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void set_log_level(LogLevel level) { g_log_level = static_cast<int>(level); }

void log_warning(const std::string& message) {
  if (g_log_level < static_cast<int>(LogLevel::Warning)) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "warning: " << message << '\n';
}

void log_info(const std::string& message) {
  if (g_log_level < static_cast<int>(LogLevel::Info)) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "info: " << message << '\n';
}

}  // namespace welfarecast
