#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>

namespace kens {

// Writes via a temp file in the same directory, then renames over the
// target, so partial runs never leave a corrupt file behind.
void atomic_write(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& fill);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);
// Fixed 6-decimal form used by the TSV outputs.
std::string format_fixed6(double v);

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

// Level comes from the KENS_LOG environment variable (debug|info|warn|error).
LogLevel log_level();
void log(LogLevel level, const std::string& msg);
inline void log_debug(const std::string& m) { log(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log(LogLevel::Error, m); }

}  // namespace kens
