#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace stokes_robin {

enum class LogLevel { Info, Warning, Error };

using LogSink = std::function<void(LogLevel, const std::string&)>;

namespace detail {
inline LogSink& log_sink() {
    static LogSink sink = [](LogLevel level, const std::string& message) {
        if (level != LogLevel::Info) std::cerr << (level == LogLevel::Warning ? "warning: " : "error: ") << message << '\n';
    };
    return sink;
}
inline std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Replaces the process-wide log sink (default: warnings and errors to stderr).
inline void set_log_sink(LogSink sink) {
    std::lock_guard lock(detail::log_mutex());
    detail::log_sink() = std::move(sink);
}

inline void log_message(LogLevel level, const std::string& message) {
    std::lock_guard lock(detail::log_mutex());
    if (detail::log_sink()) detail::log_sink()(level, message);
}

inline void log_info(const std::string& message) { log_message(LogLevel::Info, message); }
inline void log_warning(const std::string& message) { log_message(LogLevel::Warning, message); }

}  // namespace stokes_robin
