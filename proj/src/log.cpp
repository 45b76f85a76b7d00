#include "flashfx/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace flashfx {

namespace {

spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> lg = [] {
        auto l = spdlog::stderr_logger_mt("flashfx");
        l->set_pattern("flashfx: %l: %v");
        l->set_level(spdlog::level::warn);
        return l;
    }();
    return *lg;
}

}  // namespace

void init_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto& l = logger();
        if (const char* env = std::getenv("FLASHFX_LOG")) {
            // from_str maps unknown names to off; keep the default instead.
            const auto level = spdlog::level::from_str(env);
            if (level != spdlog::level::off || std::string_view(env) == "off") l.set_level(level);
        }
    });
}

void log_debug(std::string_view msg) { logger().debug(msg); }
void log_info(std::string_view msg) { logger().info(msg); }
void log_warn(std::string_view msg) { logger().warn(msg); }
void log_error(std::string_view msg) { logger().error(msg); }

}  // namespace flashfx
