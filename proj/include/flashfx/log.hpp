#pragma once

#include <string_view>

namespace flashfx {

// Reads FLASHFX_LOG (trace, debug, info, warn, error, off; default warn) and
// routes library diagnostics to stderr. Safe to call more than once.
void init_logging();

void log_debug(std::string_view msg);
void log_info(std::string_view msg);
void log_warn(std::string_view msg);
void log_error(std::string_view msg);

}  // namespace flashfx
