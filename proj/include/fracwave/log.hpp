#pragma once

#include <string>

namespace fracwave {

/// Emit a warning to stderr once per distinct key for the life of the process.
void warn_once(const std::string& key, const std::string& message);

/// Silence (or re-enable) warnings, e.g. inside test binaries.
void set_warnings_enabled(bool enabled);

}  // namespace fracwave
