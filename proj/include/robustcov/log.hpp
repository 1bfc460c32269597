#pragma once

#include <functional>
#include <string_view>

namespace robustcov {

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink and returns the previous one. The
/// default writes "warning: <msg>" to stderr. Install before spawning workers.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

/// Silences warnings for the lifetime of the guard.
class ScopedQuietWarnings {
 public:
  ScopedQuietWarnings() : previous_(set_warning_handler([](std::string_view) {})) {}
  ~ScopedQuietWarnings() { set_warning_handler(std::move(previous_)); }
  ScopedQuietWarnings(const ScopedQuietWarnings&) = delete;
  ScopedQuietWarnings& operator=(const ScopedQuietWarnings&) = delete;

 private:
  WarningHandler previous_;
};

}  // namespace robustcov
