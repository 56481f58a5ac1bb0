#include "tgl/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace tgl {

namespace {
std::atomic<bool> g_quiet{false};
std::atomic<bool> g_strict{false};
std::mutex g_log_mutex;
} // namespace

void set_quiet(bool quiet) noexcept { g_quiet.store(quiet); }

bool quiet() noexcept { return g_quiet.load(); }

void set_strict(bool strict) noexcept { g_strict.store(strict); }

bool strict() noexcept { return g_strict.load(); }

void warn(std::string_view message)
{
    if (strict()) {
        throw EscalatedWarning(std::string(message));
    }
    if (quiet()) {
        return;
    }
    std::lock_guard lock(g_log_mutex);
    std::cerr << "warning: " << message << '\n';
}

} // namespace tgl
