#pragma once

#include <stdexcept>
#include <string_view>

namespace tgl {

/// Raised by warn() in strict mode.
class EscalatedWarning : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Warnings go to stderr unless silenced.
void set_quiet(bool quiet) noexcept;
bool quiet() noexcept;

/// In strict mode every warning is thrown as EscalatedWarning instead.
void set_strict(bool strict) noexcept;
bool strict() noexcept;

void warn(std::string_view message);

} // namespace tgl
