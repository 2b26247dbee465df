#pragma once

#include <cstdint>
#include <string_view>

namespace orderly {

enum class Phase : std::uint8_t { Entry, Secure, Ocall, Exit, Terminated };

std::string_view phase_name(Phase p);  // "entry", "secure", ...

/// Per-path phase tracking carried inside each machine state.
struct PhaseState {
    Phase phase = Phase::Entry;
    bool entry_sanitisation_done = false;  // monotone along a path

    bool operator==(const PhaseState&) const = default;
};

/// Phase-relevant events recorded on a path, used to replay transitions.
enum class PhaseMark : std::uint8_t { Entry, Sanitised, Secure, Ocall, Exit, Terminated };

PhaseMark mark_for(Phase p);

}  // namespace orderly
