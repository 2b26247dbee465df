#include <array>
#include <sstream>

#include "orderly/orderliness.hpp"

namespace orderly {

namespace {

constexpr std::array<std::string_view, kViolationKindCount> kKindNames = {
    "TransitionViolation", "EntrySanitisationViolation", "ExitSanitisationViolation",
    "OutOfEnclaveRead",    "OutOfEnclaveWrite",          "OutOfEnclaveJump",
    "SymbolicRead",        "SymbolicWrite",              "SymbolicJump",
};

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

bool contains(const std::vector<AddressPair>& pairs, Address addr, Address AddressPair::*member) {
    for (const auto& p : pairs) {
        if (p.*member == addr) return true;
    }
    return false;
}

ViolationKind symbolic_kind(AccessKind k) {
    switch (k) {
        case AccessKind::Read: return ViolationKind::SymbolicRead;
        case AccessKind::Write: return ViolationKind::SymbolicWrite;
        case AccessKind::Jump: break;
    }
    return ViolationKind::SymbolicJump;
}

ViolationKind out_of_enclave_kind(AccessKind k) {
    switch (k) {
        case AccessKind::Read: return ViolationKind::OutOfEnclaveRead;
        case AccessKind::Write: return ViolationKind::OutOfEnclaveWrite;
        case AccessKind::Jump: break;
    }
    return ViolationKind::OutOfEnclaveJump;
}

bool untrusted_allowed(AccessKind k, Phase phase) {
    const PhasePolicy p = PolicyTable::for_phase(phase);
    switch (k) {
        case AccessKind::Read: return p.untrusted_read_allowed;
        case AccessKind::Write: return p.untrusted_write_allowed;
        case AccessKind::Jump: break;
    }
    return false;  // EEXIT is the only way out
}

}  // namespace

std::string_view violation_kind_name(ViolationKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<ViolationKind> parse_violation_kind(std::string_view text) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == text) return static_cast<ViolationKind>(i);
    }
    return std::nullopt;
}

std::optional<Phase> parse_phase(std::string_view text) {
    for (Phase p : {Phase::Entry, Phase::Secure, Phase::Ocall, Phase::Exit, Phase::Terminated}) {
        if (phase_name(p) == text) return p;
    }
    return std::nullopt;
}

Violation make_violation(const MachineState& state, ViolationKind kind, std::string detail, SatResult evidence) {
    Violation v;
    v.kind = kind;
    v.rip = state.rip;
    v.phase = state.phase_state.phase;
    v.detail = std::move(detail);
    v.feasibility = (evidence == SatResult::Unknown || state.feasibility == Feasibility::Unknown)
                        ? Feasibility::Unknown
                        : Feasibility::Sat;
    v.trace.assign(state.trace.begin(), state.trace.end());
    return v;
}

std::vector<Violation> hook_transition(MachineState& state, const TransitionAnnotations& ann,
                                       const EnclaveLayout& layout) {
    std::vector<Violation> out;
    const Address rip = state.rip;
    auto& ps = state.phase_state;
    auto violate = [&](std::string detail) {
        out.push_back(make_violation(state, ViolationKind::TransitionViolation, std::move(detail)));
        return out;
    };

    if (rip == ann.entry_sanitisation_done) {
        if (ps.phase != Phase::Entry) {
            return violate("sanitisation done outside entry (" + std::string(phase_name(ps.phase)) + ")");
        }
        auto found = entry_sanitisation_check(state, layout);
        out.insert(out.end(), found.begin(), found.end());
        if (!ps.entry_sanitisation_done) {
            ps.entry_sanitisation_done = true;
            state.phase_marks.push_back(PhaseMark::Sanitised);
        }
    }

    auto to_secure = [&]() -> bool {
        if (!ps.entry_sanitisation_done) {
            violate("secure entered before sanitisation done");
            return false;
        }
        if (ps.phase != Phase::Entry && ps.phase != Phase::Ocall) {
            violate("secure entered from " + std::string(phase_name(ps.phase)));
            return false;
        }
        state.set_phase(Phase::Secure);
        return true;
    };

    if (contains(ann.ocall, rip, &AddressPair::end) && !to_secure()) return out;
    if (contains(ann.secure, rip, &AddressPair::end)) {
        if (ps.phase != Phase::Secure) return violate("secure ended in " + std::string(phase_name(ps.phase)));
        state.set_phase(Phase::Exit);
    }
    if (contains(ann.ocall, rip, &AddressPair::begin)) {
        if (ps.phase != Phase::Secure) return violate("ocall entered from " + std::string(phase_name(ps.phase)));
        state.set_phase(Phase::Ocall);
    }
    if (contains(ann.secure, rip, &AddressPair::begin) && !to_secure()) return out;
    if (rip == ann.exit_address) {
        switch (ps.phase) {
            case Phase::Entry:
            case Phase::Exit: break;
            case Phase::Ocall: return violate("ocall may only return to secure");
            case Phase::Secure:
            case Phase::Terminated: return violate("exit reached from " + std::string(phase_name(ps.phase)));
        }
        auto found = exit_sanitisation_check(state, layout);
        out.insert(out.end(), found.begin(), found.end());
        state.set_phase(Phase::Terminated);
    }
    return out;
}

AccessCheck check_access(const MachineState& state, const AccessEvent& event, const EnclaveLayout& layout) {
    using D = AccessDecision::Disposition;
    AccessCheck result;
    const Expr address = simplify(event.address);
    const Expr inside = in_range(address, layout.base, layout.size);
    const SatResult may_in = query(state.pc, inside);
    const SatResult may_out = query(state.pc, bit_not(inside));
    const UniqueValue u = unique_value(state.pc, address);

    if (!u.unique() && may_in != SatResult::Unsat) {
        result.violations.push_back(make_violation(state, symbolic_kind(event.kind), to_string(address), may_in));
        result.decision = {D::Prune, 0};
        return result;
    }
    if (may_out != SatResult::Unsat && !untrusted_allowed(event.kind, state.phase_state.phase)) {
        std::string detail = u.unique() ? hex(u.value) : to_string(address);
        result.violations.push_back(
            make_violation(state, out_of_enclave_kind(event.kind), std::move(detail), may_out));
        result.decision = {D::Prune, 0};
        return result;
    }
    if (may_in == SatResult::Unsat) {
        result.decision = {D::UntrustedAccess, 0};
        return result;
    }
    result.decision = {D::TrustedAccess, u.value};
    return result;
}

}  // namespace orderly
