#include <array>
#include <cctype>
#include <string>

#include "orderly/orderliness.hpp"

namespace orderly {

namespace {

constexpr std::array<Register, 9> kEntryZeroed = {
    Register::Rdx, Register::R8, Register::R9, Register::R10, Register::R11,
    Register::R12, Register::R13, Register::R14, Register::R15,
};

constexpr std::array<Register, 10> kExitZeroed = {
    Register::Rcx, Register::Rdx, Register::R8, Register::R9, Register::R10,
    Register::R11, Register::R12, Register::R13, Register::R14, Register::R15,
};

constexpr std::array<Register, 2> kStackPointers = {Register::Rsp, Register::Rbp};

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

void check_clause(const MachineState& state, ViolationKind kind, const Expr& failure, std::string detail,
                  std::vector<Violation>& out) {
    const SatResult r = query(state.pc, failure);
    if (r != SatResult::Unsat) out.push_back(make_violation(state, kind, std::move(detail), r));
}

}  // namespace

std::vector<Violation> entry_sanitisation_check(const MachineState& state, const EnclaveLayout& layout) {
    std::vector<Violation> out;
    const auto kind = ViolationKind::EntrySanitisationViolation;
    for (Register r : kEntryZeroed) {
        check_clause(state, kind, ne(state.reg(r), constant(64, 0)), "register " + upper(register_name(r)), out);
    }
    for (Register r : kStackPointers) {
        const Expr on_stack = in_range(state.reg(r), layout.stack_bottom(), layout.stack_size + 1);
        check_clause(state, kind, bit_not(on_stack), "register " + upper(register_name(r)), out);
    }
    for (FlagId f : {FlagId::AC, FlagId::DF}) {
        check_clause(state, kind, ne(state.flag(f), constant(1, 0)), "flag " + std::string(flag_name(f)), out);
    }
    return out;
}

std::vector<Violation> exit_sanitisation_check(const MachineState& state, const EnclaveLayout& layout) {
    std::vector<Violation> out;
    const auto kind = ViolationKind::ExitSanitisationViolation;
    for (Register r : kExitZeroed) {
        check_clause(state, kind, ne(state.reg(r), constant(64, 0)), "register " + upper(register_name(r)), out);
    }
    for (Register r : kStackPointers) {
        check_clause(state, kind, in_range(state.reg(r), layout.base, layout.size),
                     "register " + upper(register_name(r)), out);
    }
    return out;
}

}  // namespace orderly
