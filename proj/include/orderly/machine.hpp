#pragma once

// Symbolic machine state and the single-instruction stepper.

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orderly/expr.hpp"
#include "orderly/isa.hpp"
#include "orderly/phase.hpp"
#include "orderly/solver.hpp"

namespace orderly {

inline constexpr std::string_view kUntrustedFetchTag = "untrusted_fetch";
inline constexpr std::size_t kTraceLength = 64;

enum class PathStatus : std::uint8_t {
    Active,
    Exited,     // EEXIT executed
    Pruned,     // stopped after a recorded violation
    Truncated,  // step budget exhausted
    Faulted,    // engine diagnostic (self-modifying code, bad jump target, ...)
};

enum class Feasibility : std::uint8_t { Sat, Unknown };

struct UntrustedWrite {
    Phase phase;
    Expr address;
    Expr value;
    Address rip;
};

struct MachineState {
    Address rip = 0;
    std::array<Expr, kRegisterCount> regs;
    std::array<Expr, kFlagCount> flags;
    std::map<Address, Expr> trusted_store;  // 8-aligned word addresses
    std::vector<UntrustedWrite> untrusted_write_log;
    std::uint64_t fetch_counter = 0;
    PathCondition pc;
    PhaseState phase_state;
    std::uint64_t step_count = 0;
    std::deque<Address> trace;  // last kTraceLength visited rips
    std::vector<PhaseMark> phase_marks{PhaseMark::Entry};

    PathStatus status = PathStatus::Active;
    Feasibility feasibility = Feasibility::Sat;  // Unknown once a fork relied on an Unknown answer
    std::string diagnostic;

    Expr& reg(Register r) { return regs[static_cast<std::size_t>(r)]; }
    const Expr& reg(Register r) const { return regs[static_cast<std::size_t>(r)]; }
    Expr& flag(FlagId f) { return flags[static_cast<std::size_t>(f)]; }
    const Expr& flag(FlagId f) const { return flags[static_cast<std::size_t>(f)]; }

    void set_phase(Phase p);
    void terminate(PathStatus s, std::string why = {});
};

/// Serial source for fresh symbols; one per analysis run.
class SymbolPool {
public:
    Expr fresh(unsigned width, std::string tag) { return symbol(width, std::move(tag), next_++); }
    std::uint64_t issued() const { return next_ - 1; }

private:
    std::uint64_t next_ = 1;
};

/// Fresh symbol with a serial above every earlier one; counts untrusted fetches.
Expr fresh_symbol(unsigned width, std::string tag, MachineState& state, SymbolPool& pool);

enum class AccessKind : std::uint8_t { Read, Write, Jump };
std::string_view access_kind_name(AccessKind k);

struct AccessEvent {
    AccessKind kind;
    Expr address;
    std::optional<Expr> value;  // writes only
    Address rip;
};

struct AccessDecision {
    enum class Disposition : std::uint8_t { TrustedAccess, UntrustedAccess, Prune };
    Disposition disposition = Disposition::Prune;
    Address address = 0;  // TrustedAccess only
};

/// Callbacks through which an analysis observes and constrains execution.
/// A callback that stops the path marks the state terminated itself.
class HookSet {
public:
    virtual ~HookSet() = default;

    /// Runs before the instruction at state.rip. Returns false to stop the path.
    virtual bool before_instruction(MachineState& state) = 0;
    virtual AccessDecision on_access(MachineState& state, const AccessEvent& event) = 0;
    /// Returns false if the OCALL may not execute.
    virtual bool on_ocall(MachineState& state) = 0;
    /// Called for EEXIT; the path ends either way.
    virtual void on_eexit(MachineState& state) = 0;
};

/// Accepts every concrete access: trusted when inside the enclave, untrusted
/// otherwise. Symbolic addresses that may fall inside the enclave prune the path.
class PermissiveHooks final : public HookSet {
public:
    explicit PermissiveHooks(const EnclaveLayout& layout) : layout_(layout) {}

    bool before_instruction(MachineState&) override { return true; }
    AccessDecision on_access(MachineState& state, const AccessEvent& event) override;
    bool on_ocall(MachineState&) override { return true; }
    void on_eexit(MachineState& state) override { state.terminate(PathStatus::Exited); }

private:
    EnclaveLayout layout_;
};

struct StepOptions {
    std::uint64_t step_budget = 4096;
};

struct StepResult {
    std::vector<MachineState> successors;  // non-Active entries have terminated
    std::vector<AccessEvent> events;
};

/// Initial state at `entry` with every register and flag zero and the
/// trusted store loaded from the image's data.
MachineState concrete_state(const EnclaveImage& image, Address entry);

/// Executes the instruction at state.rip. Unsat children of a fork are dropped.
StepResult step(MachineState state, const EnclaveImage& image, HookSet& hooks, SymbolPool& pool,
                const StepOptions& options = {});

/// Condition under which JCC `cc` branches, given the current flags.
Expr branch_condition(const MachineState& state, Condition cc);

struct CompareFlags {
    Expr zf, cf, sf, of;
};
/// Flags set by CMP a, b.
CompareFlags compare_flags(const Expr& a, const Expr& b);

}  // namespace orderly
