#pragma once

// Orderly-enclave validation: phase transitions hooked at annotated
// addresses, register/flag sanitisation predicates, per-phase untrusted
// memory policies, and the exploration drivers.

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "orderly/isa.hpp"
#include "orderly/machine.hpp"
#include "orderly/phase.hpp"

namespace orderly {

enum class ViolationKind : std::uint8_t {
    TransitionViolation,
    EntrySanitisationViolation,
    ExitSanitisationViolation,
    OutOfEnclaveRead,
    OutOfEnclaveWrite,
    OutOfEnclaveJump,
    SymbolicRead,
    SymbolicWrite,
    SymbolicJump,
};
inline constexpr std::size_t kViolationKindCount = 9;

std::string_view violation_kind_name(ViolationKind k);
std::optional<ViolationKind> parse_violation_kind(std::string_view text);
std::optional<Phase> parse_phase(std::string_view text);

struct Violation {
    ViolationKind kind;
    Address rip = 0;
    Phase phase = Phase::Entry;
    std::string detail;
    Feasibility feasibility = Feasibility::Sat;
    std::vector<Address> trace;
    std::size_t ecall_index = 0;

    bool operator==(const Violation&) const = default;
};

/// Untrusted-memory rights per phase. Fixed; not configurable.
struct PhasePolicy {
    bool untrusted_read_allowed;
    bool untrusted_write_allowed;
};

class PolicyTable {
public:
    static constexpr PhasePolicy for_phase(Phase p) {
        switch (p) {
            case Phase::Entry: return {true, false};
            case Phase::Secure: return {false, false};
            case Phase::Ocall: return {true, true};
            case Phase::Exit: return {false, true};
            case Phase::Terminated: break;
        }
        return {false, false};
    }
};

/// Violation with rip, phase, trace and feasibility taken from `state`.
Violation make_violation(const MachineState& state, ViolationKind kind, std::string detail,
                         SatResult evidence = SatResult::Sat);

/// Entry predicate: RDX, R8-R15 zero; RSP, RBP within the trusted stack
/// (top inclusive); AC, DF clear. One violation per clause that may fail.
std::vector<Violation> entry_sanitisation_check(const MachineState& state, const EnclaveLayout& layout);

/// Exit predicate: RCX, RDX, R8-R15 zero; RSP, RBP outside the enclave.
std::vector<Violation> exit_sanitisation_check(const MachineState& state, const EnclaveLayout& layout);

/// Applies every transition hooked at state.rip, in the order: sanitisation
/// done, ocall end, secure end, ocall begin, secure begin, exit. On a
/// violating transition the phase is left unchanged and the remaining hooks
/// are skipped.
std::vector<Violation> hook_transition(MachineState& state, const TransitionAnnotations& annotations,
                                       const EnclaveLayout& layout);

struct AccessCheck {
    AccessDecision decision;
    std::vector<Violation> violations;
};

AccessCheck check_access(const MachineState& state, const AccessEvent& event, const EnclaveLayout& layout);

struct AnalysisConfig {
    std::optional<std::uint64_t> stack_size;
    std::optional<std::uint64_t> heap_size;
    std::size_t max_active_branches = 100;
    std::size_t max_violations = 20;
    double time_budget_seconds = 1200.0;
    std::uint64_t step_budget_per_path = 4096;
    bool record_paths = false;  // keep per-path phase marks in EcallReport::paths
};

/// Throws AnalysisError when a value is not positive.
void validate_config(const AnalysisConfig& config);

enum class EcallStatus : std::uint8_t { Clean, Flagged, Timeout, Stopped };
std::string_view status_name(EcallStatus s);
std::optional<EcallStatus> parse_status(std::string_view text);

struct PathRecord {
    std::vector<PhaseMark> marks;
    PathStatus status;
};

struct EcallReport {
    std::size_t ecall_index = 0;
    EcallStatus status = EcallStatus::Clean;
    std::vector<Violation> violations;
    std::uint64_t paths_explored = 0;
    std::uint64_t paths_truncated = 0;
    std::chrono::milliseconds wall_time{0};

    // Not part of the serialised report.
    std::size_t peak_active_states = 0;
    std::vector<std::string> diagnostics;
    std::vector<PathRecord> paths;
};

struct StatusTotals {
    std::size_t ecalls = 0;
    std::size_t flagged = 0;
    std::size_t timeout = 0;
    std::size_t stopped = 0;
    std::size_t clean = 0;

    void add(EcallStatus s);
    bool operator==(const StatusTotals&) const = default;
};

struct EnclaveAnalysis {
    std::vector<EcallReport> ecalls;
    StatusTotals totals;
};

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Image layout with the config's stack/heap size overrides applied.
EnclaveImage apply_layout_overrides(const EnclaveImage& image, const AnalysisConfig& config);

/// Initial state for ecall `ecall_index`: phase entry, RDI = index, every
/// other register and flag a fresh symbol, trusted store from image data.
MachineState initial_state(const EnclaveImage& image, const TransitionAnnotations& annotations,
                           std::size_t ecall_index, SymbolPool& pool);

EcallReport analyze_ecall(const EnclaveImage& image, const TransitionAnnotations& annotations,
                          const AnalysisConfig& config, std::size_t ecall_index);

/// Ecalls analysed concurrently (OpenMP); results in index order.
EnclaveAnalysis analyze_enclave(const EnclaveImage& image, const TransitionAnnotations& annotations,
                                const AnalysisConfig& config);

/// Reference driver: ecalls analysed one after another.
EnclaveAnalysis analyze_enclave_serial(const EnclaveImage& image, const TransitionAnnotations& annotations,
                                       const AnalysisConfig& config);

}  // namespace orderly
