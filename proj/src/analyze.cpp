#include <algorithm>
#include <deque>
#include <exception>
#include <tuple>

#include "orderly/orderliness.hpp"

namespace orderly {

std::string_view status_name(EcallStatus s) {
    switch (s) {
        case EcallStatus::Clean: return "clean";
        case EcallStatus::Flagged: return "flagged";
        case EcallStatus::Timeout: return "timeout";
        case EcallStatus::Stopped: return "stopped";
    }
    return "?";
}

std::optional<EcallStatus> parse_status(std::string_view text) {
    for (auto s : {EcallStatus::Clean, EcallStatus::Flagged, EcallStatus::Timeout, EcallStatus::Stopped}) {
        if (status_name(s) == text) return s;
    }
    return std::nullopt;
}

void StatusTotals::add(EcallStatus s) {
    ++ecalls;
    switch (s) {
        case EcallStatus::Clean: ++clean; break;
        case EcallStatus::Flagged: ++flagged; break;
        case EcallStatus::Timeout: ++timeout; break;
        case EcallStatus::Stopped: ++stopped; break;
    }
}

void validate_config(const AnalysisConfig& config) {
    if (config.stack_size && *config.stack_size == 0) throw AnalysisError("stack_size must be positive");
    if (config.heap_size && *config.heap_size == 0) throw AnalysisError("heap_size must be positive");
    if (config.max_active_branches == 0) throw AnalysisError("max_active_branches must be positive");
    if (config.max_violations == 0) throw AnalysisError("max_violations must be positive");
    if (!(config.time_budget_seconds > 0)) throw AnalysisError("time_budget must be positive");
    if (config.step_budget_per_path == 0) throw AnalysisError("step_budget_per_path must be positive");
}

EnclaveImage apply_layout_overrides(const EnclaveImage& image, const AnalysisConfig& config) {
    EnclaveImage out = image;
    if (config.stack_size) out.layout.stack_size = *config.stack_size;
    if (config.heap_size) out.layout.heap_size = *config.heap_size;
    return out;
}

MachineState initial_state(const EnclaveImage& image, const TransitionAnnotations& annotations,
                           std::size_t ecall_index, SymbolPool& pool) {
    MachineState s;
    s.rip = annotations.entry_address;
    for (std::size_t i = 0; i < kRegisterCount; ++i) {
        const auto r = static_cast<Register>(i);
        s.reg(r) = r == Register::Rdi ? constant(64, ecall_index)
                                      : fresh_symbol(64, "reg_" + std::string(register_name(r)), s, pool);
    }
    for (std::size_t i = 0; i < kFlagCount; ++i) {
        const auto f = static_cast<FlagId>(i);
        s.flag(f) = fresh_symbol(1, "flag_" + std::string(flag_name(f)) + "_init", s, pool);
    }
    for (const auto& seg : image.data) {
        for (std::size_t i = 0; i < seg.words.size(); ++i) {
            s.trusted_store[image.layout.base + seg.offset + 8 * i] = constant(64, seg.words[i]);
        }
    }
    return s;
}

namespace {

/// Violations of one ecall analysis, deduplicated and capped.
class ViolationLog {
public:
    ViolationLog(std::size_t ecall_index, std::size_t cap) : ecall_index_(ecall_index), cap_(cap) {}

    void record(Violation v) {
        if (full()) return;
        if (!seen_.emplace(v.kind, v.rip, v.detail).second) return;
        v.ecall_index = ecall_index_;
        list_.push_back(std::move(v));
    }
    void record(std::vector<Violation> vs) {
        for (auto& v : vs) record(std::move(v));
    }

    bool full() const { return list_.size() >= cap_; }
    std::vector<Violation> take() { return std::move(list_); }

private:
    std::size_t ecall_index_;
    std::size_t cap_;
    std::set<std::tuple<ViolationKind, Address, std::string>> seen_;
    std::vector<Violation> list_;
};

class OrderlinessHooks final : public HookSet {
public:
    OrderlinessHooks(const EnclaveLayout& layout, const TransitionAnnotations& annotations, ViolationLog& log)
        : layout_(layout), annotations_(annotations), log_(log) {}

    bool before_instruction(MachineState& state) override {
        auto found = hook_transition(state, annotations_, layout_);
        const bool transition_broken = std::any_of(found.begin(), found.end(), [](const Violation& v) {
            return v.kind == ViolationKind::TransitionViolation;
        });
        log_.record(std::move(found));
        if (transition_broken) {
            state.terminate(PathStatus::Pruned, "transition violation");
            return false;
        }
        return true;
    }

    AccessDecision on_access(MachineState& state, const AccessEvent& event) override {
        auto check = check_access(state, event, layout_);
        if (check.decision.disposition == AccessDecision::Disposition::Prune) {
            state.terminate(PathStatus::Pruned, "access violation");
        }
        log_.record(std::move(check.violations));
        return check.decision;
    }

    bool on_ocall(MachineState& state) override {
        if (state.phase_state.phase == Phase::Ocall) return true;
        log_.record(make_violation(state, ViolationKind::TransitionViolation, "ocall instruction outside ocall phase"));
        state.terminate(PathStatus::Pruned, "transition violation");
        return false;
    }

    void on_eexit(MachineState& state) override {
        if (state.rip != annotations_.exit_address) {
            log_.record(make_violation(state, ViolationKind::TransitionViolation, "eexit outside exit address"));
            state.terminate(PathStatus::Pruned, "transition violation");
            return;
        }
        state.terminate(PathStatus::Exited);
    }

private:
    const EnclaveLayout& layout_;
    const TransitionAnnotations& annotations_;
    ViolationLog& log_;
};

EnclaveImage prepare(const EnclaveImage& image, const TransitionAnnotations& annotations,
                     const AnalysisConfig& config) {
    validate_config(config);
    EnclaveImage img = apply_layout_overrides(image, config);
    if (auto errors = validate_image(img); !errors.empty()) throw AnalysisError("invalid image: " + errors.front());
    if (auto errors = validate_annotations(img, annotations); !errors.empty()) {
        throw AnalysisError("annotation address outside code region: " + errors.front());
    }
    if (annotations.secure.empty()) throw AnalysisError("no ecalls annotated");
    return img;
}

EcallReport explore(const EnclaveImage& img, const TransitionAnnotations& annotations, const AnalysisConfig& config,
                    std::size_t ecall_index) {
    if (ecall_index >= annotations.secure.size()) throw AnalysisError("invalid ecall index");
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    const auto budget = std::chrono::duration<double>(config.time_budget_seconds);

    EcallReport report;
    report.ecall_index = ecall_index;
    ViolationLog log(ecall_index, config.max_violations);
    OrderlinessHooks hooks(img.layout, annotations, log);
    SymbolPool pool;
    const StepOptions options{config.step_budget_per_path};

    auto finish = [&](MachineState& s) {
        ++report.paths_explored;
        if (s.status == PathStatus::Truncated || s.status == PathStatus::Faulted) {
            ++report.paths_truncated;
            if (std::find(report.diagnostics.begin(), report.diagnostics.end(), s.diagnostic) ==
                report.diagnostics.end()) {
                report.diagnostics.push_back(s.diagnostic);
            }
        }
        if (config.record_paths) report.paths.push_back({std::move(s.phase_marks), s.status});
    };

    std::optional<EcallStatus> cap;
    std::deque<MachineState> active;
    active.push_back(initial_state(img, annotations, ecall_index, pool));
    report.peak_active_states = 1;
    while (!active.empty()) {
        if (Clock::now() - start > budget) {
            cap = EcallStatus::Timeout;
            break;
        }
        MachineState current = std::move(active.front());
        active.pop_front();
        auto result = step(std::move(current), img, hooks, pool, options);
        std::vector<MachineState> next;
        for (auto& s : result.successors) {
            if (s.status == PathStatus::Active) next.push_back(std::move(s));
            else finish(s);
        }
        if (log.full()) {
            cap = EcallStatus::Stopped;
            break;
        }
        if (active.size() + next.size() > config.max_active_branches) {
            cap = EcallStatus::Stopped;
            break;
        }
        for (auto& s : next) active.push_back(std::move(s));
        report.peak_active_states = std::max(report.peak_active_states, active.size());
    }

    report.violations = log.take();
    if (cap) report.status = *cap;
    else report.status = report.violations.empty() ? EcallStatus::Clean : EcallStatus::Flagged;
    report.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
    return report;
}

}  // namespace

EcallReport analyze_ecall(const EnclaveImage& image, const TransitionAnnotations& annotations,
                          const AnalysisConfig& config, std::size_t ecall_index) {
    const EnclaveImage img = prepare(image, annotations, config);
    return explore(img, annotations, config, ecall_index);
}

EnclaveAnalysis analyze_enclave_serial(const EnclaveImage& image, const TransitionAnnotations& annotations,
                                       const AnalysisConfig& config) {
    const EnclaveImage img = prepare(image, annotations, config);
    EnclaveAnalysis out;
    for (std::size_t i = 0; i < annotations.secure.size(); ++i) {
        out.ecalls.push_back(explore(img, annotations, config, i));
        out.totals.add(out.ecalls.back().status);
    }
    return out;
}

EnclaveAnalysis analyze_enclave(const EnclaveImage& image, const TransitionAnnotations& annotations,
                                const AnalysisConfig& config) {
    const EnclaveImage img = prepare(image, annotations, config);
    const auto n = static_cast<std::ptrdiff_t>(annotations.secure.size());
    std::vector<EcallReport> reports(annotations.secure.size());
    std::vector<std::exception_ptr> errors(annotations.secure.size());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            reports[i] = explore(img, annotations, config, static_cast<std::size_t>(i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    EnclaveAnalysis out;
    out.ecalls = std::move(reports);
    for (const auto& r : out.ecalls) out.totals.add(r.status);
    return out;
}

}  // namespace orderly
