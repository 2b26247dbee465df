#include <gtest/gtest.h>

#include "oracles.hpp"
#include "orderly/assembler.hpp"
#include "orderly/orderliness.hpp"

using namespace orderly;

namespace {

constexpr Address kBase = 0x10000;

std::vector<std::string> details(const std::vector<Violation>& vs) {
    std::vector<std::string> out;
    for (const auto& v : vs) out.push_back(v.detail);
    return out;
}

TransitionAnnotations annotations() {
    // entry 0, sanitised 1, sbegin 2 / send 3, obegin 4 / oend 5, exit 6
    return {kBase, kBase + 4, {{kBase + 8, kBase + 12}}, {{kBase + 16, kBase + 20}}, kBase + 24};
}

MachineState sanitised_state() {
    auto s = oracle::sanitisation_vectors().front().state;
    return s;
}

EnclaveImage assembled(const std::string& source) {
    auto r = assemble(source);
    EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : to_string(r.diagnostics.front()));
    return *r.image;
}

// Entry stub that passes every sanitisation clause, for analysis tests.
const char* kPrologue = R"(
.enclave base=0x10000 size=0x10000
.heap offset=0x6000 size=0x1000
.stack offset=0x8000 size=0x1000
.code offset=0
entry:
    movi rdx, 0
    movi r8, 0
    movi r9, 0
    movi r10, 0
    movi r11, 0
    movi r12, 0
    movi r13, 0
    movi r14, 0
    movi r15, 0
    movi rsp, 0x19000
    movi rbp, 0x19000
    flagset ac, 0
    flagset df, 0
done:
)";

}  // namespace

TEST(Sanitisation, EachClauseFlagsExactlyItself) {
    const auto layout = oracle::test_layout(4);
    for (const auto& v : oracle::sanitisation_vectors()) {
        const auto found = v.at_entry ? entry_sanitisation_check(v.state, layout)
                                      : exit_sanitisation_check(v.state, layout);
        EXPECT_EQ(details(found), v.expect) << v.name;
        for (const auto& f : found) {
            EXPECT_EQ(f.kind, v.at_entry ? ViolationKind::EntrySanitisationViolation
                                         : ViolationKind::ExitSanitisationViolation);
        }
    }
}

TEST(Sanitisation, StackTopIsOnTheTrustedStack) {
    const auto layout = oracle::test_layout(4);
    auto s = sanitised_state();
    s.reg(Register::Rsp) = constant(64, layout.stack_top());
    EXPECT_TRUE(entry_sanitisation_check(s, layout).empty());
    s.reg(Register::Rsp) = constant(64, layout.stack_top() + 8);
    EXPECT_EQ(details(entry_sanitisation_check(s, layout)), std::vector<std::string>{"register RSP"});
    s.reg(Register::Rsp) = constant(64, layout.stack_bottom());
    EXPECT_TRUE(entry_sanitisation_check(s, layout).empty());
}

TEST(Sanitisation, SymbolicValuesUseThePathCondition) {
    const auto layout = oracle::test_layout(4);
    auto s = sanitised_state();
    const Expr x = symbol(64, "x", 1);
    s.reg(Register::R9) = x;
    EXPECT_EQ(details(entry_sanitisation_check(s, layout)), std::vector<std::string>{"register R9"});
    s.pc.push_back(eq(x, constant(64, 0)));
    EXPECT_TRUE(entry_sanitisation_check(s, layout).empty());

    s.flag(FlagId::AC) = symbol(1, "flag_AC_init", 2);
    EXPECT_EQ(details(entry_sanitisation_check(s, layout)), std::vector<std::string>{"flag AC"});
}

TEST(Transitions, OrderlyLifecycle) {
    const auto ann = annotations();
    const auto layout = oracle::test_layout(8);
    auto s = sanitised_state();
    s.phase_state = {Phase::Entry, false};
    for (Address a : {kBase + 4, kBase + 8, kBase + 16, kBase + 20, kBase + 12, kBase + 24}) {
        s.rip = a;
        if (a == kBase + 24) {
            s.reg(Register::Rsp) = constant(64, 0x1000);
            s.reg(Register::Rbp) = constant(64, 0x1000);
        }
        EXPECT_TRUE(hook_transition(s, ann, layout).empty()) << std::hex << a;
    }
    EXPECT_EQ(s.phase_state.phase, Phase::Terminated);
    std::string rendered;
    EXPECT_TRUE(oracle::valid_phase_sequence(s.phase_marks, &rendered)) << rendered;
    EXPECT_EQ(rendered, "ENSOSXT");
}

TEST(Transitions, Violations) {
    const auto ann = annotations();
    const auto layout = oracle::test_layout(8);
    auto at = [&](Phase p, bool sanitised, Address rip) {
        auto s = sanitised_state();
        s.phase_state = {p, sanitised};
        s.rip = rip;
        auto v = hook_transition(s, ann, layout);
        return v.empty() ? std::string() : v.front().detail;
    };
    EXPECT_EQ(at(Phase::Entry, false, kBase + 8), "secure entered before sanitisation done");
    EXPECT_EQ(at(Phase::Exit, true, kBase + 8), "secure entered from exit");
    EXPECT_EQ(at(Phase::Entry, true, kBase + 12), "secure ended in entry");
    EXPECT_EQ(at(Phase::Entry, true, kBase + 16), "ocall entered from entry");
    EXPECT_EQ(at(Phase::Ocall, true, kBase + 24), "ocall may only return to secure");
    EXPECT_EQ(at(Phase::Secure, true, kBase + 24), "exit reached from secure");
    EXPECT_EQ(at(Phase::Secure, true, kBase + 4), "sanitisation done outside entry (secure)");
}

TEST(Transitions, ViolationLeavesPhaseUnchanged) {
    const auto ann = annotations();
    const auto layout = oracle::test_layout(8);
    auto s = sanitised_state();
    s.rip = kBase + 8;
    const auto v = hook_transition(s, ann, layout);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::TransitionViolation);
    EXPECT_EQ(s.phase_state.phase, Phase::Entry);
}

TEST(Policy, Table) {
    EXPECT_TRUE(PolicyTable::for_phase(Phase::Entry).untrusted_read_allowed);
    EXPECT_FALSE(PolicyTable::for_phase(Phase::Entry).untrusted_write_allowed);
    EXPECT_FALSE(PolicyTable::for_phase(Phase::Secure).untrusted_read_allowed);
    EXPECT_FALSE(PolicyTable::for_phase(Phase::Secure).untrusted_write_allowed);
    EXPECT_TRUE(PolicyTable::for_phase(Phase::Ocall).untrusted_read_allowed);
    EXPECT_TRUE(PolicyTable::for_phase(Phase::Ocall).untrusted_write_allowed);
    EXPECT_FALSE(PolicyTable::for_phase(Phase::Exit).untrusted_read_allowed);
    EXPECT_TRUE(PolicyTable::for_phase(Phase::Exit).untrusted_write_allowed);
}

TEST(Policy, AccessChecks) {
    const auto layout = oracle::test_layout(8);
    auto check = [&](Phase phase, AccessKind kind, Expr addr, PathCondition pc = {}) {
        auto s = sanitised_state();
        s.phase_state.phase = phase;
        s.pc = std::move(pc);
        return check_access(s, {kind, std::move(addr), std::nullopt, kBase}, layout);
    };
    using D = AccessDecision::Disposition;
    const Expr x = symbol(64, "untrusted_fetch", 3);

    auto r = check(Phase::Secure, AccessKind::Read, constant(64, 0x14000));
    EXPECT_TRUE(r.violations.empty());
    EXPECT_EQ(r.decision.disposition, D::TrustedAccess);
    EXPECT_EQ(r.decision.address, 0x14000u);

    r = check(Phase::Secure, AccessKind::Read, constant(64, 0));
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::OutOfEnclaveRead);
    EXPECT_EQ(r.violations[0].detail, "0x0");

    r = check(Phase::Entry, AccessKind::Read, constant(64, 0));
    EXPECT_TRUE(r.violations.empty());
    EXPECT_EQ(r.decision.disposition, D::UntrustedAccess);

    r = check(Phase::Entry, AccessKind::Write, constant(64, 0x40000));
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::OutOfEnclaveWrite);

    r = check(Phase::Exit, AccessKind::Write, x, {uge(x, constant(64, 0x20000))});
    EXPECT_TRUE(r.violations.empty());
    EXPECT_EQ(r.decision.disposition, D::UntrustedAccess);

    r = check(Phase::Ocall, AccessKind::Jump, constant(64, 0x40000));
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::OutOfEnclaveJump);

    r = check(Phase::Entry, AccessKind::Read, x);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::SymbolicRead);
    EXPECT_EQ(r.violations[0].detail, "untrusted_fetch#3");

    r = check(Phase::Secure, AccessKind::Write, add(x, constant(64, 8)), {ult(x, constant(64, 0x10000))});
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::SymbolicWrite);

    r = check(Phase::Secure, AccessKind::Jump, x);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::SymbolicJump);

    r = check(Phase::Secure, AccessKind::Read, x, {eq(x, constant(64, 0x14008))});
    EXPECT_TRUE(r.violations.empty());
    EXPECT_EQ(r.decision.address, 0x14008u);
}

TEST(Analysis, InitialState) {
    auto img = assembled(std::string(kPrologue) + "    eexit\n");
    SymbolPool pool;
    TransitionAnnotations ann{kBase, kBase + 52, {{kBase, kBase + 52}}, {}, kBase + 52};
    const auto s = initial_state(img, ann, 3, pool);
    EXPECT_EQ(s.rip, kBase);
    EXPECT_EQ(s.reg(Register::Rdi), constant(64, 3));
    EXPECT_EQ(s.reg(Register::Rsp).op(), ExprOp::Sym);
    EXPECT_EQ(s.flag(FlagId::AC).op(), ExprOp::Sym);
    EXPECT_EQ(s.phase_state.phase, Phase::Entry);
}

TEST(Analysis, ConfigValidation) {
    AnalysisConfig c;
    EXPECT_NO_THROW(validate_config(c));
    c.max_active_branches = 0;
    EXPECT_THROW(validate_config(c), AnalysisError);
    c = {};
    c.time_budget_seconds = 0;
    EXPECT_THROW(validate_config(c), AnalysisError);
    c = {};
    c.stack_size = 0;
    EXPECT_THROW(validate_config(c), AnalysisError);
}

TEST(Analysis, LayoutOverrides) {
    auto img = assembled(std::string(kPrologue) + "    eexit\n");
    AnalysisConfig c;
    c.stack_size = 0x2000;
    c.heap_size = 0x800;
    const auto out = apply_layout_overrides(img, c);
    EXPECT_EQ(out.layout.stack_size, 0x2000u);
    EXPECT_EQ(out.layout.heap_size, 0x800u);
    EXPECT_EQ(out.layout.base, img.layout.base);
}

// Forks on k untrusted words; every path then exits cleanly.
std::string brancher(int k) {
    std::string src = kPrologue;
    src += "    movi rsi, 0x40000\n";
    for (int i = 0; i < k; ++i) {
        src += "    load rax, [rsi+" + std::to_string(8 * i) + "]\n";
        src += "    cmp rax, 0x80\n    jcc ult, f" + std::to_string(i) + "\nf" + std::to_string(i) + ":\n";
    }
    src += "site:\n    call secure_fn\n    movi rcx, 0\n    movi rsp, 0\n    movi rbp, 0\nout:\n    eexit\n";
    src += "secure_fn:\n    ret\n";
    return src;
}

TransitionAnnotations annotations_for(const EnclaveImage& img) {
    TransitionAnnotations a;
    a.entry_address = img.symbols.at("entry");
    a.entry_sanitisation_done = img.symbols.at("done");
    a.exit_address = img.symbols.at("out");
    const Address site = img.symbols.at("site");
    a.secure.push_back({site, site + 4});
    return a;
}

TEST(Analysis, CleanBranchingEnclave) {
    const auto img = assembled(brancher(3));
    const auto r = analyze_ecall(img, annotations_for(img), {}, 0);
    EXPECT_EQ(r.status, EcallStatus::Clean);
    EXPECT_EQ(r.paths_explored, 8u);
    EXPECT_EQ(r.paths_truncated, 0u);
    EXPECT_LE(r.peak_active_states, 8u);
}

TEST(Analysis, BranchCapStops) {
    const auto img = assembled(brancher(6));
    AnalysisConfig c;
    c.max_active_branches = 10;
    const auto r = analyze_ecall(img, annotations_for(img), c, 0);
    EXPECT_EQ(r.status, EcallStatus::Stopped);
    EXPECT_LE(r.peak_active_states, 10u);
}

TEST(Analysis, InvalidEcallIndex) {
    const auto img = assembled(brancher(1));
    EXPECT_THROW(analyze_ecall(img, annotations_for(img), {}, 1), AnalysisError);
}

TEST(Analysis, StepBudgetCountsAsTruncated) {
    const auto img = assembled(std::string(kPrologue) + "spin:\n    jmp spin\nsite:\n    call spin\nout:\n    eexit\n");
    TransitionAnnotations a{kBase, img.symbols.at("done"), {{img.symbols.at("site"), img.symbols.at("out")}}, {},
                            img.symbols.at("out")};
    AnalysisConfig c;
    c.step_budget_per_path = 100;
    const auto r = analyze_ecall(img, a, c, 0);
    EXPECT_EQ(r.status, EcallStatus::Clean);
    EXPECT_EQ(r.paths_truncated, 1u);
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0], "step budget exceeded");
}

TEST(Analysis, ParallelMatchesSerial) {
    auto img = assembled(brancher(4));
    auto a = annotations_for(img);
    a.secure.push_back(a.secure.front());
    a.secure.push_back(a.secure.front());
    const auto par = analyze_enclave(img, a, {});
    const auto ser = analyze_enclave_serial(img, a, {});
    ASSERT_EQ(par.ecalls.size(), 3u);
    EXPECT_EQ(par.totals, ser.totals);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(par.ecalls[i].ecall_index, i);
        EXPECT_EQ(par.ecalls[i].violations, ser.ecalls[i].violations);
        EXPECT_EQ(par.ecalls[i].paths_explored, ser.ecalls[i].paths_explored);
    }
}
