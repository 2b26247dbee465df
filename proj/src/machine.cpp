#include "orderly/machine.hpp"

#include <sstream>

namespace orderly {

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::Entry: return "entry";
        case Phase::Secure: return "secure";
        case Phase::Ocall: return "ocall";
        case Phase::Exit: return "exit";
        case Phase::Terminated: return "terminated";
    }
    return "?";
}

PhaseMark mark_for(Phase p) {
    switch (p) {
        case Phase::Entry: return PhaseMark::Entry;
        case Phase::Secure: return PhaseMark::Secure;
        case Phase::Ocall: return PhaseMark::Ocall;
        case Phase::Exit: return PhaseMark::Exit;
        case Phase::Terminated: return PhaseMark::Terminated;
    }
    return PhaseMark::Terminated;
}

std::string_view access_kind_name(AccessKind k) {
    switch (k) {
        case AccessKind::Read: return "read";
        case AccessKind::Write: return "write";
        case AccessKind::Jump: return "jump";
    }
    return "?";
}

void MachineState::set_phase(Phase p) {
    phase_state.phase = p;
    phase_marks.push_back(mark_for(p));
}

void MachineState::terminate(PathStatus s, std::string why) {
    status = s;
    diagnostic = std::move(why);
}

Expr fresh_symbol(unsigned width, std::string tag, MachineState& state, SymbolPool& pool) {
    if (tag == kUntrustedFetchTag) ++state.fetch_counter;
    return pool.fresh(width, std::move(tag));
}

AccessDecision PermissiveHooks::on_access(MachineState& state, const AccessEvent& event) {
    const auto u = unique_value(state.pc, event.address);
    if (u.unique()) {
        if (layout_.contains(u.value)) return {AccessDecision::Disposition::TrustedAccess, u.value};
        return {AccessDecision::Disposition::UntrustedAccess, 0};
    }
    const Expr inside = in_range(event.address, layout_.base, layout_.size);
    if (!may_hold(state.pc, inside)) return {AccessDecision::Disposition::UntrustedAccess, 0};
    state.terminate(PathStatus::Pruned, "symbolic address");
    return {AccessDecision::Disposition::Prune, 0};
}

MachineState concrete_state(const EnclaveImage& image, Address entry) {
    MachineState s;
    s.rip = entry;
    for (auto& r : s.regs) r = constant(64, 0);
    for (auto& f : s.flags) f = constant(1, 0);
    for (const auto& seg : image.data) {
        for (std::size_t i = 0; i < seg.words.size(); ++i) {
            s.trusted_store[image.layout.base + seg.offset + 8 * i] = constant(64, seg.words[i]);
        }
    }
    return s;
}

CompareFlags compare_flags(const Expr& a, const Expr& b) {
    CompareFlags f;
    f.zf = eq(a, b);
    f.cf = ult(a, b);
    f.sf = slt(sub(a, b), constant(a.width(), 0));
    // a <s b  <=>  SF != OF, so OF = SF ^ (a <s b).
    f.of = bit_xor(f.sf, slt(a, b));
    return f;
}

Expr branch_condition(const MachineState& state, Condition cc) {
    const Expr& zf = state.flag(FlagId::ZF);
    const Expr& cf = state.flag(FlagId::CF);
    const Expr sf_ne_of = bit_xor(state.flag(FlagId::SF), state.flag(FlagId::OF));
    switch (cc) {
        case Condition::Eq: return zf;
        case Condition::Ne: return bit_not(zf);
        case Condition::Ult: return cf;
        case Condition::Uge: return bit_not(cf);
        case Condition::Slt: return sf_ne_of;
        case Condition::Sge: return bit_not(sf_ne_of);
    }
    return zf;
}

namespace {

std::string hex(Address a) {
    std::ostringstream os;
    os << "0x" << std::hex << a;
    return os.str();
}

class Stepper {
public:
    Stepper(MachineState& state, const EnclaveImage& image, HookSet& hooks, SymbolPool& pool,
            std::vector<AccessEvent>& events)
        : s_(state), image_(image), hooks_(hooks), pool_(pool), events_(events) {}

    std::optional<Expr> read(const Expr& address) {
        const auto d = access({AccessKind::Read, address, std::nullopt, s_.rip});
        switch (d.disposition) {
            case AccessDecision::Disposition::Prune: return std::nullopt;
            case AccessDecision::Disposition::UntrustedAccess:
                return fresh_symbol(64, std::string(kUntrustedFetchTag), s_, pool_);
            case AccessDecision::Disposition::TrustedAccess: break;
        }
        if (!trusted_word_ok(d.address)) return std::nullopt;
        auto it = s_.trusted_store.find(d.address);
        return it == s_.trusted_store.end() ? constant(64, 0) : it->second;
    }

    bool write(const Expr& address, const Expr& value) {
        const auto d = access({AccessKind::Write, address, value, s_.rip});
        switch (d.disposition) {
            case AccessDecision::Disposition::Prune: return false;
            case AccessDecision::Disposition::UntrustedAccess:
                s_.untrusted_write_log.push_back({s_.phase_state.phase, address, value, s_.rip});
                return true;
            case AccessDecision::Disposition::TrustedAccess: break;
        }
        if (!trusted_word_ok(d.address)) return false;
        s_.trusted_store[d.address] = value;
        return true;
    }

    std::optional<Address> jump(const Expr& target) {
        const auto d = access({AccessKind::Jump, target, std::nullopt, s_.rip});
        switch (d.disposition) {
            case AccessDecision::Disposition::Prune: return std::nullopt;
            case AccessDecision::Disposition::UntrustedAccess:
                fault("jump to untrusted memory");
                return std::nullopt;
            case AccessDecision::Disposition::TrustedAccess: break;
        }
        if (!instruction_index(image_, d.address)) {
            fault("jump target not an instruction: " + hex(d.address));
            return std::nullopt;
        }
        return d.address;
    }

    void fault(std::string why) {
        if (s_.status == PathStatus::Active) s_.terminate(PathStatus::Faulted, std::move(why));
    }

private:
    AccessDecision access(AccessEvent ev) {
        events_.push_back(ev);
        auto d = hooks_.on_access(s_, events_.back());
        if (d.disposition == AccessDecision::Disposition::Prune && s_.status == PathStatus::Active) {
            s_.terminate(PathStatus::Pruned, std::string(access_kind_name(ev.kind)) + " rejected");
        }
        return d;
    }

    bool trusted_word_ok(Address addr) {
        if (classify_address(image_.layout, addr) == AddressRegion::TrustedCode) {
            fault("data access to trusted code: " + hex(addr));
            return false;
        }
        if (addr % 8 != 0) {
            fault("unaligned trusted access: " + hex(addr));
            return false;
        }
        return true;
    }

    MachineState& s_;
    const EnclaveImage& image_;
    HookSet& hooks_;
    SymbolPool& pool_;
    std::vector<AccessEvent>& events_;
};

Expr alu(Opcode op, const Expr& a, const Expr& b) {
    switch (op) {
        case Opcode::Add: return add(a, b);
        case Opcode::Sub: return sub(a, b);
        case Opcode::And: return bit_and(a, b);
        case Opcode::Or: return bit_or(a, b);
        case Opcode::Xor: return bit_xor(a, b);
        case Opcode::Shl: return shl(a, b);
        case Opcode::Shr: return lshr(a, b);
        default: break;
    }
    return a;
}

Expr displaced(const Expr& base, std::int32_t disp) {
    return add(base, constant(64, static_cast<std::uint64_t>(static_cast<std::int64_t>(disp))));
}

}  // namespace

StepResult step(MachineState state, const EnclaveImage& image, HookSet& hooks, SymbolPool& pool,
                const StepOptions& options) {
    StepResult out;
    auto finish = [&]() -> StepResult& {
        out.successors.push_back(std::move(state));
        return out;
    };
    if (state.status != PathStatus::Active) return finish();

    const auto index = instruction_index(image, state.rip);
    if (!index) {
        state.terminate(PathStatus::Faulted, "rip outside code region: " + hex(state.rip));
        return finish();
    }
    if (state.step_count >= options.step_budget) {
        state.terminate(PathStatus::Truncated, "step budget exceeded");
        return finish();
    }
    state.trace.push_back(state.rip);
    if (state.trace.size() > kTraceLength) state.trace.pop_front();

    if (!hooks.before_instruction(state)) {
        if (state.status == PathStatus::Active) state.terminate(PathStatus::Pruned, "hook rejected");
        return finish();
    }

    const Instruction& insn = image.code[*index];
    ++state.step_count;
    Address next = state.rip + kInstructionWidth;
    Stepper io(state, image, hooks, pool, out.events);
    Expr& rsp = state.reg(Register::Rsp);

    switch (insn.op) {
        case Opcode::Movi: state.reg(insn.dst) = constant(64, insn.imm); break;
        case Opcode::Movr: state.reg(insn.dst) = state.reg(insn.src); break;
        case Opcode::Load: {
            auto v = io.read(displaced(state.reg(insn.src), insn.disp));
            if (!v) return finish();
            state.reg(insn.dst) = *v;
            break;
        }
        case Opcode::Store:
            if (!io.write(displaced(state.reg(insn.dst), insn.disp), state.reg(insn.src))) return finish();
            break;
        case Opcode::Add: case Opcode::Sub: case Opcode::And: case Opcode::Or:
        case Opcode::Xor: case Opcode::Shl: case Opcode::Shr: {
            const Expr rhs = insn.has_imm ? constant(64, insn.imm) : state.reg(insn.src);
            state.reg(insn.dst) = alu(insn.op, state.reg(insn.dst), rhs);
            break;
        }
        case Opcode::Cmp: {
            const Expr rhs = insn.has_imm ? constant(64, insn.imm) : state.reg(insn.src);
            const auto f = compare_flags(state.reg(insn.dst), rhs);
            state.flag(FlagId::ZF) = f.zf;
            state.flag(FlagId::CF) = f.cf;
            state.flag(FlagId::SF) = f.sf;
            state.flag(FlagId::OF) = f.of;
            break;
        }
        case Opcode::Jmp: next = insn.imm; break;
        case Opcode::Jmpr: {
            auto target = io.jump(state.reg(insn.dst));
            if (!target) return finish();
            next = *target;
            break;
        }
        case Opcode::Jcc: {
            const Expr c = simplify(branch_condition(state, insn.cond));
            if (c.is_const()) {
                if (c.value()) next = insn.imm;
                break;
            }
            const Expr not_c = bit_not(c);
            const SatResult taken = query(state.pc, c);
            const SatResult fall = query(state.pc, not_c);
            if (taken == SatResult::Unsat && fall == SatResult::Unsat) {
                state.terminate(PathStatus::Pruned, "infeasible path");
                return finish();
            }
            if (taken == SatResult::Unsat) break;
            if (fall == SatResult::Unsat) {
                next = insn.imm;
                break;
            }
            MachineState taken_state = state;
            state.pc.push_back(not_c);
            state.rip = next;
            if (fall == SatResult::Unknown) state.feasibility = Feasibility::Unknown;
            taken_state.pc.push_back(c);
            taken_state.rip = insn.imm;
            if (taken == SatResult::Unknown) taken_state.feasibility = Feasibility::Unknown;
            out.successors.push_back(std::move(state));
            out.successors.push_back(std::move(taken_state));
            return out;
        }
        case Opcode::Call:
        case Opcode::Callr: {
            const Expr slot = sub(rsp, constant(64, 8));
            if (!io.write(slot, constant(64, state.rip + kInstructionWidth))) return finish();
            rsp = slot;
            if (insn.op == Opcode::Call) {
                next = insn.imm;
            } else {
                auto target = io.jump(state.reg(insn.dst));
                if (!target) return finish();
                next = *target;
            }
            break;
        }
        case Opcode::Ret: {
            auto target_value = io.read(rsp);
            if (!target_value) return finish();
            rsp = add(rsp, constant(64, 8));
            auto target = io.jump(*target_value);
            if (!target) return finish();
            next = *target;
            break;
        }
        case Opcode::Push: {
            const Expr slot = sub(rsp, constant(64, 8));
            if (!io.write(slot, state.reg(insn.dst))) return finish();
            rsp = slot;
            break;
        }
        case Opcode::Pop: {
            auto v = io.read(rsp);
            if (!v) return finish();
            rsp = add(rsp, constant(64, 8));
            state.reg(insn.dst) = *v;
            break;
        }
        case Opcode::Flagset: state.flag(insn.flag) = constant(1, insn.imm & 1); break;
        case Opcode::Ocall:
            if (!hooks.on_ocall(state)) {
                if (state.status == PathStatus::Active) state.terminate(PathStatus::Pruned, "ocall rejected");
                return finish();
            }
            state.reg(Register::Rax) = fresh_symbol(64, "ocall_ret", state, pool);
            break;
        case Opcode::Eexit:
            hooks.on_eexit(state);
            if (state.status == PathStatus::Active) state.terminate(PathStatus::Exited);
            return finish();
    }
    state.rip = next;
    return finish();
}

}  // namespace orderly
