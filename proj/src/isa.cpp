#include "orderly/isa.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace orderly {

namespace {

constexpr std::array<std::string_view, kRegisterCount> kRegisterNames = {
    "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
    "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15",
};
constexpr std::array<std::string_view, kFlagCount> kFlagNames = {"ZF", "SF", "CF", "OF", "AC", "DF"};
constexpr std::array<std::string_view, 6> kConditionNames = {"eq", "ne", "ult", "uge", "slt", "sge"};
constexpr std::array<std::string_view, 23> kOpcodeNames = {
    "MOVI", "MOVR", "LOAD", "STORE", "ADD", "SUB", "AND", "OR", "XOR", "SHL", "SHR",
    "CMP",  "JMP",  "JMPR", "JCC",   "CALL", "CALLR", "RET", "PUSH", "POP", "FLAGSET",
    "OCALL", "EEXIT",
};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
    for (std::size_t i = 0; i < N; ++i) {
        if (iequals(names[i], text)) return static_cast<Enum>(i);
    }
    return std::nullopt;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

// Half-open byte range relative to base.
struct Range {
    std::string_view name;
    std::uint64_t offset;
    std::uint64_t length;
};

}  // namespace

std::string_view register_name(Register r) { return kRegisterNames[static_cast<std::size_t>(r)]; }
std::string_view flag_name(FlagId f) { return kFlagNames[static_cast<std::size_t>(f)]; }
std::string_view condition_name(Condition c) { return kConditionNames[static_cast<std::size_t>(c)]; }
std::string_view opcode_name(Opcode op) { return kOpcodeNames[static_cast<std::size_t>(op)]; }

std::optional<Register> parse_register(std::string_view text) { return lookup<Register>(kRegisterNames, text); }
std::optional<FlagId> parse_flag(std::string_view text) { return lookup<FlagId>(kFlagNames, text); }
std::optional<Condition> parse_condition(std::string_view text) { return lookup<Condition>(kConditionNames, text); }
std::optional<Opcode> parse_opcode(std::string_view text) { return lookup<Opcode>(kOpcodeNames, text); }

bool is_alu(Opcode op) { return op >= Opcode::Add && op <= Opcode::Shr; }

Instruction Instruction::movi(Register dst, std::uint64_t value) {
    Instruction i;
    i.op = Opcode::Movi;
    i.dst = dst;
    i.imm = value;
    return i;
}

Instruction Instruction::movr(Register dst, Register src) {
    Instruction i;
    i.op = Opcode::Movr;
    i.dst = dst;
    i.src = src;
    return i;
}

Instruction Instruction::load(Register dst, Register base, std::int32_t disp) {
    Instruction i;
    i.op = Opcode::Load;
    i.dst = dst;
    i.src = base;
    i.disp = disp;
    return i;
}

Instruction Instruction::store(Register base, std::int32_t disp, Register value) {
    Instruction i;
    i.op = Opcode::Store;
    i.dst = base;
    i.src = value;
    i.disp = disp;
    return i;
}

Instruction Instruction::alu(Opcode op, Register dst, Register src) {
    if (!is_alu(op)) throw std::invalid_argument("not an ALU opcode");
    Instruction i;
    i.op = op;
    i.dst = dst;
    i.src = src;
    return i;
}

Instruction Instruction::alu_imm(Opcode op, Register dst, std::uint64_t value) {
    if (!is_alu(op)) throw std::invalid_argument("not an ALU opcode");
    Instruction i;
    i.op = op;
    i.dst = dst;
    i.imm = value;
    i.has_imm = true;
    return i;
}

Instruction Instruction::cmp(Register a, Register b) {
    Instruction i;
    i.op = Opcode::Cmp;
    i.dst = a;
    i.src = b;
    return i;
}

Instruction Instruction::cmp_imm(Register a, std::uint64_t value) {
    Instruction i;
    i.op = Opcode::Cmp;
    i.dst = a;
    i.imm = value;
    i.has_imm = true;
    return i;
}

Instruction Instruction::jmp(Address target) {
    Instruction i;
    i.op = Opcode::Jmp;
    i.imm = target;
    return i;
}

Instruction Instruction::jmpr(Register target) {
    Instruction i;
    i.op = Opcode::Jmpr;
    i.dst = target;
    return i;
}

Instruction Instruction::jcc(Condition cond, Address target) {
    Instruction i;
    i.op = Opcode::Jcc;
    i.cond = cond;
    i.imm = target;
    return i;
}

Instruction Instruction::call(Address target) {
    Instruction i;
    i.op = Opcode::Call;
    i.imm = target;
    return i;
}

Instruction Instruction::callr(Register target) {
    Instruction i;
    i.op = Opcode::Callr;
    i.dst = target;
    return i;
}

Instruction Instruction::ret() {
    Instruction i;
    i.op = Opcode::Ret;
    return i;
}

Instruction Instruction::push(Register r) {
    Instruction i;
    i.op = Opcode::Push;
    i.dst = r;
    return i;
}

Instruction Instruction::pop(Register r) {
    Instruction i;
    i.op = Opcode::Pop;
    i.dst = r;
    return i;
}

Instruction Instruction::flagset(FlagId flag, bool bit) {
    Instruction i;
    i.op = Opcode::Flagset;
    i.flag = flag;
    i.imm = bit ? 1 : 0;
    return i;
}

Instruction Instruction::ocall(std::uint16_t id) {
    Instruction i;
    i.op = Opcode::Ocall;
    i.imm = id;
    return i;
}

Instruction Instruction::eexit() { return Instruction{}; }

bool Instruction::has_direct_target() const {
    return op == Opcode::Jmp || op == Opcode::Jcc || op == Opcode::Call;
}

std::string to_string(const Instruction& insn) {
    std::ostringstream os;
    std::string mnemonic(opcode_name(insn.op));
    std::transform(mnemonic.begin(), mnemonic.end(), mnemonic.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    os << mnemonic;
    auto mem = [&](Register base) {
        os << '[' << register_name(base);
        if (insn.disp < 0) os << '-' << hex(static_cast<std::uint64_t>(-static_cast<std::int64_t>(insn.disp)));
        if (insn.disp > 0) os << '+' << hex(static_cast<std::uint64_t>(insn.disp));
        os << ']';
    };
    switch (insn.op) {
        case Opcode::Movi: os << ' ' << register_name(insn.dst) << ", " << hex(insn.imm); break;
        case Opcode::Movr: os << ' ' << register_name(insn.dst) << ", " << register_name(insn.src); break;
        case Opcode::Load:
            os << ' ' << register_name(insn.dst) << ", ";
            mem(insn.src);
            break;
        case Opcode::Store:
            os << ' ';
            mem(insn.dst);
            os << ", " << register_name(insn.src);
            break;
        case Opcode::Add: case Opcode::Sub: case Opcode::And: case Opcode::Or:
        case Opcode::Xor: case Opcode::Shl: case Opcode::Shr: case Opcode::Cmp:
            os << ' ' << register_name(insn.dst) << ", ";
            if (insn.has_imm) os << hex(insn.imm);
            else os << register_name(insn.src);
            break;
        case Opcode::Jmp: case Opcode::Call: os << ' ' << hex(insn.imm); break;
        case Opcode::Jcc: os << ' ' << condition_name(insn.cond) << ", " << hex(insn.imm); break;
        case Opcode::Jmpr: case Opcode::Callr: case Opcode::Push: case Opcode::Pop:
            os << ' ' << register_name(insn.dst);
            break;
        case Opcode::Flagset: os << ' ' << flag_name(insn.flag) << ", " << insn.imm; break;
        case Opcode::Ocall: os << ' ' << insn.imm; break;
        case Opcode::Ret: case Opcode::Eexit: break;
    }
    return os.str();
}

std::string_view region_name(AddressRegion region) {
    switch (region) {
        case AddressRegion::TrustedCode: return "TrustedCode";
        case AddressRegion::TrustedData: return "TrustedData";
        case AddressRegion::TrustedHeap: return "TrustedHeap";
        case AddressRegion::TrustedStack: return "TrustedStack";
        case AddressRegion::Untrusted: return "Untrusted";
    }
    return "?";
}

AddressRegion classify_address(const EnclaveLayout& layout, Address addr) {
    if (!layout.contains(addr)) return AddressRegion::Untrusted;
    const std::uint64_t off = addr - layout.base;
    auto in = [off](std::uint64_t begin, std::uint64_t length) { return off >= begin && off - begin < length; };
    if (in(layout.code_offset, layout.code_length)) return AddressRegion::TrustedCode;
    if (in(layout.heap_offset, layout.heap_size)) return AddressRegion::TrustedHeap;
    if (in(layout.stack_offset, layout.stack_size)) return AddressRegion::TrustedStack;
    return AddressRegion::TrustedData;
}

Address instruction_address(const EnclaveLayout& layout, std::size_t code_size, std::size_t index) {
    if (index >= code_size) throw std::out_of_range("instruction index out of range");
    return layout.code_begin() + kInstructionWidth * index;
}

Address instruction_address(const EnclaveImage& image, std::size_t index) {
    return instruction_address(image.layout, image.code.size(), index);
}

std::optional<std::size_t> instruction_index(const EnclaveImage& image, Address addr) {
    const Address begin = image.layout.code_begin();
    if (addr < begin) return std::nullopt;
    const std::uint64_t off = addr - begin;
    if (off % kInstructionWidth != 0) return std::nullopt;
    const std::uint64_t index = off / kInstructionWidth;
    if (index >= image.code.size()) return std::nullopt;
    return static_cast<std::size_t>(index);
}

std::vector<std::string> validate_layout(const EnclaveLayout& layout) {
    std::vector<std::string> errors;
    const std::array<std::pair<std::string_view, std::uint64_t>, 10> fields = {{
        {"base", layout.base}, {"size", layout.size},
        {"code_offset", layout.code_offset}, {"code_length", layout.code_length},
        {"data_offset", layout.data_offset}, {"data_length", layout.data_length},
        {"heap_offset", layout.heap_offset}, {"heap_size", layout.heap_size},
        {"stack_offset", layout.stack_offset}, {"stack_size", layout.stack_size},
    }};
    for (const auto& [name, value] : fields) {
        const bool code_field = name == "code_offset" || name == "code_length";
        if (value % (code_field ? kInstructionWidth : 8) != 0) errors.push_back("misaligned: " + std::string(name));
    }
    if (layout.size == 0) errors.emplace_back("empty enclave: size");
    if (layout.base + layout.size < layout.base) errors.emplace_back("overflow: base+size");

    const std::array<Range, 4> regions = {{
        {"code", layout.code_offset, layout.code_length},
        {"data", layout.data_offset, layout.data_length},
        {"heap", layout.heap_offset, layout.heap_size},
        {"stack", layout.stack_offset, layout.stack_size},
    }};
    for (const auto& r : regions) {
        if (r.offset > layout.size || r.length > layout.size - r.offset) {
            errors.push_back("region outside enclave: " + std::string(r.name));
        }
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
        for (std::size_t j = i + 1; j < regions.size(); ++j) {
            const auto& a = regions[i];
            const auto& b = regions[j];
            if (a.length == 0 || b.length == 0) continue;
            const bool disjoint = a.offset >= b.offset + b.length || b.offset >= a.offset + a.length;
            if (!disjoint) {
                errors.push_back("region overlap: " + std::string(a.name) + "/" + std::string(b.name));
            }
        }
    }
    return errors;
}

std::vector<std::string> validate_image(const EnclaveImage& image) {
    std::vector<std::string> errors;
    if (image.format_version != EnclaveImage::kFormatVersion) {
        errors.emplace_back("unsupported format_version");
    }
    auto layout_errors = validate_layout(image.layout);
    errors.insert(errors.end(), layout_errors.begin(), layout_errors.end());
    const auto& layout = image.layout;

    if (image.code.size() * kInstructionWidth != layout.code_length) {
        errors.emplace_back("code length mismatch: code_length");
    }
    for (std::size_t i = 0; i < image.code.size(); ++i) {
        const auto& insn = image.code[i];
        if (insn.has_direct_target() && !instruction_index(image, insn.imm)) {
            errors.push_back("invalid jump target at index " + std::to_string(i));
        }
    }
    for (const auto& seg : image.data) {
        const std::uint64_t bytes = seg.words.size() * 8;
        const bool fits = seg.offset >= layout.data_offset && seg.offset % 8 == 0 &&
                          seg.offset - layout.data_offset <= layout.data_length &&
                          bytes <= layout.data_length - (seg.offset - layout.data_offset);
        if (!fits) errors.push_back("data entry out of range: " + hex(seg.offset));
    }
    for (const auto& [name, addr] : image.symbols) {
        if (!layout.contains(addr)) errors.push_back("symbol out of range: " + name);
    }
    if (image.annotations) {
        auto ann_errors = validate_annotations(image, *image.annotations);
        errors.insert(errors.end(), ann_errors.begin(), ann_errors.end());
    }
    return errors;
}

std::vector<std::string> validate_annotations(const EnclaveImage& image,
                                              const TransitionAnnotations& annotations) {
    std::vector<std::string> errors;
    auto check = [&](Address addr, const std::string& field) {
        if (!instruction_index(image, addr)) errors.push_back("annotation not an instruction address: " + field);
    };
    check(annotations.entry_address, "entry_address");
    check(annotations.entry_sanitisation_done, "entry_sanitisation_done");
    check(annotations.exit_address, "exit_address");
    for (std::size_t i = 0; i < annotations.secure.size(); ++i) {
        const auto& p = annotations.secure[i];
        check(p.begin, "secure[" + std::to_string(i) + "].begin");
        check(p.end, "secure[" + std::to_string(i) + "].end");
        if (p.begin == p.end) errors.push_back("annotation pair not distinct: secure[" + std::to_string(i) + "]");
    }
    for (std::size_t i = 0; i < annotations.ocall.size(); ++i) {
        const auto& p = annotations.ocall[i];
        check(p.begin, "ocall[" + std::to_string(i) + "].begin");
        check(p.end, "ocall[" + std::to_string(i) + "].end");
        if (p.begin == p.end) errors.push_back("annotation pair not distinct: ocall[" + std::to_string(i) + "]");
    }
    if (annotations.entry_address == annotations.exit_address) {
        errors.emplace_back("annotation entry equals exit");
    }
    return errors;
}

}  // namespace orderly
