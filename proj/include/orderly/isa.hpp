#pragma once

// Enclave machine language: registers, instructions, memory layout and the
// loadable enclave image.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace orderly {

using Address = std::uint64_t;

enum class Register : std::uint8_t {
    Rax, Rbx, Rcx, Rdx, Rsi, Rdi, Rbp, Rsp,
    R8, R9, R10, R11, R12, R13, R14, R15,
};
inline constexpr std::size_t kRegisterCount = 16;

enum class FlagId : std::uint8_t { ZF, SF, CF, OF, AC, DF };
inline constexpr std::size_t kFlagCount = 6;

enum class Condition : std::uint8_t { Eq, Ne, Ult, Uge, Slt, Sge };

enum class Opcode : std::uint8_t {
    Movi, Movr, Load, Store,
    Add, Sub, And, Or, Xor, Shl, Shr,
    Cmp, Jmp, Jmpr, Jcc, Call, Callr, Ret,
    Push, Pop, Flagset, Ocall, Eexit,
};

inline constexpr std::uint64_t kInstructionWidth = 4;

std::string_view register_name(Register r);     // "rax"
std::string_view flag_name(FlagId f);           // "AC"
std::string_view condition_name(Condition c);   // "ult"
std::string_view opcode_name(Opcode op);        // "MOVI"

std::optional<Register> parse_register(std::string_view text);
std::optional<FlagId> parse_flag(std::string_view text);
std::optional<Condition> parse_condition(std::string_view text);
std::optional<Opcode> parse_opcode(std::string_view text);

bool is_alu(Opcode op);

/// One EML instruction. Fields not used by an opcode keep their defaults so
/// that equality is structural.
///
/// | opcode          | fields used                         |
/// |-----------------|-------------------------------------|
/// | MOVI            | dst, imm                            |
/// | MOVR            | dst, src                            |
/// | LOAD            | dst, src (base), disp               |
/// | STORE           | dst (base), src (value), disp       |
/// | ALU, CMP        | dst, src or imm (has_imm)           |
/// | JMP, CALL       | imm (target)                        |
/// | JCC             | cond, imm (target)                  |
/// | JMPR, CALLR     | dst                                 |
/// | PUSH, POP       | dst                                 |
/// | FLAGSET         | flag, imm (bit)                     |
/// | OCALL           | imm (16-bit id)                     |
struct Instruction {
    Opcode op = Opcode::Eexit;
    Register dst = Register::Rax;
    Register src = Register::Rax;
    std::uint64_t imm = 0;
    std::int32_t disp = 0;
    bool has_imm = false;
    Condition cond = Condition::Eq;
    FlagId flag = FlagId::AC;

    static Instruction movi(Register dst, std::uint64_t value);
    static Instruction movr(Register dst, Register src);
    static Instruction load(Register dst, Register base, std::int32_t disp);
    static Instruction store(Register base, std::int32_t disp, Register value);
    static Instruction alu(Opcode op, Register dst, Register src);
    static Instruction alu_imm(Opcode op, Register dst, std::uint64_t value);
    static Instruction cmp(Register a, Register b);
    static Instruction cmp_imm(Register a, std::uint64_t value);
    static Instruction jmp(Address target);
    static Instruction jmpr(Register target);
    static Instruction jcc(Condition cond, Address target);
    static Instruction call(Address target);
    static Instruction callr(Register target);
    static Instruction ret();
    static Instruction push(Register r);
    static Instruction pop(Register r);
    static Instruction flagset(FlagId flag, bool bit);
    static Instruction ocall(std::uint16_t id);
    static Instruction eexit();

    /// True for JMP, JCC and CALL, whose target is a code address in imm.
    bool has_direct_target() const;

    bool operator==(const Instruction&) const = default;
};

std::string to_string(const Instruction& insn);

enum class AddressRegion : std::uint8_t {
    TrustedCode, TrustedData, TrustedHeap, TrustedStack, Untrusted,
};
std::string_view region_name(AddressRegion region);

/// Enclave memory layout. All offsets are relative to base.
struct EnclaveLayout {
    Address base = 0;
    std::uint64_t size = 0;
    std::uint64_t code_offset = 0;
    std::uint64_t code_length = 0;
    std::uint64_t data_offset = 0;
    std::uint64_t data_length = 0;
    std::uint64_t heap_offset = 0;
    std::uint64_t heap_size = 0;
    std::uint64_t stack_offset = 0;
    std::uint64_t stack_size = 0;

    Address end() const { return base + size; }
    Address code_begin() const { return base + code_offset; }
    Address stack_bottom() const { return base + stack_offset; }
    Address stack_top() const { return base + stack_offset + stack_size; }
    bool contains(Address addr) const { return addr >= base && addr - base < size; }

    bool operator==(const EnclaveLayout&) const = default;
};

AddressRegion classify_address(const EnclaveLayout& layout, Address addr);

/// Consecutive initialised data words starting at `offset` (relative to base).
struct DataSegment {
    std::uint64_t offset = 0;
    std::vector<std::uint64_t> words;

    bool operator==(const DataSegment&) const = default;
};

struct AddressPair {
    Address begin = 0;
    Address end = 0;

    bool operator==(const AddressPair&) const = default;
    auto operator<=>(const AddressPair&) const = default;
};

/// Addresses marking phase boundaries of an enclave run.
struct TransitionAnnotations {
    Address entry_address = 0;
    Address entry_sanitisation_done = 0;
    std::vector<AddressPair> secure;
    std::vector<AddressPair> ocall;
    Address exit_address = 0;

    bool operator==(const TransitionAnnotations&) const = default;
};

struct EnclaveImage {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    EnclaveLayout layout;
    std::vector<Instruction> code;
    std::vector<DataSegment> data;
    std::map<std::string, Address> symbols;
    std::optional<TransitionAnnotations> annotations;

    bool operator==(const EnclaveImage&) const = default;
};

/// Throws std::out_of_range for an index past the end of the code list.
Address instruction_address(const EnclaveLayout& layout, std::size_t code_size, std::size_t index);
Address instruction_address(const EnclaveImage& image, std::size_t index);

/// Index of the instruction at `addr`, if `addr` is a valid instruction address.
std::optional<std::size_t> instruction_index(const EnclaveImage& image, Address addr);

/// Structural errors, one per violated invariant. Empty means valid.
std::vector<std::string> validate_layout(const EnclaveLayout& layout);
std::vector<std::string> validate_image(const EnclaveImage& image);
std::vector<std::string> validate_annotations(const EnclaveImage& image,
                                              const TransitionAnnotations& annotations);

}  // namespace orderly
