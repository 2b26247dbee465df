#pragma once

// Reference models used to check the library: a plain concrete interpreter,
// an 8-bit constraint language with brute-force evaluation, and a phase
// sequence replayer. None of them reuse the library's evaluation code.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "orderly/expr.hpp"
#include "orderly/isa.hpp"
#include "orderly/machine.hpp"
#include "orderly/phase.hpp"

namespace oracle {

// ---- concrete interpreter -------------------------------------------------

struct ConcreteState {
    std::array<std::uint64_t, orderly::kRegisterCount> regs{};
    std::array<bool, orderly::kFlagCount> flags{};
    std::map<std::uint64_t, std::uint64_t> memory;
};

/// Runs a straight-line program (no control flow) to its end.
ConcreteState run_straight_line(const orderly::EnclaveImage& image, ConcreteState state);

/// Image with a fixed test layout and a random straight-line body of at most
/// `max_len` instructions. Memory operands stay within trusted data.
orderly::EnclaveImage random_straight_line(std::mt19937_64& rng, std::size_t max_len);

/// The fixed layout used by the generators: base 0x10000, size 0x10000.
orderly::EnclaveLayout test_layout(std::size_t instruction_count);

/// Random well-formed image of any shape, for container round trips.
orderly::EnclaveImage random_image(std::mt19937_64& rng);

// ---- 8-bit constraint language ---------------------------------------------

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
    enum class Op { Var, Const, Add, Sub, Neg, And, Or, Xor, Shl, Shr, Eq, Ult, Slt, Not };
    Op op;
    std::uint8_t value = 0;
    std::vector<TermPtr> kids;
};

/// Value of the term with the single variable set to x (booleans are 0/1).
std::uint8_t eval(const Term& t, std::uint8_t x);

/// The same term built with the library's expression constructors; the
/// variable is the 8-bit symbol `x` with serial 1.
orderly::Expr to_expr(const Term& t);

std::string describe(const Term& t);

/// Random atom over the variable. Affine atoms compare ±x + c with a constant.
TermPtr random_affine_atom(std::mt19937_64& rng);
TermPtr random_nonlinear_atom(std::mt19937_64& rng);

/// True when some x in 0..255 satisfies every atom.
bool brute_force_sat(const std::vector<TermPtr>& atoms);

// ---- sanitisation vectors ----------------------------------------------------

struct SanitisationVector {
    std::string name;
    bool at_entry;                   // entry predicate, else exit predicate
    orderly::MachineState state;
    std::vector<std::string> expect;  // violation details, in check order
};

/// One clean vector per predicate plus one vector per clause in which only
/// that clause fails. Layout: oracle::test_layout.
std::vector<SanitisationVector> sanitisation_vectors();

// ---- phase sequences -------------------------------------------------------

/// Accepts exactly the orderly phase histories: entry, an optional
/// sanitisation mark that precedes any secure phase, secure phases separated
/// by ocalls, then an optional exit and termination.
bool valid_phase_sequence(const std::vector<orderly::PhaseMark>& marks, std::string* rendered = nullptr);

}  // namespace oracle
