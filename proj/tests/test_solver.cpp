#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "orderly/solver.hpp"

using namespace orderly;

namespace {

Expr x64() { return symbol(64, "x", 1); }
Expr y64() { return symbol(64, "y", 2); }
Expr c64(std::uint64_t v) { return constant(64, v); }

// Members of a width-8 set, listed by brute force.
std::vector<int> members(const ValueSet& s) {
    std::vector<int> out;
    for (int v = 0; v < 256; ++v) {
        if (s.contains(static_cast<std::uint64_t>(v))) out.push_back(v);
    }
    return out;
}

}  // namespace

TEST(ValueSet, WrappedAndComplement) {
    const auto s = ValueSet::wrapped(8, 250, 3);
    EXPECT_EQ(members(s), (std::vector<int>{0, 1, 2, 3, 250, 251, 252, 253, 254, 255}));
    EXPECT_EQ(s.count(), 10u);
    EXPECT_EQ(s.complement().count(), 246u);
    EXPECT_TRUE(s.intersect(s.complement()).empty());
    EXPECT_EQ(ValueSet::full(64).count(), ~0ULL);
    EXPECT_TRUE(ValueSet::none(8).empty());
}

TEST(ValueSet, ShiftAndNegateMatchBruteForce) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = ValueSet::wrapped(8, byte(rng), byte(rng));
        const auto c = static_cast<std::uint64_t>(byte(rng));
        const auto shifted = s.shifted(c);
        const auto negated = s.negated();
        for (int v = 0; v < 256; ++v) {
            EXPECT_EQ(shifted.contains((v + c) & 0xff), s.contains(v));
            EXPECT_EQ(negated.contains((256 - v) & 0xff), s.contains(v));
        }
    }
}

TEST(Solver, IntervalConjunctions) {
    const Expr x = x64();
    EXPECT_EQ(is_satisfiable({ult(x, c64(10)), uge(x, c64(5))}), SatResult::Sat);
    EXPECT_EQ(is_satisfiable({ult(x, c64(5)), uge(x, c64(5))}), SatResult::Unsat);
    EXPECT_EQ(is_satisfiable({eq(x, c64(7)), ne(x, c64(7))}), SatResult::Unsat);
    EXPECT_EQ(is_satisfiable({in_range(x, 0x100000, 0x10000), uge(x, c64(0x110000))}), SatResult::Unsat);
    EXPECT_EQ(is_satisfiable({slt(x, c64(0)), ult(x, c64(0x8000000000000000ULL))}), SatResult::Unsat);
    EXPECT_EQ(is_satisfiable({}), SatResult::Sat);
    EXPECT_EQ(is_satisfiable({bool_const(false)}), SatResult::Unsat);
}

TEST(Solver, IndependentSymbolsSplit) {
    const Expr x = x64();
    const Expr y = y64();
    EXPECT_EQ(is_satisfiable({ult(x, c64(3)), ult(c64(5), y), eq(y, c64(9))}), SatResult::Sat);
    EXPECT_EQ(is_satisfiable({ult(x, c64(3)), ult(c64(9), y), eq(y, c64(9))}), SatResult::Unsat);
}

TEST(Solver, ModelsSatisfyConstraints) {
    const Expr x = x64();
    const Expr y = y64();
    const PathCondition pc{uge(x, c64(0x110000)), ult(add(x, y), c64(20)), ult(y, c64(0x100))};
    const auto answer = check_sat(pc);
    ASSERT_NE(answer.result, SatResult::Unsat);
    if (answer.result == SatResult::Sat) {
        for (const auto& c : pc) EXPECT_EQ(evaluate(c, answer.model), 1u) << to_string(c);
    }
}

TEST(Solver, UniqueValue) {
    const Expr x = x64();
    auto u = unique_value({eq(x, c64(0x42))}, add(x, c64(1)));
    ASSERT_TRUE(u.unique());
    EXPECT_EQ(u.value, 0x43u);
    EXPECT_EQ(unique_value({ult(x, c64(2))}, x).kind, UniqueValue::Kind::NotUnique);
    EXPECT_EQ(unique_value({}, c64(9)).value, 9u);
    EXPECT_EQ(unique_value({ult(x, c64(0))}, x).kind, UniqueValue::Kind::Unknown);
}

TEST(Solver, QueryAndMayHold) {
    const Expr x = x64();
    const PathCondition pc{uge(x, c64(0x110000))};
    EXPECT_EQ(query(pc, in_range(x, 0x100000, 0x10000)), SatResult::Unsat);
    EXPECT_EQ(query(pc, eq(x, c64(0x110000))), SatResult::Sat);
    EXPECT_FALSE(may_hold(pc, ult(x, c64(0x100))));
}

// Random single-symbol 8-bit conjunctions against exhaustive enumeration.
TEST(Solver, AgreesWithBruteForceOnEightBitConjunctions) {
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<int> count_d(1, 5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<oracle::TermPtr> atoms;
        const int n = count_d(rng);
        for (int k = 0; k < n; ++k) {
            atoms.push_back(trial % 3 == 0 ? oracle::random_nonlinear_atom(rng) : oracle::random_affine_atom(rng));
        }
        PathCondition pc;
        std::string text;
        for (const auto& a : atoms) {
            pc.push_back(oracle::to_expr(*a));
            text += oracle::describe(*a) + " ";
        }
        const bool want = oracle::brute_force_sat(atoms);
        const auto got = check_sat(pc);
        ASSERT_EQ(got.result, want ? SatResult::Sat : SatResult::Unsat) << text;
        if (want) {
            const auto x = static_cast<std::uint8_t>(got.model.count(1) ? got.model.at(1) : 0);
            for (const auto& a : atoms) EXPECT_EQ(oracle::eval(*a, x), 1u) << text;
        }
    }
}
