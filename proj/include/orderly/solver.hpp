#pragma once

// Satisfiability for path conditions.
//
// Unsat answers are always sound. The backend decides (never answers
// Unknown) when every constraint is either concrete or an Eq/Ult/Slt atom,
// possibly negated, comparing `±sym + const` against a constant: those atoms
// denote wrapped intervals of the symbol, and intersecting them is exact.
// Components mixing several symbols are decided by enumeration when the
// joint domain is small (<= 2^16 assignments), otherwise by a bounded model
// search that can only prove Sat.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "orderly/expr.hpp"

namespace orderly {

enum class SatResult { Sat, Unsat, Unknown };

const char* to_string(SatResult r);

using PathCondition = std::vector<Expr>;

struct SatAnswer {
    SatResult result = SatResult::Unknown;
    Assignment model;  // meaningful only when result == Sat
};

SatAnswer check_sat(std::span<const Expr> constraints);

SatResult is_satisfiable(const PathCondition& pc);

/// Satisfiability of pc ∧ cond.
SatResult query(const PathCondition& pc, const Expr& cond);

/// Unknown counts as possible.
bool may_hold(const PathCondition& pc, const Expr& cond);

struct UniqueValue {
    enum class Kind { Unique, NotUnique, Unknown };
    Kind kind = Kind::Unknown;
    std::uint64_t value = 0;

    bool unique() const { return kind == Kind::Unique; }
};

UniqueValue unique_value(const PathCondition& pc, const Expr& e);

/// Sorted, disjoint, inclusive ranges over [0, 2^width).
class ValueSet {
public:
    using Range = std::pair<std::uint64_t, std::uint64_t>;

    static ValueSet full(unsigned width);
    static ValueSet none(unsigned width);
    /// lo..hi inclusive, wrapping past the maximum when lo > hi.
    static ValueSet wrapped(unsigned width, std::uint64_t lo, std::uint64_t hi);

    unsigned width() const { return width_; }
    bool empty() const { return ranges_.empty(); }
    const std::vector<Range>& ranges() const { return ranges_; }
    bool contains(std::uint64_t v) const;
    /// Number of members, saturating at 2^64 - 1.
    std::uint64_t count() const;

    ValueSet complement() const;
    ValueSet intersect(const ValueSet& other) const;
    /// { v + c mod 2^width }
    ValueSet shifted(std::uint64_t c) const;
    /// { -v mod 2^width }
    ValueSet negated() const;

    bool operator==(const ValueSet&) const = default;

private:
    explicit ValueSet(unsigned width) : width_(width) {}
    void normalise();

    unsigned width_;
    std::vector<Range> ranges_;
};

}  // namespace orderly
