#pragma once

// Fixed-width bitvector terms. Registers and memory words are 64 bits wide,
// flags and conditions 1 bit; other widths (up to 64) are accepted so the
// solver can be exercised on small domains.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace orderly {

enum class ExprOp : std::uint8_t {
    Const, Sym,
    Add, Sub, And, Or, Xor, Shl, LShr,
    Eq, Ult, Slt,
    Not, Ite,
};

class Expr {
public:
    struct Node;

    Expr();  // Const(64, 0)

    ExprOp op() const;
    unsigned width() const;
    std::uint64_t value() const;         // Const only
    const std::string& tag() const;      // Sym only
    std::uint64_t serial() const;        // Sym only
    std::size_t arity() const;
    const Expr& operand(std::size_t i) const;
    std::size_t hash() const;

    bool is_const() const { return op() == ExprOp::Const; }
    bool is_const(std::uint64_t v) const { return is_const() && value() == v; }
    bool is_true() const { return width() == 1 && is_const(1); }
    bool is_false() const { return width() == 1 && is_const(0); }

    /// Structural equality.
    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

private:
    friend Expr make_expr(ExprOp, unsigned, std::uint64_t, std::string, std::uint64_t, std::vector<Expr>);
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

std::uint64_t width_mask(unsigned width);

/// Unsimplified node construction. Throws std::invalid_argument on sort errors.
Expr make_raw(ExprOp op, std::vector<Expr> operands);

Expr constant(unsigned width, std::uint64_t value);
Expr symbol(unsigned width, std::string tag, std::uint64_t serial);
inline Expr bool_const(bool b) { return constant(1, b ? 1 : 0); }

// Simplifying constructors.
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr bit_and(const Expr& a, const Expr& b);
Expr bit_or(const Expr& a, const Expr& b);
Expr bit_xor(const Expr& a, const Expr& b);
Expr shl(const Expr& a, const Expr& b);
Expr lshr(const Expr& a, const Expr& b);
Expr eq(const Expr& a, const Expr& b);
Expr ult(const Expr& a, const Expr& b);
Expr slt(const Expr& a, const Expr& b);
Expr bit_not(const Expr& a);
Expr ite(const Expr& cond, const Expr& then_e, const Expr& else_e);

inline Expr ne(const Expr& a, const Expr& b) { return bit_not(eq(a, b)); }
inline Expr uge(const Expr& a, const Expr& b) { return bit_not(ult(a, b)); }
inline Expr sge(const Expr& a, const Expr& b) { return bit_not(slt(a, b)); }

/// Unsigned `lo <= x < lo + length`, as a single comparison on x - lo.
Expr in_range(const Expr& x, std::uint64_t lo, std::uint64_t length);

/// Rebuilds the term bottom-up through the simplifying constructors.
Expr simplify(const Expr& e);

using Assignment = std::map<std::uint64_t, std::uint64_t>;  // serial -> value

/// Evaluates under an assignment; unassigned symbols read as 0.
std::uint64_t evaluate(const Expr& e, const Assignment& model);

struct SymbolInfo {
    std::uint64_t serial;
    unsigned width;
    auto operator<=>(const SymbolInfo&) const = default;
};
std::set<SymbolInfo> symbols_of(const Expr& e);

/// Compact s-expression rendering: `(add untrusted_fetch#3 0x8)`.
std::string to_string(const Expr& e);

}  // namespace orderly

template <>
struct std::hash<orderly::Expr> {
    std::size_t operator()(const orderly::Expr& e) const noexcept { return e.hash(); }
};
