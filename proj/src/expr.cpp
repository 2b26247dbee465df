#include "orderly/expr.hpp"

#include <sstream>
#include <stdexcept>

namespace orderly {

struct Expr::Node {
    ExprOp op;
    unsigned width;
    std::uint64_t value;
    std::string tag;
    std::uint64_t serial;
    std::vector<Expr> operands;
    std::size_t hash;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::int64_t to_signed(std::uint64_t v, unsigned width) {
    if (width == 64) return static_cast<std::int64_t>(v);
    const std::uint64_t sign = std::uint64_t{1} << (width - 1);
    return static_cast<std::int64_t>((v ^ sign) - sign);
}

bool is_binary_arith(ExprOp op) { return op >= ExprOp::Add && op <= ExprOp::LShr; }
bool is_compare(ExprOp op) { return op >= ExprOp::Eq && op <= ExprOp::Slt; }

std::uint64_t fold_binary(ExprOp op, unsigned w, std::uint64_t a, std::uint64_t b) {
    const std::uint64_t m = width_mask(w);
    switch (op) {
        case ExprOp::Add: return (a + b) & m;
        case ExprOp::Sub: return (a - b) & m;
        case ExprOp::And: return a & b;
        case ExprOp::Or: return a | b;
        case ExprOp::Xor: return a ^ b;
        case ExprOp::Shl: return b >= w ? 0 : (a << b) & m;
        case ExprOp::LShr: return b >= w ? 0 : a >> b;
        case ExprOp::Eq: return a == b ? 1 : 0;
        case ExprOp::Ult: return a < b ? 1 : 0;
        case ExprOp::Slt: return to_signed(a, w) < to_signed(b, w) ? 1 : 0;
        default: break;
    }
    throw std::logic_error("fold_binary: not a binary operator");
}

const char* op_name(ExprOp op) {
    switch (op) {
        case ExprOp::Const: return "const";
        case ExprOp::Sym: return "sym";
        case ExprOp::Add: return "add";
        case ExprOp::Sub: return "sub";
        case ExprOp::And: return "and";
        case ExprOp::Or: return "or";
        case ExprOp::Xor: return "xor";
        case ExprOp::Shl: return "shl";
        case ExprOp::LShr: return "lshr";
        case ExprOp::Eq: return "eq";
        case ExprOp::Ult: return "ult";
        case ExprOp::Slt: return "slt";
        case ExprOp::Not: return "not";
        case ExprOp::Ite: return "ite";
    }
    return "?";
}

}  // namespace

std::uint64_t width_mask(unsigned width) {
    return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

Expr make_expr(ExprOp op, unsigned width, std::uint64_t value, std::string tag, std::uint64_t serial,
               std::vector<Expr> operands) {
    std::size_t h = mix(static_cast<std::size_t>(op), width);
    h = mix(h, value);
    h = mix(h, serial);
    h = mix(h, std::hash<std::string>{}(tag));
    for (const auto& o : operands) h = mix(h, o.hash());
    auto node = std::make_shared<const Expr::Node>(
        Expr::Node{op, width, value, std::move(tag), serial, std::move(operands), h});
    return Expr(std::move(node));
}

Expr::Expr() : Expr(constant(64, 0)) {}

ExprOp Expr::op() const { return node_->op; }
unsigned Expr::width() const { return node_->width; }
std::uint64_t Expr::value() const { return node_->value; }
const std::string& Expr::tag() const { return node_->tag; }
std::uint64_t Expr::serial() const { return node_->serial; }
std::size_t Expr::arity() const { return node_->operands.size(); }
const Expr& Expr::operand(std::size_t i) const { return node_->operands.at(i); }
std::size_t Expr::hash() const { return node_->hash; }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (x.hash != y.hash || x.op != y.op || x.width != y.width || x.value != y.value ||
        x.serial != y.serial || x.tag != y.tag || x.operands.size() != y.operands.size()) {
        return false;
    }
    for (std::size_t i = 0; i < x.operands.size(); ++i) {
        if (!(x.operands[i] == y.operands[i])) return false;
    }
    return true;
}

Expr constant(unsigned width, std::uint64_t value) {
    if (width == 0 || width > 64) throw std::invalid_argument("constant: width out of range");
    if ((value & ~width_mask(width)) != 0) throw std::invalid_argument("constant: value exceeds width");
    return make_expr(ExprOp::Const, width, value, {}, 0, {});
}

Expr symbol(unsigned width, std::string tag, std::uint64_t serial) {
    if (width == 0 || width > 64) throw std::invalid_argument("symbol: width out of range");
    return make_expr(ExprOp::Sym, width, 0, std::move(tag), serial, {});
}

Expr make_raw(ExprOp op, std::vector<Expr> operands) {
    auto expect = [&](std::size_t n) {
        if (operands.size() != n) throw std::invalid_argument(std::string(op_name(op)) + ": wrong arity");
    };
    unsigned width = 0;
    if (is_binary_arith(op) || is_compare(op)) {
        expect(2);
        if (operands[0].width() != operands[1].width()) {
            throw std::invalid_argument(std::string(op_name(op)) + ": operand width mismatch");
        }
        width = is_compare(op) ? 1 : operands[0].width();
    } else if (op == ExprOp::Not) {
        expect(1);
        width = operands[0].width();
    } else if (op == ExprOp::Ite) {
        expect(3);
        if (operands[0].width() != 1) throw std::invalid_argument("ite: condition must be 1 bit");
        if (operands[1].width() != operands[2].width()) throw std::invalid_argument("ite: branch width mismatch");
        width = operands[1].width();
    } else {
        throw std::invalid_argument("make_raw: use constant() or symbol() for leaves");
    }
    return make_expr(op, width, 0, {}, 0, std::move(operands));
}

namespace {

Expr fold(ExprOp op, const Expr& a, const Expr& b) {
    return constant(is_compare(op) ? 1 : a.width(), fold_binary(op, a.width(), a.value(), b.value()));
}

bool is_affine_add(const Expr& e) { return e.op() == ExprOp::Add && e.operand(1).is_const(); }

}  // namespace

Expr add(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::Add, {a, b});
    if (a.is_const() && b.is_const()) return fold(ExprOp::Add, a, b);
    if (a.is_const()) return add(b, a);
    if (b.is_const(0)) return a;
    if (b.is_const() && is_affine_add(a)) {
        return add(a.operand(0), constant(a.width(), (a.operand(1).value() + b.value()) & width_mask(a.width())));
    }
    return make_raw(ExprOp::Add, {a, b});
}

Expr sub(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::Sub, {a, b});
    const unsigned w = a.width();
    if (a.is_const() && b.is_const()) return fold(ExprOp::Sub, a, b);
    if (a == b) return constant(w, 0);
    if (b.is_const()) return add(a, constant(w, (0 - b.value()) & width_mask(w)));
    // (x + c1) - (x + c2), (x + c1) - x, x - (x + c2)
    auto split = [](const Expr& e) -> std::pair<Expr, std::uint64_t> {
        if (is_affine_add(e)) return {e.operand(0), e.operand(1).value()};
        return {e, 0};
    };
    auto [xa, ca] = split(a);
    auto [xb, cb] = split(b);
    if (xa == xb) return constant(w, (ca - cb) & width_mask(w));
    return make_raw(ExprOp::Sub, {a, b});
}

Expr bit_and(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::And, {a, b});
    const unsigned w = a.width();
    if (a.is_const() && b.is_const()) return fold(ExprOp::And, a, b);
    if (a.is_const()) return bit_and(b, a);
    if (b.is_const(0)) return b;
    if (b.is_const(width_mask(w))) return a;
    if (a == b) return a;
    if (b.is_const() && a.op() == ExprOp::And && a.operand(1).is_const()) {
        return bit_and(a.operand(0), constant(w, a.operand(1).value() & b.value()));
    }
    return make_raw(ExprOp::And, {a, b});
}

Expr bit_or(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::Or, {a, b});
    const unsigned w = a.width();
    if (a.is_const() && b.is_const()) return fold(ExprOp::Or, a, b);
    if (a.is_const()) return bit_or(b, a);
    if (b.is_const(0)) return a;
    if (b.is_const(width_mask(w))) return b;
    if (a == b) return a;
    return make_raw(ExprOp::Or, {a, b});
}

Expr bit_xor(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::Xor, {a, b});
    const unsigned w = a.width();
    if (a.is_const() && b.is_const()) return fold(ExprOp::Xor, a, b);
    if (a.is_const()) return bit_xor(b, a);
    if (a == b) return constant(w, 0);
    if (b.is_const(0)) return a;
    if (w == 1 && b.is_const(1)) return bit_not(a);
    // x ^ (x ^ y) = y, in all operand orders.
    if (b.op() == ExprOp::Xor) {
        if (b.operand(0) == a) return b.operand(1);
        if (b.operand(1) == a) return b.operand(0);
    }
    if (a.op() == ExprOp::Xor) {
        if (a.operand(0) == b) return a.operand(1);
        if (a.operand(1) == b) return a.operand(0);
    }
    return make_raw(ExprOp::Xor, {a, b});
}

namespace {

Expr shift(ExprOp op, const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(op, {a, b});
    if (a.is_const() && b.is_const()) return fold(op, a, b);
    if (b.is_const(0)) return a;
    if (b.is_const() && b.value() >= a.width()) return constant(a.width(), 0);
    if (a.is_const(0)) return a;
    return make_raw(op, {a, b});
}

}  // namespace

Expr shl(const Expr& a, const Expr& b) { return shift(ExprOp::Shl, a, b); }
Expr lshr(const Expr& a, const Expr& b) { return shift(ExprOp::LShr, a, b); }

Expr eq(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::Eq, {a, b});
    const unsigned w = a.width();
    if (a.is_const() && b.is_const()) return fold(ExprOp::Eq, a, b);
    if (a == b) return bool_const(true);
    if (a.is_const()) return eq(b, a);
    if (b.is_const()) {
        if (is_affine_add(a)) {
            return eq(a.operand(0), constant(w, (b.value() - a.operand(1).value()) & width_mask(w)));
        }
        if (a.op() == ExprOp::Sub && a.operand(0).is_const()) {  // c1 - x == c2  <=>  x == c1 - c2
            return eq(a.operand(1), constant(w, (a.operand(0).value() - b.value()) & width_mask(w)));
        }
        if (w == 1) return b.value() == 1 ? a : bit_not(a);
    }
    return make_raw(ExprOp::Eq, {a, b});
}

Expr ult(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::Ult, {a, b});
    if (a.is_const() && b.is_const()) return fold(ExprOp::Ult, a, b);
    if (a == b || b.is_const(0) || a.is_const(width_mask(a.width()))) return bool_const(false);
    return make_raw(ExprOp::Ult, {a, b});
}

Expr slt(const Expr& a, const Expr& b) {
    if (a.width() != b.width()) return make_raw(ExprOp::Slt, {a, b});
    if (a.is_const() && b.is_const()) return fold(ExprOp::Slt, a, b);
    if (a == b) return bool_const(false);
    return make_raw(ExprOp::Slt, {a, b});
}

Expr bit_not(const Expr& a) {
    if (a.is_const()) return constant(a.width(), ~a.value() & width_mask(a.width()));
    if (a.op() == ExprOp::Not) return a.operand(0);
    return make_raw(ExprOp::Not, {a});
}

Expr ite(const Expr& cond, const Expr& then_e, const Expr& else_e) {
    if (cond.width() != 1 || then_e.width() != else_e.width()) return make_raw(ExprOp::Ite, {cond, then_e, else_e});
    if (cond.is_const()) return cond.value() ? then_e : else_e;
    if (then_e == else_e) return then_e;
    if (then_e.width() == 1 && then_e.is_const(1) && else_e.is_const(0)) return cond;
    if (then_e.width() == 1 && then_e.is_const(0) && else_e.is_const(1)) return bit_not(cond);
    return make_raw(ExprOp::Ite, {cond, then_e, else_e});
}

Expr in_range(const Expr& x, std::uint64_t lo, std::uint64_t length) {
    const unsigned w = x.width();
    const std::uint64_t m = width_mask(w);
    if (length > m) return bool_const(true);
    return ult(sub(x, constant(w, lo & m)), constant(w, length));
}

Expr simplify(const Expr& e) {
    switch (e.op()) {
        case ExprOp::Const:
        case ExprOp::Sym: return e;
        case ExprOp::Not: return bit_not(simplify(e.operand(0)));
        case ExprOp::Ite: return ite(simplify(e.operand(0)), simplify(e.operand(1)), simplify(e.operand(2)));
        default: break;
    }
    const Expr a = simplify(e.operand(0));
    const Expr b = simplify(e.operand(1));
    switch (e.op()) {
        case ExprOp::Add: return add(a, b);
        case ExprOp::Sub: return sub(a, b);
        case ExprOp::And: return bit_and(a, b);
        case ExprOp::Or: return bit_or(a, b);
        case ExprOp::Xor: return bit_xor(a, b);
        case ExprOp::Shl: return shl(a, b);
        case ExprOp::LShr: return lshr(a, b);
        case ExprOp::Eq: return eq(a, b);
        case ExprOp::Ult: return ult(a, b);
        case ExprOp::Slt: return slt(a, b);
        default: break;
    }
    throw std::logic_error("simplify: unreachable");
}

std::uint64_t evaluate(const Expr& e, const Assignment& model) {
    switch (e.op()) {
        case ExprOp::Const: return e.value();
        case ExprOp::Sym: {
            auto it = model.find(e.serial());
            return it == model.end() ? 0 : it->second & width_mask(e.width());
        }
        case ExprOp::Not: return ~evaluate(e.operand(0), model) & width_mask(e.width());
        case ExprOp::Ite:
            return evaluate(e.operand(0), model) ? evaluate(e.operand(1), model) : evaluate(e.operand(2), model);
        default: break;
    }
    return fold_binary(e.op(), e.operand(0).width(), evaluate(e.operand(0), model), evaluate(e.operand(1), model));
}

namespace {

void collect_symbols(const Expr& e, std::set<SymbolInfo>& out) {
    if (e.op() == ExprOp::Sym) {
        out.insert({e.serial(), e.width()});
        return;
    }
    for (std::size_t i = 0; i < e.arity(); ++i) collect_symbols(e.operand(i), out);
}

void render(const Expr& e, std::ostream& os) {
    switch (e.op()) {
        case ExprOp::Const: os << "0x" << std::hex << e.value() << std::dec; return;
        case ExprOp::Sym: os << e.tag() << '#' << e.serial(); return;
        default: break;
    }
    os << '(' << op_name(e.op());
    for (std::size_t i = 0; i < e.arity(); ++i) {
        os << ' ';
        render(e.operand(i), os);
    }
    os << ')';
}

}  // namespace

std::set<SymbolInfo> symbols_of(const Expr& e) {
    std::set<SymbolInfo> out;
    collect_symbols(e, out);
    return out;
}

std::string to_string(const Expr& e) {
    std::ostringstream os;
    render(e, os);
    return os.str();
}

}  // namespace orderly
